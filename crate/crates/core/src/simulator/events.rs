use std::sync::OnceLock;

use serde::Deserialize;

use crate::model::SystemConfig;
use crate::profiler::EVENT_COUNT;

#[derive(Debug, Deserialize)]
struct EventTable {
    event: Vec<EventDef>,
}

#[derive(Debug, Deserialize)]
struct EventDef {
    name: String,
    scale: f64,
    core_loading: f64,
    memory_loading: f64,
}

fn table() -> &'static EventTable {
    static TABLE: OnceLock<EventTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let table: EventTable = toml::from_str(include_str!("../../data/events.toml"))
            .expect("bundled event table parses");
        assert_eq!(table.event.len(), EVENT_COUNT);
        table
    })
}

/// Names of the monitored events, by index.
pub fn event_names() -> Vec<&'static str> {
    table().event.iter().map(|e| e.name.as_str()).collect()
}

/// Fixed per-event contribution of a system configuration to event rates.
///
/// Rates grow linearly with cores and logarithmically with memory.
pub fn system_embedding(s: SystemConfig) -> [f64; EVENT_COUNT] {
    let cores = s.cores as f64 / 4.0;
    let memory = (s.memory_gb as f64 / 4.0).log2();
    let mut out = [0.0; EVENT_COUNT];
    for (o, e) in out.iter_mut().zip(&table().event) {
        *o = e.scale * (e.core_loading * cores + e.memory_loading * memory);
    }
    out
}
