//! Bundled workloads.
//!
//! Six default workloads mirror the three families (two each). Two holdout
//! workloads are never part of the default profiling sweep and stand in for
//! jobs the ground-truth model has not seen.

use std::sync::{Arc, OnceLock};

use crate::model::WorkloadSpec;

const DEFAULT_FILES: [(&str, &str); 6] = [
    ("lenet5-mnist", include_str!("../../data/workloads/lenet5-mnist.toml")),
    (
        "lenet5-fashion-mnist",
        include_str!("../../data/workloads/lenet5-fashion-mnist.toml"),
    ),
    ("cnn-news20", include_str!("../../data/workloads/cnn-news20.toml")),
    ("lstm-news20", include_str!("../../data/workloads/lstm-news20.toml")),
    ("jacobi-rodinia", include_str!("../../data/workloads/jacobi-rodinia.toml")),
    (
        "spk-means-rodinia",
        include_str!("../../data/workloads/spk-means-rodinia.toml"),
    ),
];

const HOLDOUT_FILES: [(&str, &str); 2] = [
    (
        "alexnet-mini-cifar10",
        include_str!("../../data/holdout/alexnet-mini-cifar10.toml"),
    ),
    ("gru-imdb", include_str!("../../data/holdout/gru-imdb.toml")),
];

/// The LeNet-on-MNIST-like workload used for single-job comparisons.
pub const REFERENCE_WORKLOAD: &str = "lenet5-mnist";

type Catalog = Vec<(&'static str, Arc<WorkloadSpec>)>;

fn parse(files: &[(&'static str, &'static str)]) -> Catalog {
    files
        .iter()
        .map(|&(name, text)| {
            let spec = WorkloadSpec::from_toml_str(text, name)
                .unwrap_or_else(|e| panic!("bundled workload {name}: {e}"));
            (name, Arc::new(spec))
        })
        .collect()
}

fn defaults() -> &'static Catalog {
    static CELL: OnceLock<Catalog> = OnceLock::new();
    CELL.get_or_init(|| parse(&DEFAULT_FILES))
}

fn holdouts() -> &'static Catalog {
    static CELL: OnceLock<Catalog> = OnceLock::new();
    CELL.get_or_init(|| parse(&HOLDOUT_FILES))
}

/// The six default workloads with their names, in a fixed order.
pub fn default_workloads() -> Vec<(&'static str, Arc<WorkloadSpec>)> {
    defaults().clone()
}

pub fn holdout_workloads() -> Vec<(&'static str, Arc<WorkloadSpec>)> {
    holdouts().clone()
}

/// Looks a bundled workload up by name (default or holdout).
pub fn workload(name: &str) -> Option<Arc<WorkloadSpec>> {
    defaults()
        .iter()
        .chain(holdouts().iter())
        .find(|(n, _)| *n == name)
        .map(|(_, w)| w.clone())
}

pub fn names() -> Vec<&'static str> {
    defaults()
        .iter()
        .chain(holdouts().iter())
        .map(|(n, _)| *n)
        .collect()
}

/// Reverse lookup from a `model/dataset` key.
pub fn name_for_key(key: &str) -> Option<&'static str> {
    defaults()
        .iter()
        .chain(holdouts().iter())
        .find(|(_, w)| w.key() == key)
        .map(|(n, _)| *n)
}
