//! Shared plumbing: ground-truth loading, metric recording, CSV writing.

use std::collections::hash_map::DefaultHasher;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use anyhow::Context;
use ptune_core::ground_truth::sweep::{warm_start, SweepSpec};
use ptune_core::ground_truth::{ClusterModel, GroundTruthConfig};
use ptune_core::metric_store::{tags, MetricStore, SeriesPoint};
use ptune_core::orchestrator::JobOutcome;
use ptune_core::simulator::catalog;

pub const MODEL_FILE: &str = "ground-truth.json";

pub fn model_path(data_dir: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit.map_or_else(|| data_dir.join(MODEL_FILE), Path::to_path_buf)
}

/// The saved model, or a fresh one fitted on the default profiling sweep.
pub fn load_or_warm_start(path: &Path) -> anyhow::Result<(ClusterModel<f64>, String)> {
    if path.is_file() {
        let model = ClusterModel::load(path)?;
        return Ok((model, path.display().to_string()));
    }
    let (model, _) = default_sweep_model(0)?;
    Ok((model, "default profiling sweep".to_string()))
}

pub fn default_sweep_model(seed: u64) -> anyhow::Result<(ClusterModel<f64>, usize)> {
    let workloads = catalog::default_workloads()
        .into_iter()
        .map(|(n, w)| (n.to_string(), w))
        .collect();
    let (model, points) = warm_start(&SweepSpec::standard(workloads, seed), GroundTruthConfig::default())?;
    Ok((model, points.len()))
}

/// Stable identifier for a run's inputs, used to tag its metrics.
pub fn run_id(label: &str, inputs: &impl std::fmt::Debug) -> String {
    let mut h = DefaultHasher::new();
    format!("{inputs:?}").hash(&mut h);
    format!("{label}-{:08x}", h.finish() as u32)
}

/// Records a job's outcome, its trials and, when `epochs` is set, every
/// epoch.
pub fn record_job(store: &MetricStore, kind: &str, run: &str, o: &JobOutcome, epochs: bool) -> anyhow::Result<()> {
    let base = tags([
        ("kind", kind),
        ("run", run),
        ("mode", o.mode.label()),
        ("job", o.job_id.as_str()),
    ]);
    let with = |extra: &[(&str, String)]| {
        let mut t = base.clone();
        for (k, v) in extra {
            t.insert(k.to_string(), v.clone());
        }
        t
    };
    let job_tags = with(&[
        ("workload", o.workload_name.clone()),
        ("family", o.family.label().to_string()),
    ]);
    let mut points = vec![
        SeriesPoint::new("job.accuracy", job_tags.clone(), o.completion_s, o.final_accuracy),
        SeriesPoint::new("job.training_time_s", job_tags.clone(), o.completion_s, o.training_time_s),
        SeriesPoint::new("job.tuning_time_s", job_tags.clone(), o.completion_s, o.tuning_time_s),
        SeriesPoint::new("job.energy_j", job_tags.clone(), o.completion_s, o.total_energy_j),
        SeriesPoint::new("job.response_time_s", job_tags, o.completion_s, o.response_time_s),
    ];
    for t in &o.trials {
        let trial_tags = with(&[("trial", t.trial_id.to_string())]);
        let rel_end = t.end_s - o.start_s;
        points.push(SeriesPoint::new("trial.accuracy", trial_tags.clone(), rel_end, t.tuned.result.final_accuracy));
        points.push(SeriesPoint::new(
            "trial.training_time_s",
            trial_tags,
            rel_end,
            t.tuned.result.training_time_s,
        ));
        if epochs {
            let mut clock = t.start_s - o.start_s;
            for e in &t.tuned.result.epochs {
                clock += e.duration_s;
                let epoch_tags = with(&[("trial", t.trial_id.to_string()), ("epoch", e.index.to_string())]);
                points.push(SeriesPoint::new("epoch.duration_s", epoch_tags.clone(), clock, e.duration_s));
                points.push(SeriesPoint::new("epoch.energy_j", epoch_tags, clock, e.energy_j));
            }
        }
    }
    store
        .append_batch(points)
        .with_context(|| format!("recording {} ({})", o.job_id, o.mode))?;
    Ok(())
}

pub fn csv_writer(dir: &Path, name: &str) -> anyhow::Result<csv::Writer<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}
