//! Arrival traces: generation and CSV files of `arrival_time_s,job_ref`.
//!
//! A `job_ref` is either a bundled workload name or a path to a job file
//! (relative to the trace file).

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::jobfile::load_job;
use super::{HptJob, Mode};
use crate::error::{Error, Result};
use crate::model::Family;
use crate::simulator::{catalog, mix_seed, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub arrival_time_s: f64,
    pub job_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSpec {
    pub jobs: usize,
    /// Arrivals per second.
    pub rate: f64,
    /// Share of jobs whose workload is absent from the warm-start sweep.
    pub unseen_fraction: f64,
    pub seed: u64,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            jobs: 20,
            rate: 1.0 / 20_000.0,
            unseen_fraction: 0.2,
            seed: 0,
        }
    }
}

const SEEN_TYPE_I: [&str; 2] = ["lenet5-mnist", "lenet5-fashion-mnist"];
const SEEN_TYPE_II: [&str; 2] = ["cnn-news20", "lstm-news20"];

fn holdout_for(family: Family) -> &'static str {
    catalog::holdout_workloads()
        .into_iter()
        .find(|(_, w)| w.family == family)
        .map(|(n, _)| n)
        .expect("a holdout per family")
}

/// Exponential interarrivals; jobs alternate Type-I and Type-II; exactly
/// `round(unseen_fraction * jobs)` of them use holdout workloads.
pub fn generate_trace(spec: &TraceSpec) -> Result<Vec<TraceEntry>> {
    if !(spec.rate.is_finite() && spec.rate > 0.0) {
        return Err(Error::InvalidParameter("arrival rate must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.unseen_fraction) {
        return Err(Error::InvalidParameter("unseen fraction must lie in [0, 1]".into()));
    }
    let unseen = (spec.unseen_fraction * spec.jobs as f64).round() as usize;
    let mut positions: Vec<usize> = (0..spec.jobs).collect();
    positions.shuffle(&mut stream_rng(spec.seed, 0, 0x756e));
    let unseen: Vec<usize> = positions.into_iter().take(unseen).collect();

    let mut rng = stream_rng(spec.seed, 0, 0x6172);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(spec.jobs);
    for i in 0..spec.jobs {
        if i > 0 {
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / spec.rate;
        }
        let (family, seen) = if i % 2 == 0 {
            (Family::TypeI, SEEN_TYPE_I)
        } else {
            (Family::TypeII, SEEN_TYPE_II)
        };
        let name = if unseen.contains(&i) {
            holdout_for(family)
        } else {
            seen[(i / 2) % 2]
        };
        out.push(TraceEntry {
            arrival_time_s: t,
            job_ref: name.to_string(),
        });
    }
    Ok(out)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceEntry>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let context = path.display().to_string();
    let mut reader = csv::Reader::from_reader(file);
    let mut out: Vec<TraceEntry> = Vec::new();
    for row in reader.deserialize() {
        let entry: TraceEntry = row.map_err(|e| Error::parse(&context, e))?;
        if !(entry.arrival_time_s.is_finite() && entry.arrival_time_s >= 0.0) {
            return Err(Error::parse(&context, format!("bad arrival time {}", entry.arrival_time_s)));
        }
        if out.last().is_some_and(|p| p.arrival_time_s > entry.arrival_time_s) {
            return Err(Error::parse(&context, "arrival times must be nondecreasing"));
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn write_trace(path: impl AsRef<Path>, entries: &[TraceEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path.display().to_string(), e))?;
    for e in entries {
        w.serialize(e).map_err(|e| Error::parse(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Turns trace rows into jobs. Job `i` is named `job-NNN` and seeded from
/// `seed` and `i`.
pub fn jobs_from_trace(entries: &[TraceEntry], mode: Mode, seed: u64, base_dir: &Path) -> Result<Vec<HptJob>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let job_seed = mix_seed(seed, &[i as u64]);
            let mut job = match catalog::workload(&e.job_ref) {
                Some(w) => HptJob::new(format!("job-{i:03}"), e.job_ref.clone(), w, mode, job_seed),
                None => {
                    let mut job = load_job(base_dir.join(&e.job_ref), mode, Some(job_seed))?;
                    job.job_id = format!("job-{i:03}");
                    job
                }
            };
            job.arrival_time_s = e.arrival_time_s;
            Ok(job)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_shape() {
        let spec = TraceSpec {
            jobs: 20,
            seed: 4,
            ..TraceSpec::default()
        };
        let trace = generate_trace(&spec).unwrap();
        assert_eq!(trace.len(), 20);
        assert_eq!(trace[0].arrival_time_s, 0.0);
        assert!(trace.windows(2).all(|w| w[0].arrival_time_s <= w[1].arrival_time_s));
        let holdouts: Vec<&str> = catalog::holdout_workloads().iter().map(|(n, _)| *n).collect();
        let unseen = trace.iter().filter(|e| holdouts.contains(&e.job_ref.as_str())).count();
        assert_eq!(unseen, 4);
        for (i, e) in trace.iter().enumerate() {
            let family = catalog::workload(&e.job_ref).unwrap().family;
            assert_eq!(family, if i % 2 == 0 { Family::TypeI } else { Family::TypeII });
        }
        assert_eq!(generate_trace(&spec).unwrap(), trace);
    }

    #[test]
    fn trace_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = generate_trace(&TraceSpec::default()).unwrap();
        write_trace(&path, &trace).unwrap();
        assert_eq!(read_trace(&path).unwrap(), trace);
        std::fs::write(&path, "arrival_time_s,job_ref\n5,lenet5-mnist\n1,gru-imdb\n").unwrap();
        assert!(read_trace(&path).is_err());
    }
}
