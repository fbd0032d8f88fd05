//! Offline profiling sweep used to build a warm-start model.
//!
//! Every workload is profiled for one epoch under each batch size and each
//! grid configuration, a fixed number of times with different seeds. Each
//! profile is recorded with the configuration it ran under and its speedup
//! over the reference configuration.

use std::sync::Arc;

use crate::error::Result;
use crate::model::{enumerate_system_grid, Family, HyperParams, SystemConfig, TrialSpec, WorkloadSpec, DEFAULT_SYSTEM};
use crate::simulator::{epoch_record, mix_seed};

use super::{ClusterModel, GroundTruthConfig, HistoryEntry};

pub const SWEEP_BATCH_SIZES: [u32; 4] = [32, 64, 512, 1024];
pub const SWEEP_REPETITIONS: u32 = 2;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub workloads: Vec<(String, Arc<WorkloadSpec>)>,
    pub batch_sizes: Vec<u32>,
    pub systems: Vec<SystemConfig>,
    pub repetitions: u32,
    /// Configuration speedups are measured against.
    pub reference: SystemConfig,
    pub seed: u64,
}

impl SweepSpec {
    /// The full sweep over the given workloads.
    pub fn standard(workloads: Vec<(String, Arc<WorkloadSpec>)>, seed: u64) -> Self {
        Self {
            workloads,
            batch_sizes: SWEEP_BATCH_SIZES.to_vec(),
            systems: enumerate_system_grid(),
            repetitions: SWEEP_REPETITIONS,
            reference: DEFAULT_SYSTEM,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.workloads.len() * self.batch_sizes.len() * self.systems.len() * self.repetitions as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub workload: String,
    pub family: Family,
    pub batch_size: u32,
    pub system: SystemConfig,
    pub repetition: u32,
    pub entry: HistoryEntry<f64>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(spec.len());
    for (wi, (name, workload)) in spec.workloads.iter().enumerate() {
        for &batch_size in &spec.batch_sizes {
            let hyper = HyperParams {
                batch_size,
                ..HyperParams::default()
            };
            for (si, &system) in spec.systems.iter().enumerate() {
                for repetition in 0..spec.repetitions {
                    let trial = TrialSpec {
                        workload: workload.clone(),
                        hyper,
                        initial_system: system,
                        trial_id: out.len() as u64,
                        seed: mix_seed(
                            spec.seed,
                            &[wi as u64, batch_size as u64, si as u64, repetition as u64],
                        ),
                    };
                    let reference = epoch_record(&trial, spec.reference, 1, 1.0, false)?;
                    let record = epoch_record(&trial, system, 1, 1.0, true)?;
                    let profile = record.profile.expect("profiled epoch");
                    let speedup = reference.duration_s / record.duration_s;
                    out.push(SweepPoint {
                        workload: name.clone(),
                        family: workload.family,
                        batch_size,
                        system,
                        repetition,
                        entry: HistoryEntry::with_result(profile, system, speedup, batch_size),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Runs the sweep and fits a model on it.
pub fn warm_start(spec: &SweepSpec, config: GroundTruthConfig) -> Result<(ClusterModel<f64>, Vec<SweepPoint>)> {
    let points = run_sweep(spec)?;
    let history = points.iter().map(|p| p.entry.clone()).collect();
    Ok((ClusterModel::fit(history, config)?, points))
}
