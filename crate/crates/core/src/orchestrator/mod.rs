//! Hyperparameter-tuning jobs on a shared cluster, in virtual time.
//!
//! Jobs are admitted in FIFO order. Each job drives its search scheduler
//! and keeps up to `max_parallel_trials` trials running. A trial's outcome
//! is computed when it is dispatched, using the ground truth as it stands at
//! that instant; its ground-truth update lands when it completes. Everything
//! runs on one thread, so a run is a pure function of its inputs.

mod cluster;
mod engine;
pub mod jobfile;
pub mod trace;
mod tuner;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cluster::{AllocationKey, ClusterSpec, ClusterState};
pub use engine::{run_job, run_queue};
pub use tuner::{run_trial_fixed, run_trial_pipelined, TunePath, TunedTrial, TunerConfig};

use crate::error::{Error, Result};
use crate::hpo::{Algorithm, Proposal, SearchSpace};
use crate::model::{enumerate_system_grid, Family, HyperParams, Objective, SystemConfig, WorkloadSpec, DEFAULT_SYSTEM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Hyperparameters only, maximizing accuracy, fixed system configuration.
    V1,
    /// System parameters searched as hyperparameters, maximizing accuracy per second.
    V2,
    /// Hyperparameters as in V1 with per-trial system tuning.
    PipeTune,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::V1, Mode::V2, Mode::PipeTune];

    pub fn label(&self) -> &'static str {
        match self {
            Mode::V1 => "v1",
            Mode::V2 => "v2",
            Mode::PipeTune => "pipetune",
        }
    }

    pub fn objective(&self) -> Objective {
        match self {
            Mode::V2 => Objective::MaxAccuracyPerSecond,
            Mode::V1 | Mode::PipeTune => Objective::MaxAccuracy,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v1" => Ok(Mode::V1),
            "v2" => Ok(Mode::V2),
            "pipetune" => Ok(Mode::PipeTune),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HptJob {
    pub job_id: String,
    /// Catalog name or file the workload came from.
    pub workload_name: String,
    pub workload: Arc<WorkloadSpec>,
    pub search_space: SearchSpace,
    pub objective: Objective,
    pub mode: Mode,
    pub arrival_time_s: f64,
    pub max_parallel_trials: usize,
    pub algorithm: Algorithm,
    /// Configuration of untuned trials, and of every trial's first epoch.
    pub default_system: SystemConfig,
    pub seed: u64,
}

impl HptJob {
    /// A job with the default search space and HyperBand settings.
    pub fn new(job_id: impl Into<String>, workload_name: impl Into<String>, workload: Arc<WorkloadSpec>, mode: Mode, seed: u64) -> Self {
        Self {
            job_id: job_id.into(),
            workload_name: workload_name.into(),
            workload,
            search_space: SearchSpace::default(),
            objective: mode.objective(),
            mode,
            arrival_time_s: 0.0,
            max_parallel_trials: 4,
            algorithm: Algorithm::default(),
            default_system: DEFAULT_SYSTEM,
            seed,
        }
        .with_mode(mode)
    }

    /// Re-targets the job to `mode`, adjusting search space and objective.
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self.objective = mode.objective();
        self.search_space = match mode {
            Mode::V2 => self.search_space.with_systems(enumerate_system_grid()),
            Mode::V1 | Mode::PipeTune => self.search_space.without_systems(),
        };
        self
    }

    pub fn check(&self) -> Result<()> {
        self.workload.check()?;
        self.search_space.check()?;
        if self.search_space.has_systems() != (self.mode == Mode::V2) {
            return Err(Error::InvalidParameter(format!(
                "job {}: only V2 searches system parameters",
                self.job_id
            )));
        }
        if self.max_parallel_trials == 0 {
            return Err(Error::InvalidParameter(format!("job {}: max_parallel_trials must be positive", self.job_id)));
        }
        if !(self.arrival_time_s.is_finite() && self.arrival_time_s >= 0.0) {
            return Err(Error::InvalidParameter(format!("job {}: arrival time must be nonnegative", self.job_id)));
        }
        if !self.default_system.is_valid() {
            return Err(Error::InvalidParameter(format!(
                "job {}: default system {} is off the grid",
                self.job_id, self.default_system
            )));
        }
        Ok(())
    }
}

/// Engine-wide settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub cluster: ClusterSpec,
    pub tuner: TunerConfig,
    /// Resources held by a tuned trial; covers any configuration it may switch to.
    pub tuned_reservation: SystemConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            cluster: ClusterSpec::default(),
            tuner: TunerConfig::default(),
            tuned_reservation: SystemConfig::max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub trial_id: u64,
    pub proposal: Proposal,
    pub seed: u64,
    pub start_s: f64,
    pub end_s: f64,
    pub node: usize,
    pub score: f64,
    pub tuned: TunedTrial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome {
    pub job_id: String,
    pub workload_name: String,
    pub family: Family,
    pub mode: Mode,
    pub best_trial: u64,
    pub best_hyper: HyperParams,
    pub best_system: SystemConfig,
    pub final_accuracy: f64,
    /// Training time of the best trial.
    pub training_time_s: f64,
    /// First dispatch to last completion.
    pub tuning_time_s: f64,
    pub total_energy_j: f64,
    pub response_time_s: f64,
    pub arrival_time_s: f64,
    pub start_s: f64,
    pub completion_s: f64,
    /// Trials in completion order.
    pub trials: Vec<TrialRun>,
}

impl JobOutcome {
    /// Proposed hyperparameters in issue order.
    pub fn proposals(&self) -> Vec<HyperParams> {
        let mut runs: Vec<&TrialRun> = self.trials.iter().collect();
        runs.sort_by_key(|r| r.trial_id);
        runs.iter().map(|r| r.proposal.candidate.hyper).collect()
    }

    pub fn trial(&self, trial_id: u64) -> Option<&TrialRun> {
        self.trials.iter().find(|t| t.trial_id == trial_id)
    }
}
