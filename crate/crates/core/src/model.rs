//! Domain types shared across the engine: hyperparameters, system
//! configurations, workloads, trials and the two tuning objectives.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiler::EpochProfile;
use crate::simulator::SimCalibration;

/// Allowed core counts, ascending.
pub const CORE_CHOICES: [u32; 3] = [4, 8, 16];
/// Allowed memory sizes in GB, ascending.
pub const MEMORY_CHOICES_GB: [u32; 4] = [4, 8, 16, 32];

pub const BATCH_SIZE_RANGE: (u32, u32) = (32, 1024);
pub const DROPOUT_RANGE: (f64, f64) = (0.0, 0.5);
pub const EMBEDDING_DIMS_RANGE: (u32, u32) = (50, 300);
pub const LEARNING_RATE_RANGE: (f64, f64) = (0.001, 0.1);
pub const NUM_EPOCHS_RANGE: (u32, u32) = (10, 100);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub batch_size: u32,
    pub dropout_rate: f64,
    pub embedding_dims: u32,
    pub learning_rate: f64,
    pub num_epochs: u32,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            batch_size: 64,
            dropout_rate: 0.25,
            embedding_dims: 100,
            learning_rate: 0.01,
            num_epochs: 81,
        }
    }
}

impl HyperParams {
    /// Checks every range constraint, returning all violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        let mut check = |field: &'static str, ok: bool, value: String, allowed: String| {
            if !ok {
                violations.push(Violation {
                    field,
                    value,
                    allowed,
                });
            }
        };
        let (lo, hi) = BATCH_SIZE_RANGE;
        check(
            "batch_size",
            (lo..=hi).contains(&self.batch_size),
            self.batch_size.to_string(),
            format!("[{lo}, {hi}]"),
        );
        let (lo, hi) = DROPOUT_RANGE;
        check(
            "dropout_rate",
            (lo..=hi).contains(&self.dropout_rate),
            self.dropout_rate.to_string(),
            format!("[{lo}, {hi}]"),
        );
        let (lo, hi) = EMBEDDING_DIMS_RANGE;
        check(
            "embedding_dims",
            (lo..=hi).contains(&self.embedding_dims),
            self.embedding_dims.to_string(),
            format!("[{lo}, {hi}]"),
        );
        let (lo, hi) = LEARNING_RATE_RANGE;
        check(
            "learning_rate",
            (lo..=hi).contains(&self.learning_rate),
            self.learning_rate.to_string(),
            format!("[{lo}, {hi}]"),
        );
        let (lo, hi) = NUM_EPOCHS_RANGE;
        check(
            "num_epochs",
            (lo..=hi).contains(&self.num_epochs),
            self.num_epochs.to_string(),
            format!("[{lo}, {hi}]"),
        );
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }
}

/// Free-function form of [`HyperParams::validate`].
pub fn validate(hyper: &HyperParams) -> std::result::Result<(), Vec<Violation>> {
    hyper.validate()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub value: String,
    pub allowed: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} outside {}", self.field, self.value, self.allowed)
    }
}

/// A (cores, memory) allocation for one training trial.
///
/// The derived ordering is lexicographic on (cores, memory), which is both
/// the grid enumeration order and the "cheaper footprint first" tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemConfig {
    pub cores: u32,
    pub memory_gb: u32,
}

impl SystemConfig {
    pub const fn new(cores: u32, memory_gb: u32) -> Self {
        Self { cores, memory_gb }
    }

    pub fn is_valid(&self) -> bool {
        CORE_CHOICES.contains(&self.cores) && MEMORY_CHOICES_GB.contains(&self.memory_gb)
    }

    /// Largest configuration on the grid.
    pub const fn max() -> Self {
        Self::new(16, 32)
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}c/{}GB", self.cores, self.memory_gb)
    }
}

/// System configuration applied when nothing is tuned: every core of a
/// 16-core allocation with modest memory.
pub const DEFAULT_SYSTEM: SystemConfig = SystemConfig::new(16, 8);

/// Full cross product of allowed cores and memory, in (cores, memory) order.
pub fn enumerate_system_grid() -> Vec<SystemConfig> {
    CORE_CHOICES
        .iter()
        .flat_map(|&cores| {
            MEMORY_CHOICES_GB
                .iter()
                .map(move |&memory_gb| SystemConfig { cores, memory_gb })
        })
        .collect()
}

/// Workload family. Type-I shares a model across datasets, Type-II shares a
/// dataset across models, Type-III are short-epoch single-node jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "type-i", alias = "TypeI")]
    TypeI,
    #[serde(rename = "type-ii", alias = "TypeII")]
    TypeII,
    #[serde(rename = "type-iii", alias = "TypeIII")]
    TypeIII,
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::TypeI => "type-i",
            Family::TypeII => "type-ii",
            Family::TypeIII => "type-iii",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub model_id: String,
    pub dataset_id: String,
    pub samples_per_epoch: u64,
    pub family: Family,
    pub calibration: SimCalibration,
}

impl WorkloadSpec {
    /// `model/dataset`, the workload's identity.
    pub fn key(&self) -> String {
        format!("{}/{}", self.model_id, self.dataset_id)
    }

    pub fn check(&self) -> Result<()> {
        if self.samples_per_epoch == 0 {
            return Err(Error::InvalidParameter(format!(
                "{}: samples_per_epoch must be positive",
                self.key()
            )));
        }
        self.calibration
            .check()
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", self.key())))
    }

    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        let spec: WorkloadSpec = toml::from_str(text).map_err(|e| Error::parse(context, e))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("workload spec serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "max-accuracy", alias = "MaxAccuracy")]
    MaxAccuracy,
    #[serde(rename = "max-accuracy-per-second", alias = "MaxAccuracyPerSecond")]
    MaxAccuracyPerSecond,
}

impl Objective {
    pub fn evaluate(&self, accuracy: f64, training_time_s: f64) -> Result<f64> {
        match self {
            Objective::MaxAccuracy => Ok(accuracy),
            Objective::MaxAccuracyPerSecond => {
                if training_time_s > 0.0 {
                    Ok(accuracy / training_time_s)
                } else {
                    Err(Error::Domain(format!(
                        "accuracy-per-second objective needs positive training time, got {training_time_s}"
                    )))
                }
            }
        }
    }
}

/// Scores a finished trial under `objective`.
pub fn score(result: &TrialResult, objective: Objective) -> Result<f64> {
    objective.evaluate(result.final_accuracy, result.training_time_s)
}

#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub workload: Arc<WorkloadSpec>,
    pub hyper: HyperParams,
    pub initial_system: SystemConfig,
    pub trial_id: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub index: u32,
    pub duration_s: f64,
    pub accuracy_after: f64,
    pub energy_j: f64,
    pub system: SystemConfig,
    pub profile: Option<EpochProfile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub final_accuracy: f64,
    pub training_time_s: f64,
    pub energy_j: f64,
    pub epochs: Vec<EpochRecord>,
    pub chosen_system: SystemConfig,
}

impl TrialResult {
    /// Assembles a result from its epochs; totals are sums over epochs.
    pub fn from_epochs(epochs: Vec<EpochRecord>) -> Result<Self> {
        let last = epochs.last().ok_or(Error::Empty("trial has no epochs"))?;
        Ok(Self {
            final_accuracy: last.accuracy_after,
            chosen_system: last.system,
            training_time_s: epochs.iter().map(|e| e.duration_s).sum(),
            energy_j: epochs.iter().map(|e| e.energy_j).sum(),
            epochs,
        })
    }

    /// Per-epoch system schedule.
    pub fn schedule(&self) -> Vec<SystemConfig> {
        self.epochs.iter().map(|e| e.system).collect()
    }
}
