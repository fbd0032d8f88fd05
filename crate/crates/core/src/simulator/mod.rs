//! Deterministic stand-in for distributed mini-batch SGD training.
//!
//! Given a workload, hyperparameters, a system configuration and an epoch
//! index, the simulator produces the epoch's duration, the accuracy reached
//! after it, a 1 Hz power trace and per-second hardware event samples. All
//! randomness is derived from the trial seed, so equal inputs give
//! bit-identical outputs.
//!
//! Cost model (per epoch, `S` samples, batch `B`, `c` cores):
//!
//! ```text
//! t = kappa * S / c + sigma * c * S / B        (x spill_factor below mem_floor_gb)
//! ```
//!
//! The second term is the per-update synchronization cost, which grows with
//! the number of cores and dominates for small batches. Accuracy follows a
//! saturating exponential in the epoch index whose ceiling is penalized by
//! large batches, a learning rate away from `lr_opt` and low dropout. The
//! memory spill step function is an invented stand-in; nothing here is
//! calibrated against real hardware.

pub mod catalog;
mod events;
mod rng;

use serde::{Deserialize, Serialize};

pub use events::{event_names, system_embedding};
pub use rng::{mix_seed, stream_rng};

use crate::energy::integrate_samples;
use crate::error::{Error, Result};
use crate::model::{EpochRecord, HyperParams, SystemConfig, TrialResult, TrialSpec, WorkloadSpec};
use crate::profiler::{build_epoch_profile, EventRow, EventSample, EVENT_COUNT};

use rand::Rng;
use rand_distr::StandardNormal;

/// Weight of the model signature in event rates.
pub const MODEL_WEIGHT: f64 = 1.0;
/// Weight of the dataset signature in event rates.
pub const DATASET_WEIGHT: f64 = 1.0;
/// Weight of the system embedding in event rates.
pub const SYSTEM_WEIGHT: f64 = 1.0;
/// Per-second event jitter relative to `noise_scale`.
const EVENT_JITTER_GAIN: f64 = 5.0;
/// Range of `time_running / time_enabled` for multiplexed samples.
pub const MULTIPLEX_RUNNING_RANGE: (f64, f64) = (0.4, 1.0);

const STREAM_POWER: u64 = 1;
const STREAM_EVENTS: u64 = 2;
const STREAM_DRIFT: u64 = 3;

fn default_multiplex_fraction() -> f64 {
    0.3
}

/// Per-workload simulator constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimCalibration {
    /// Compute seconds per sample on one core.
    pub kappa: f64,
    /// Synchronization seconds per weight update per core.
    pub sigma: f64,
    /// Accuracy ceiling at batch 32 with no other penalty.
    pub a_max0: f64,
    /// Ceiling penalty per doubling of the batch size above 32.
    pub beta_batch: f64,
    pub lr_opt: f64,
    /// Penalty per squared decade of learning-rate error.
    pub gamma: f64,
    /// Penalty per unit of dropout below 0.25.
    pub delta: f64,
    /// Epochs to reach ~63% of the ceiling.
    pub tau: f64,
    pub mem_floor_gb: f64,
    pub spill_factor: f64,
    pub p_idle_w: f64,
    pub p_core_w: f64,
    pub event_signature_model: Vec<f64>,
    pub event_signature_dataset: Vec<f64>,
    pub noise_scale: f64,
    #[serde(default = "default_multiplex_fraction")]
    pub multiplex_fraction: f64,
}

impl SimCalibration {
    pub fn check(&self) -> std::result::Result<(), String> {
        let positive = [
            ("kappa", self.kappa),
            ("sigma", self.sigma),
            ("lr_opt", self.lr_opt),
            ("tau", self.tau),
            ("mem_floor_gb", self.mem_floor_gb),
            ("p_idle_w", self.p_idle_w),
            ("p_core_w", self.p_core_w),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        let nonneg = [
            ("beta_batch", self.beta_batch),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("noise_scale", self.noise_scale),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !(self.a_max0 > 0.0 && self.a_max0 <= 1.0) {
            return Err(format!("a_max0 must be in (0, 1], got {}", self.a_max0));
        }
        if !(self.spill_factor >= 1.0) {
            return Err(format!("spill_factor must be >= 1, got {}", self.spill_factor));
        }
        if !(0.0..=1.0).contains(&self.multiplex_fraction) {
            return Err(format!(
                "multiplex_fraction must be in [0, 1], got {}",
                self.multiplex_fraction
            ));
        }
        for (name, sig) in [
            ("event_signature_model", &self.event_signature_model),
            ("event_signature_dataset", &self.event_signature_dataset),
        ] {
            if sig.len() != EVENT_COUNT {
                return Err(format!("{name} has {} entries, expected {EVENT_COUNT}", sig.len()));
            }
            if sig.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(format!("{name} must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    /// Parses a calibration-only TOML document (keys are exactly the fields).
    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        let cal: SimCalibration = toml::from_str(text).map_err(|e| Error::parse(context, e))?;
        cal.check().map_err(|e| Error::parse(context, e))?;
        Ok(cal)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }
}

/// Everything one simulated epoch emits.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome {
    pub duration_s: f64,
    pub accuracy_after: f64,
    /// `(t_s, watts)` at 1 Hz from 0 through `duration_s`.
    pub power_samples: Vec<(f64, f64)>,
    /// One row per power sample.
    pub event_samples: Vec<EventRow<f64>>,
}

impl EpochOutcome {
    pub fn energy_j(&self) -> f64 {
        integrate_samples(&self.power_samples).unwrap_or(0.0)
    }
}

/// Seconds per epoch under the synchronous SGD cost model.
pub fn epoch_duration(w: &WorkloadSpec, h: &HyperParams, s: SystemConfig) -> f64 {
    let cal = &w.calibration;
    let samples = w.samples_per_epoch as f64;
    let cores = s.cores as f64;
    let updates = samples / h.batch_size as f64;
    let t = cal.kappa * samples / cores + cal.sigma * cores * updates;
    if (s.memory_gb as f64) < cal.mem_floor_gb {
        t * cal.spill_factor
    } else {
        t
    }
}

/// Accuracy ceiling for a hyperparameter setting.
pub fn accuracy_ceiling(w: &WorkloadSpec, h: &HyperParams) -> f64 {
    let cal = &w.calibration;
    let batch_penalty = cal.beta_batch * (h.batch_size as f64 / 32.0).log2();
    let lr_error = h.learning_rate.log10() - cal.lr_opt.log10();
    let lr_penalty = cal.gamma * lr_error * lr_error;
    let dropout_penalty = cal.delta * (0.25 - h.dropout_rate).max(0.0);
    (cal.a_max0 - batch_penalty - lr_penalty - dropout_penalty).clamp(0.0, 1.0)
}

/// Accuracy after `epoch` (1-based) epochs; independent of the system.
pub fn accuracy_after_epoch(w: &WorkloadSpec, h: &HyperParams, epoch: u32) -> f64 {
    accuracy_ceiling(w, h) * (1.0 - (-(epoch as f64) / w.calibration.tau).exp())
}

/// Mean active power draw for a configuration.
pub fn power_draw(w: &WorkloadSpec, s: SystemConfig) -> f64 {
    w.calibration.p_idle_w + w.calibration.p_core_w * s.cores as f64
}

/// Noiseless per-second event rates for a workload running under `s`.
pub fn event_rates(w: &WorkloadSpec, s: SystemConfig) -> Vec<f64> {
    let cal = &w.calibration;
    let system = system_embedding(s);
    (0..EVENT_COUNT)
        .map(|i| {
            MODEL_WEIGHT * cal.event_signature_model[i]
                + DATASET_WEIGHT * cal.event_signature_dataset[i]
                + SYSTEM_WEIGHT * system[i]
        })
        .collect()
}

/// Sample timestamps covering `[0, duration]` at 1 s spacing.
fn tick_times(duration: f64) -> Vec<f64> {
    let whole = duration.floor() as usize;
    let mut ticks: Vec<f64> = (0..=whole).map(|i| i as f64).collect();
    if duration - whole as f64 > 1e-9 {
        ticks.push(duration);
    }
    if ticks.len() < 2 {
        ticks.push(duration);
    }
    ticks
}

/// Which parts of an epoch outcome to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detail {
    /// Power trace only; `event_samples` is left empty.
    PowerOnly,
    Full,
}

/// Simulates epoch `epoch` (1-based) of a trial running under `s`.
pub fn simulate_epoch(t: &TrialSpec, s: SystemConfig, epoch: u32) -> EpochOutcome {
    simulate_epoch_with(t, s, epoch, 1.0, Detail::Full)
}

/// [`simulate_epoch`] with a duration stretch factor (profiling overhead)
/// and a choice of detail.
pub fn simulate_epoch_with(
    t: &TrialSpec,
    s: SystemConfig,
    epoch: u32,
    stretch: f64,
    detail: Detail,
) -> EpochOutcome {
    let w = &*t.workload;
    let cal = &w.calibration;
    let duration_s = epoch_duration(w, &t.hyper, s) * stretch;
    let accuracy_after = accuracy_after_epoch(w, &t.hyper, epoch.max(1));
    let ticks = tick_times(duration_s);

    let watts = power_draw(w, s);
    let mut power_rng = stream_rng(t.seed, epoch as u64, STREAM_POWER);
    let power_samples = ticks
        .iter()
        .map(|&tick| {
            let p = if cal.noise_scale > 0.0 {
                let z: f64 = power_rng.sample(StandardNormal);
                (watts * (1.0 + cal.noise_scale * z)).max(0.0)
            } else {
                watts
            };
            (tick, p)
        })
        .collect();

    let event_samples = match detail {
        Detail::PowerOnly => Vec::new(),
        Detail::Full => sample_events(t, s, epoch, ticks.len()),
    };

    EpochOutcome {
        duration_s,
        accuracy_after,
        power_samples,
        event_samples,
    }
}

fn sample_events(t: &TrialSpec, s: SystemConfig, epoch: u32, rows: usize) -> Vec<EventRow<f64>> {
    let cal = &t.workload.calibration;
    let mut rates = event_rates(&t.workload, s);
    if cal.noise_scale > 0.0 {
        let mut drift_rng = stream_rng(t.seed, epoch as u64, STREAM_DRIFT);
        for r in rates.iter_mut() {
            let z: f64 = drift_rng.sample(StandardNormal);
            *r = (*r * (1.0 + cal.noise_scale * z)).max(0.0);
        }
    }
    let jitter = cal.noise_scale * EVENT_JITTER_GAIN;
    let (lo, hi) = MULTIPLEX_RUNNING_RANGE;
    let mut rng = stream_rng(t.seed, epoch as u64, STREAM_EVENTS);
    (0..rows)
        .map(|_| {
            rates
                .iter()
                .enumerate()
                .map(|(i, &rate)| {
                    let count = if jitter > 0.0 {
                        let z: f64 = rng.sample(StandardNormal);
                        (rate * (1.0 + jitter * z)).max(0.0)
                    } else {
                        rate
                    };
                    if cal.multiplex_fraction > 0.0 && rng.random::<f64>() < cal.multiplex_fraction {
                        let running = rng.random_range(lo..hi);
                        EventSample {
                            event_index: i,
                            raw_count: count * running,
                            time_enabled: 1.0,
                            time_running: running,
                        }
                    } else {
                        EventSample::full(i, count, 1.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Runs a whole trial under a per-epoch configuration schedule
/// (`schedule[i]` applies to epoch `i + 1`). No epochs are profiled.
pub fn run_trial(t: &TrialSpec, schedule: &[SystemConfig]) -> Result<TrialResult> {
    if schedule.len() != t.hyper.num_epochs as usize {
        return Err(Error::InvalidParameter(format!(
            "schedule covers {} epochs, trial has {}",
            schedule.len(),
            t.hyper.num_epochs
        )));
    }
    let epochs = schedule
        .iter()
        .enumerate()
        .map(|(i, &s)| epoch_record(t, s, i as u32 + 1, 1.0, false))
        .collect::<Result<Vec<_>>>()?;
    TrialResult::from_epochs(epochs)
}

/// Simulates one epoch and condenses it into an [`EpochRecord`], optionally
/// building its event profile.
pub fn epoch_record(
    t: &TrialSpec,
    s: SystemConfig,
    epoch: u32,
    stretch: f64,
    profile: bool,
) -> Result<EpochRecord> {
    let detail = if profile { Detail::Full } else { Detail::PowerOnly };
    let outcome = simulate_epoch_with(t, s, epoch, stretch, detail);
    let energy_j = integrate_samples(&outcome.power_samples)?;
    let profile = if profile {
        let built = build_epoch_profile(&outcome.event_samples, epoch)?;
        Some(built.profile.with_hint(t.workload.key()))
    } else {
        None
    };
    Ok(EpochRecord {
        index: epoch,
        duration_s: outcome.duration_s,
        accuracy_after: outcome.accuracy_after,
        energy_j,
        system: s,
        profile,
    })
}
