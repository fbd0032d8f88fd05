//! Per-trial system tuning: profile the first epoch, ask the ground truth
//! for a known configuration, otherwise probe the grid epoch by epoch.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ground_truth::{GroundTruth, HistoryEntry, SimilarityVerdict};
use crate::model::{enumerate_system_grid, EpochRecord, SystemConfig, TrialResult, TrialSpec};
use crate::probing::{make_plan, select_best, Criterion, ProbeMeasurement};
use crate::simulator::epoch_record;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunerConfig {
    /// Duration multiplier applied to profiled epochs.
    pub profiling_overhead: f64,
    pub criterion: Criterion,
    /// First epoch available for probing.
    pub probe_start_epoch: u32,
    /// Probe candidates in probe order.
    pub candidates: Vec<SystemConfig>,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            profiling_overhead: 1.02,
            criterion: Criterion::MinDuration,
            probe_start_epoch: 2,
            candidates: enumerate_system_grid(),
        }
    }
}

/// How a trial's system configuration was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TunePath {
    /// One configuration for every epoch.
    Fixed,
    /// A known configuration from the ground truth.
    Reuse,
    /// The grid was probed; `truncated` when the trial ended first.
    Probe { probed: u32, truncated: bool },
    /// The trial ended before tuning could act.
    TooShort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedTrial {
    pub result: TrialResult,
    pub path: TunePath,
    pub verdict: Option<SimilarityVerdict<f64>>,
    /// Observation to fold into the ground truth once the trial completes.
    pub update: Option<HistoryEntry<f64>>,
}

/// Runs a trial at its initial configuration throughout.
pub fn run_trial_fixed(trial: &TrialSpec) -> Result<TunedTrial> {
    let epochs = (1..=trial.hyper.num_epochs)
        .map(|e| epoch_record(trial, trial.initial_system, e, 1.0, false))
        .collect::<Result<Vec<_>>>()?;
    Ok(TunedTrial {
        result: TrialResult::from_epochs(epochs)?,
        path: TunePath::Fixed,
        verdict: None,
        update: None,
    })
}

/// Trains a trial while tuning its system configuration.
///
/// Epoch 1 runs at the initial configuration and is profiled. With a
/// ground truth, a similar profile with a known configuration for this
/// batch size applies that configuration from epoch 2. Otherwise each
/// candidate is probed for one epoch and the best applies to the rest. The
/// query is recorded in the ground truth's window; the history update is
/// returned, not applied.
pub fn run_trial_pipelined(
    trial: &TrialSpec,
    ground_truth: Option<&GroundTruth>,
    config: &TunerConfig,
) -> Result<TunedTrial> {
    let n = trial.hyper.num_epochs;
    let batch = trial.hyper.batch_size;
    let overhead = config.profiling_overhead;
    let first = epoch_record(trial, trial.initial_system, 1, overhead, true)?;
    let profile = first.profile.clone().expect("profiled epoch");
    let base_duration = first.duration_s / overhead;
    let mut epochs: Vec<EpochRecord> = vec![first];

    let verdict = ground_truth.map(|gt| gt.query(&profile, batch));
    if n < 2 {
        return Ok(TunedTrial {
            result: TrialResult::from_epochs(epochs)?,
            path: TunePath::TooShort,
            verdict,
            update: Some(HistoryEntry::profile_only(profile)),
        });
    }

    if let Some(known) = verdict.as_ref().filter(|v| v.reuse).and_then(|v| v.config) {
        for e in 2..=n {
            epochs.push(epoch_record(trial, known, e, 1.0, false)?);
        }
        let speedup = base_duration / epochs[1].duration_s;
        return Ok(TunedTrial {
            result: TrialResult::from_epochs(epochs)?,
            path: TunePath::Reuse,
            verdict,
            update: Some(HistoryEntry::with_result(profile, known, speedup, batch)),
        });
    }

    let start = config.probe_start_epoch.max(2);
    let plan = make_plan(&config.candidates, start, n)?;
    // Epochs between profiling and probing keep the initial configuration.
    for e in 2..start.min(n + 1) {
        epochs.push(epoch_record(trial, trial.initial_system, e, 1.0, false)?);
    }
    let mut measurements = Vec::with_capacity(plan.len());
    for &(e, c) in &plan.assignments {
        let rec = epoch_record(trial, c, e, overhead, true)?;
        measurements.push(ProbeMeasurement {
            config: c,
            duration_s: rec.duration_s,
            energy_j: rec.energy_j,
            profile: rec.profile.clone(),
            epoch_index: e,
        });
        epochs.push(rec);
    }
    let path = TunePath::Probe {
        probed: plan.len() as u32,
        truncated: plan.truncated,
    };
    let update = if plan.truncated || measurements.is_empty() {
        HistoryEntry::profile_only(profile)
    } else {
        let best = select_best(&measurements, config.criterion)?;
        let probe = measurements.iter().find(|m| m.config == best).expect("selected config was probed");
        let next = plan.last_epoch().map_or(start, |e| e + 1);
        for e in next..=n {
            epochs.push(epoch_record(trial, best, e, 1.0, false)?);
        }
        HistoryEntry::with_result(profile, best, base_duration / (probe.duration_s / overhead), batch)
    };
    Ok(TunedTrial {
        result: TrialResult::from_epochs(epochs)?,
        path,
        verdict,
        update: Some(update),
    })
}
