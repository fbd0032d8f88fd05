//! Epoch-granular probing of system configurations.
//!
//! Each candidate configuration is run for one full epoch, one after the
//! other, and the best one by duration or energy is kept for the rest of the
//! trial.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::profiler::EpochProfile;

/// Epoch-to-configuration assignments for one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbePlan {
    pub assignments: Vec<(u32, SystemConfig)>,
    /// Set when the trial had fewer remaining epochs than candidates.
    pub truncated: bool,
}

impl ProbePlan {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Last epoch spent probing, if any.
    pub fn last_epoch(&self) -> Option<u32> {
        self.assignments.last().map(|&(e, _)| e)
    }

    pub fn config_for(&self, epoch: u32) -> Option<SystemConfig> {
        self.assignments
            .iter()
            .find(|&&(e, _)| e == epoch)
            .map(|&(_, c)| c)
    }
}

/// Assigns candidates to consecutive epochs from `start_epoch` up to
/// `num_epochs` inclusive. Duplicate candidates are probed once.
pub fn make_plan(candidates: &[SystemConfig], start_epoch: u32, num_epochs: u32) -> Result<ProbePlan> {
    if candidates.is_empty() {
        return Err(Error::Empty("no probe candidates"));
    }
    if start_epoch == 0 {
        return Err(Error::InvalidParameter("epochs are numbered from 1".into()));
    }
    let mut unique: Vec<SystemConfig> = Vec::with_capacity(candidates.len());
    for &c in candidates {
        if !unique.contains(&c) {
            unique.push(c);
        }
    }
    let available = (num_epochs + 1).saturating_sub(start_epoch) as usize;
    let truncated = unique.len() > available;
    let assignments = unique
        .into_iter()
        .take(available)
        .zip(start_epoch..)
        .map(|(c, e)| (e, c))
        .collect();
    Ok(ProbePlan {
        assignments,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMeasurement {
    pub config: SystemConfig,
    pub duration_s: f64,
    pub energy_j: f64,
    pub profile: Option<EpochProfile>,
    pub epoch_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Criterion {
    #[default]
    #[serde(rename = "min-duration")]
    MinDuration,
    #[serde(rename = "min-energy")]
    MinEnergy,
}

impl Criterion {
    pub fn value(&self, m: &ProbeMeasurement) -> f64 {
        match self {
            Criterion::MinDuration => m.duration_s,
            Criterion::MinEnergy => m.energy_j,
        }
    }
}

/// Configuration with the lowest criterion value; ties go to fewer cores,
/// then less memory.
pub fn select_best(measurements: &[ProbeMeasurement], criterion: Criterion) -> Result<SystemConfig> {
    measurements
        .iter()
        .min_by(|a, b| {
            criterion
                .value(a)
                .total_cmp(&criterion.value(b))
                .then(a.config.cmp(&b.config))
        })
        .map(|m| m.config)
        .ok_or(Error::Empty("no probe measurements"))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::model::enumerate_system_grid;

    fn m(cores: u32, memory_gb: u32, duration_s: f64) -> ProbeMeasurement {
        ProbeMeasurement {
            config: SystemConfig::new(cores, memory_gb),
            duration_s,
            energy_j: 1000.0 - duration_s,
            profile: None,
            epoch_index: 2,
        }
    }

    #[test]
    fn plan_examples() {
        let grid = enumerate_system_grid();
        let plan = make_plan(&grid, 2, 100).unwrap();
        assert_eq!(plan.len(), 12);
        assert!(!plan.truncated);
        assert_eq!(plan.assignments[0], (2, grid[0]));
        assert_eq!(plan.last_epoch(), Some(13));

        let single = make_plan(&grid[..1], 2, 100).unwrap();
        assert_eq!(single.assignments, vec![(2, grid[0])]);

        let short = make_plan(&grid, 2, 10).unwrap();
        assert_eq!(short.len(), 9);
        assert!(short.truncated);
        assert_eq!(short.last_epoch(), Some(10));

        let none = make_plan(&grid, 5, 4).unwrap();
        assert!(none.is_empty() && none.truncated);
        assert!(make_plan(&[], 2, 10).is_err());
    }

    #[test]
    fn select_examples() {
        let ms = [m(4, 4, 30.0), m(8, 4, 20.0), m(16, 4, 25.0)];
        assert_eq!(select_best(&ms, Criterion::MinDuration).unwrap(), SystemConfig::new(8, 4));
        assert_eq!(select_best(&ms, Criterion::MinEnergy).unwrap(), SystemConfig::new(4, 4));
        let tie = [m(8, 4, 20.0), m(4, 4, 20.0)];
        assert_eq!(select_best(&tie, Criterion::MinDuration).unwrap(), SystemConfig::new(4, 4));
        let mem_tie = [m(4, 16, 20.0), m(4, 8, 20.0)];
        assert_eq!(select_best(&mem_tie, Criterion::MinDuration).unwrap(), SystemConfig::new(4, 8));
        assert!(select_best(&[], Criterion::MinDuration).is_err());
    }

    fn measurements() -> impl Strategy<Value = Vec<ProbeMeasurement>> {
        let grid = enumerate_system_grid();
        proptest::sample::subsequence(grid, 1..=12).prop_flat_map(|configs| {
            let n = configs.len();
            proptest::collection::vec(1u32..6, n).prop_map(move |ds| {
                configs
                    .iter()
                    .zip(ds)
                    .map(|(c, d)| m(c.cores, c.memory_gb, d as f64))
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn permutation_invariant(ms in measurements(), seed in any::<u64>()) {
            let mut shuffled = ms.clone();
            let n = shuffled.len();
            for i in (1..n).rev() {
                shuffled.swap(i, (seed.rotate_left(i as u32) % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(
                select_best(&ms, Criterion::MinDuration).unwrap(),
                select_best(&shuffled, Criterion::MinDuration).unwrap()
            );
        }
    }
}
