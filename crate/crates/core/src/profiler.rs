//! Per-epoch workload profiles from per-second hardware event samples.
//!
//! Counters that were time-multiplexed are rescaled by
//! `time_enabled / time_running` before averaging. Samples with
//! `time_running == 0` never ran and are dropped; they are counted as gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of monitored hardware events.
pub const EVENT_COUNT: usize = 58;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSample<T> {
    pub event_index: usize,
    pub raw_count: T,
    pub time_enabled: T,
    pub time_running: T,
}

impl<T: Scalar> EventSample<T> {
    /// A sample that was counted for the whole interval.
    pub fn full(event_index: usize, raw_count: T, interval_s: T) -> Self {
        Self {
            event_index,
            raw_count,
            time_enabled: interval_s,
            time_running: interval_s,
        }
    }

    pub fn is_multiplexed(&self) -> bool {
        self.time_running < self.time_enabled
    }
}

/// One second of samples, one entry per event.
pub type EventRow<T> = Vec<EventSample<T>>;

/// Mean scaled event rates over an epoch window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochProfile<T = f64> {
    pub values: Vec<T>,
    pub epoch_index: u32,
    /// Diagnostic label only; similarity never reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload_hint: Option<String>,
}

impl<T: Scalar> EpochProfile<T> {
    pub fn new(values: Vec<T>, epoch_index: u32) -> Result<Self> {
        let profile = Self {
            values,
            epoch_index,
            workload_hint: None,
        };
        profile.check()?;
        Ok(profile)
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.workload_hint = Some(hint.into());
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.values.len() != EVENT_COUNT {
            return Err(Error::InvalidParameter(format!(
                "profile has {} values, expected {EVENT_COUNT}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("profile has non-finite values".into()));
        }
        Ok(())
    }
}

/// A built profile together with its sampling gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBuild<T> {
    pub profile: EpochProfile<T>,
    /// Dropped samples per event.
    pub dropped: Vec<u32>,
}

impl<T> ProfileBuild<T> {
    /// Events that had no valid sample at all (reported as 0).
    pub fn gap_events(&self, rows: usize) -> Vec<usize> {
        self.dropped
            .iter()
            .enumerate()
            .filter(|(_, &d)| d as usize == rows)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total_dropped(&self) -> u32 {
        self.dropped.iter().sum()
    }
}

/// Estimated full-interval count of a possibly multiplexed sample.
pub fn scale_multiplexed<T: Scalar>(sample: &EventSample<T>) -> Result<T> {
    if sample.time_running <= T::zero() {
        return Err(Error::MissingMeasurement {
            event_index: sample.event_index,
        });
    }
    if sample.time_running == sample.time_enabled {
        // Exact identity; raw * t / t can be off by an ulp.
        return Ok(sample.raw_count);
    }
    Ok(sample.raw_count * sample.time_enabled / sample.time_running)
}

/// Averages scaled samples per event over one epoch.
///
/// Sums are taken over sorted values, so the result does not depend on row
/// order.
pub fn build_epoch_profile<T: Scalar>(
    rows: &[EventRow<T>],
    epoch_index: u32,
) -> Result<ProfileBuild<T>> {
    if rows.is_empty() {
        return Err(Error::Empty("no event sample rows"));
    }
    let mut per_event: Vec<Vec<T>> = (0..EVENT_COUNT).map(|_| Vec::with_capacity(rows.len())).collect();
    let mut dropped = vec![0u32; EVENT_COUNT];
    for (r, row) in rows.iter().enumerate() {
        if row.len() != EVENT_COUNT {
            return Err(Error::InvalidParameter(format!(
                "row {r} has {} samples, expected {EVENT_COUNT}",
                row.len()
            )));
        }
        for (i, sample) in row.iter().enumerate() {
            if sample.event_index != i {
                return Err(Error::InvalidParameter(format!(
                    "row {r} position {i} holds event {}",
                    sample.event_index
                )));
            }
            if sample.time_running > sample.time_enabled {
                return Err(Error::InvalidParameter(format!(
                    "row {r} event {i}: time_running exceeds time_enabled"
                )));
            }
            match scale_multiplexed(sample) {
                Ok(v) => per_event[i].push(v),
                Err(Error::MissingMeasurement { .. }) => dropped[i] += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let values = per_event
        .into_iter()
        .map(|mut vals| {
            if vals.is_empty() {
                return T::zero();
            }
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let n = T::from_usize_lossy(vals.len());
            vals.into_iter().sum::<T>() / n
        })
        .collect();
    Ok(ProfileBuild {
        profile: EpochProfile::new(values, epoch_index)?,
        dropped,
    })
}

/// Element-wise mean of several epoch profiles (the first-k-epochs window).
pub fn average_profiles<T: Scalar>(profiles: &[EpochProfile<T>]) -> Result<EpochProfile<T>> {
    let first = profiles.first().ok_or(Error::Empty("no profiles to average"))?;
    let n = T::from_usize_lossy(profiles.len());
    let mut values = vec![T::zero(); EVENT_COUNT];
    for p in profiles {
        p.check()?;
        for (acc, &v) in values.iter_mut().zip(&p.values) {
            *acc += v;
        }
    }
    values.iter_mut().for_each(|v| *v /= n);
    Ok(EpochProfile {
        values,
        epoch_index: profiles.last().map_or(first.epoch_index, |p| p.epoch_index),
        workload_hint: first.workload_hint.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(raw: f64, enabled: f64, running: f64) -> EventSample<f64> {
        EventSample {
            event_index: 0,
            raw_count: raw,
            time_enabled: enabled,
            time_running: running,
        }
    }

    fn row(values: impl Fn(usize) -> f64) -> EventRow<f64> {
        (0..EVENT_COUNT)
            .map(|i| EventSample::full(i, values(i), 1.0))
            .collect()
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scale_multiplexed(&sample(100.0, 10.0, 5.0)).unwrap(), 200.0);
        assert_eq!(scale_multiplexed(&sample(100.0, 10.0, 10.0)).unwrap(), 100.0);
        assert_eq!(scale_multiplexed(&sample(7.0, 3.0, 2.0)).unwrap(), 10.5);
        assert!(matches!(
            scale_multiplexed(&sample(7.0, 3.0, 0.0)),
            Err(Error::MissingMeasurement { event_index: 0 })
        ));
    }

    #[test]
    fn single_row_is_identity() {
        let r = row(|i| i as f64 * 3.0 + 1.0);
        let built = build_epoch_profile(std::slice::from_ref(&r), 1).unwrap();
        let raw: Vec<f64> = r.iter().map(|s| s.raw_count).collect();
        assert_eq!(built.profile.values, raw);
        assert_eq!(built.total_dropped(), 0);
    }

    #[test]
    fn mean_of_two_rows() {
        let a = row(|i| i as f64 + 1.0);
        let b = row(|i| 3.0 * (i as f64 + 1.0));
        let built = build_epoch_profile(&[a, b], 2).unwrap();
        for (i, v) in built.profile.values.iter().enumerate() {
            assert_eq!(*v, 2.0 * (i as f64 + 1.0));
        }
        assert_eq!(built.profile.epoch_index, 2);
    }

    #[test]
    fn dropped_samples_become_gaps() {
        let mut a = row(|_| 10.0);
        let mut b = row(|_| 20.0);
        a[3].time_running = 0.0;
        b[3].time_running = 0.0;
        a[5].time_running = 0.0;
        let built = build_epoch_profile(&[a, b], 1).unwrap();
        assert_eq!(built.profile.values[3], 0.0);
        assert_eq!(built.profile.values[5], 20.0);
        assert_eq!(built.profile.values[0], 15.0);
        assert_eq!(built.dropped[3], 2);
        assert_eq!(built.gap_events(2), vec![3]);
        assert_eq!(built.total_dropped(), 3);
    }

    #[test]
    fn empty_and_malformed() {
        assert!(matches!(
            build_epoch_profile::<f64>(&[], 1),
            Err(Error::Empty(_))
        ));
        let short: EventRow<f64> = vec![EventSample::full(0, 1.0, 1.0)];
        assert!(build_epoch_profile(&[short], 1).is_err());
        let mut bad = row(|_| 1.0);
        bad[0].time_running = 2.0;
        assert!(build_epoch_profile(&[bad], 1).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let r: EventRow<f32> = (0..EVENT_COUNT)
            .map(|i| EventSample {
                event_index: i,
                raw_count: 50.0,
                time_enabled: 1.0,
                time_running: 0.5,
            })
            .collect();
        let built = build_epoch_profile(&[r], 1).unwrap();
        assert!(built.profile.values.iter().all(|&v| v == 100.0f32));
    }

    #[test]
    fn averaging_profiles() {
        let a = EpochProfile::new(vec![1.0; EVENT_COUNT], 1).unwrap();
        let b = EpochProfile::new(vec![3.0; EVENT_COUNT], 2).unwrap();
        let avg = average_profiles(&[a, b]).unwrap();
        assert!(avg.values.iter().all(|&v| v == 2.0));
        assert_eq!(avg.epoch_index, 2);
    }
}
