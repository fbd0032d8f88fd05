use std::sync::Arc;

use proptest::prelude::*;
use ptune_core::energy::integrate_samples;
use ptune_core::profiler::{build_epoch_profile, EventSample, EVENT_COUNT};
use ptune_core::simulator::{catalog, event_rates, power_draw, simulate_epoch};
use ptune_core::{HyperParams, SystemConfig, TrialSpec, WorkloadSpec};

fn quiet(name: &str, multiplex_fraction: f64) -> Arc<WorkloadSpec> {
    let mut w = (*catalog::workload(name).unwrap()).clone();
    w.calibration.noise_scale = 0.0;
    w.calibration.multiplex_fraction = multiplex_fraction;
    Arc::new(w)
}

fn trial(w: Arc<WorkloadSpec>, seed: u64) -> TrialSpec {
    TrialSpec {
        workload: w,
        hyper: HyperParams {
            batch_size: 512,
            num_epochs: 10,
            ..HyperParams::default()
        },
        initial_system: SystemConfig::new(16, 8),
        trial_id: 0,
        seed,
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn noiseless_profile_equals_the_signature_combination() {
    for (name, _) in catalog::default_workloads() {
        for multiplex in [0.0, 0.5] {
            let w = quiet(name, multiplex);
            let s = SystemConfig::new(8, 16);
            let epoch = simulate_epoch(&trial(w.clone(), 3), s, 1);
            let profile = build_epoch_profile(&epoch.event_samples, 1).unwrap().profile;
            let cal = &w.calibration;
            let system = ptune_core::simulator::system_embedding(s);
            for i in 0..EVENT_COUNT {
                // Model, dataset and system contributions with unit weights.
                let want = cal.event_signature_model[i] + cal.event_signature_dataset[i] + system[i];
                assert!(rel_close(profile.values[i], want, 1e-12), "{name} event {i}");
            }
            assert_eq!(event_rates(&w, s).len(), EVENT_COUNT);
        }
    }
}

#[test]
fn noiseless_epochs_repeat_the_same_profile() {
    let w = quiet("cnn-news20", 0.0);
    let t = trial(w, 9);
    let s = SystemConfig::new(4, 32);
    let a = build_epoch_profile(&simulate_epoch(&t, s, 2).event_samples, 2).unwrap().profile;
    let b = build_epoch_profile(&simulate_epoch(&t, s, 7).event_samples, 7).unwrap().profile;
    assert_eq!(a.values, b.values);
}

#[test]
fn noiseless_epoch_energy_is_power_times_duration() {
    let w = quiet("jacobi-rodinia", 0.0);
    let s = SystemConfig::new(16, 32);
    let epoch = simulate_epoch(&trial(w.clone(), 1), s, 1);
    let want = power_draw(&w, s) * epoch.duration_s;
    assert!(rel_close(epoch.energy_j(), want, 1e-9));
    let last = epoch.power_samples.last().unwrap().0;
    assert!(rel_close(last, epoch.duration_s, 1e-12));
}

#[test]
fn rows_without_running_time_are_gaps() {
    let mut rows: Vec<Vec<EventSample<f64>>> = (0..3)
        .map(|_| (0..EVENT_COUNT).map(|i| EventSample::full(i, 10.0, 1.0)).collect())
        .collect();
    rows[1][4] = EventSample {
        event_index: 4,
        raw_count: 99.0,
        time_enabled: 1.0,
        time_running: 0.0,
    };
    for row in rows.iter_mut() {
        row[9].time_running = 0.0;
    }
    let build = build_epoch_profile(&rows, 1).unwrap();
    assert_eq!(build.profile.values[4], 10.0);
    assert_eq!(build.profile.values[9], 0.0);
    assert_eq!(build.dropped[4], 1);
    assert_eq!(build.gap_events(3), vec![9]);
}

fn trace() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.01f64..5.0, 0.0f64..400.0), 3..40).prop_map(|steps| {
        let mut t = 0.0;
        steps
            .into_iter()
            .map(|(dt, p)| {
                t += dt;
                (t, p)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn integration_is_additive_over_a_shared_boundary(samples in trace(), cut in 0.0f64..1.0) {
        let k = 1 + ((samples.len() - 2) as f64 * cut) as usize;
        let whole = integrate_samples(&samples).unwrap();
        let parts = integrate_samples(&samples[..=k]).unwrap() + integrate_samples(&samples[k..]).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn integration_scales_with_power(samples in trace(), alpha in 0.0f64..10.0) {
        let scaled: Vec<(f64, f64)> = samples.iter().map(|&(t, p)| (t, alpha * p)).collect();
        let base = integrate_samples(&samples).unwrap();
        let got = integrate_samples(&scaled).unwrap();
        prop_assert!((got - alpha * base).abs() <= 1e-9 * (alpha * base).max(1.0));
        prop_assert!(got >= 0.0);
    }

    #[test]
    fn profile_ignores_row_order(
        counts in prop::collection::vec(prop::collection::vec(0.0f64..1e6, EVENT_COUNT), 1..8),
        running in 0.05f64..1.0,
        rotate in 0usize..8,
    ) {
        let rows: Vec<Vec<EventSample<f64>>> = counts
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(i, &c)| EventSample { event_index: i, raw_count: c, time_enabled: 1.0, time_running: running })
                    .collect()
            })
            .collect();
        let mut shuffled = rows.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rotate % n);
        shuffled.reverse();
        let a = build_epoch_profile(&rows, 1).unwrap().profile;
        let b = build_epoch_profile(&shuffled, 1).unwrap().profile;
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn scaling_is_identity_without_multiplexing(raw in 0.0f64..1e12, interval in 1e-3f64..100.0) {
        let s = EventSample::full(0, raw, interval);
        prop_assert_eq!(ptune_core::profiler::scale_multiplexed(&s).unwrap(), raw);
    }
}
