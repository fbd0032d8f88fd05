use std::sync::Arc;
use std::thread;

use proptest::prelude::*;
use ptune_core::metric_store::{tags, MetricStore, SeriesPoint, Tags, LOG_FILE};

fn epoch_point(trial: u32, epoch: u32, t: f64, value: f64) -> SeriesPoint {
    SeriesPoint::new(
        "epoch.duration_s",
        tags([("trial", trial.to_string()), ("epoch", epoch.to_string())]),
        t,
        value,
    )
}

#[test]
fn large_batch_comes_back_complete_and_ordered() {
    let store = MetricStore::in_memory();
    // Appended in a scrambled order.
    let n = 100_000u64;
    let points: Vec<SeriesPoint> = (0..n)
        .map(|i| {
            let k = (i * 7919) % n;
            SeriesPoint::new("trial.loss", Tags::new(), k as f64 * 0.5, k as f64)
        })
        .collect();
    store.append_batch(points).unwrap();
    let got = store.query_range("trial.loss", &Tags::new(), 0.0, n as f64).unwrap();
    assert_eq!(got.len(), n as usize);
    assert!(got.windows(2).all(|w| w[0].t < w[1].t));
    assert!(got.iter().enumerate().all(|(i, p)| p.value == i as f64));
}

#[test]
fn range_straddling_two_epochs_returns_both() {
    let store = MetricStore::in_memory();
    // Epoch 1 covers t in [0, 10), epoch 2 covers [10, 20), sampled at 1 Hz.
    let mut points = Vec::new();
    for s in 0..20u32 {
        let epoch = 1 + s / 10;
        points.push(epoch_point(4, epoch, s as f64, 100.0 + s as f64));
        points.push(epoch_point(5, epoch, s as f64, 200.0 + s as f64));
    }
    store.append_batch(points).unwrap();
    let got = store
        .query_range("epoch.duration_s", &tags([("trial", "4")]), 7.5, 12.5)
        .unwrap();
    let times: Vec<f64> = got.iter().map(|p| p.t).collect();
    assert_eq!(times, vec![8.0, 9.0, 10.0, 11.0, 12.0]);
    let epochs: Vec<&str> = got.iter().map(|p| p.tag("epoch").unwrap()).collect();
    assert_eq!(epochs, vec!["1", "1", "2", "2", "2"]);
    assert!(got.iter().all(|p| p.tag("trial") == Some("4")));
}

#[test]
fn empty_and_inverted_queries() {
    let store = MetricStore::in_memory();
    assert!(store.query("job.accuracy", &Tags::new()).unwrap().is_empty());
    assert!(store.query_range("job.accuracy", &Tags::new(), 5.0, 1.0).is_err());
}

#[test]
fn duplicates_are_idempotent_and_conflicts_reject_the_whole_batch() {
    let store = MetricStore::in_memory();
    store.append(epoch_point(1, 1, 1.0, 3.0)).unwrap();
    store.append(epoch_point(1, 1, 1.0, 3.0)).unwrap();
    assert_eq!(store.len(), 1);
    let batch = vec![epoch_point(1, 2, 2.0, 4.0), epoch_point(1, 1, 1.0, 9.0)];
    assert!(store.append_batch(batch).is_err());
    assert_eq!(store.len(), 1);
    assert!(store.append(SeriesPoint::new("Bad Name", Tags::new(), 0.0, 0.0)).is_err());
}

#[test]
fn reopen_preserves_points_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let values = [0.1 + 0.2, std::f64::consts::PI, 1e-300, -0.0, 123456.789];
    {
        let store = MetricStore::open(dir.path()).unwrap();
        for (i, &v) in values.iter().enumerate() {
            store.append(epoch_point(1, i as u32, i as f64 / 3.0, v)).unwrap();
        }
        store.flush().unwrap();
        store.append(epoch_point(2, 0, 0.0, 42.0)).unwrap();
        // Dropped without an explicit flush.
    }
    let store = MetricStore::open(dir.path()).unwrap();
    let got = store.query("epoch.duration_s", &tags([("trial", "1")])).unwrap();
    assert_eq!(got.len(), values.len());
    for (p, v) in got.iter().zip(values) {
        assert_eq!(p.value.to_bits(), v.to_bits());
    }
    assert_eq!(store.len(), values.len() + 1);
    store.compact().unwrap();
    let reopened = MetricStore::open(dir.path()).unwrap();
    assert_eq!(
        reopened.query("epoch.duration_s", &Tags::new()).unwrap(),
        store.query("epoch.duration_s", &Tags::new()).unwrap()
    );
    let log = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
    assert!(log.starts_with("{\"format\":\"ptune-metrics\""));
}

#[test]
fn concurrent_appenders_lose_nothing() {
    let store = Arc::new(MetricStore::in_memory());
    let handles: Vec<_> = (0..8u32)
        .map(|trial| {
            let store = store.clone();
            thread::spawn(move || {
                for epoch in 0..500u32 {
                    store.append(epoch_point(trial, epoch, epoch as f64, trial as f64)).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(store.len(), 4000);
    for trial in 0..8u32 {
        let got = store.query("epoch.duration_s", &tags([("trial", trial.to_string())])).unwrap();
        assert_eq!(got.len(), 500);
        assert!(got.windows(2).all(|w| w[0].t < w[1].t));
    }
}

proptest! {
    #[test]
    fn results_do_not_depend_on_append_order(
        raw in prop::collection::btree_map((0u32..4, 0u32..50), -1e6f64..1e6, 1..80),
        seed in any::<u64>(),
    ) {
        let points: Vec<SeriesPoint> = raw
            .iter()
            .map(|(&(trial, t), &v)| epoch_point(trial, 0, t as f64, v))
            .collect();
        let mut shuffled = points.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(i as u64 + 1).rotate_left(17) % (i as u64 + 1)) as usize;
            shuffled.swap(i, j);
        }
        let a = MetricStore::in_memory();
        a.append_batch(points).unwrap();
        let b = MetricStore::in_memory();
        for p in shuffled {
            b.append(p).unwrap();
        }
        for trial in 0..4u32 {
            let f = tags([("trial", trial.to_string())]);
            prop_assert_eq!(
                a.query_range("epoch.duration_s", &f, 10.0, 40.0).unwrap(),
                b.query_range("epoch.duration_s", &f, 10.0, 40.0).unwrap()
            );
        }
    }
}
