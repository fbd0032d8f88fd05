use std::sync::Arc;

use ptune_core::ground_truth::sweep::{warm_start, SweepSpec};
use ptune_core::ground_truth::{ClusterModel, GroundTruth, GroundTruthConfig};
use ptune_core::hpo::{hyperband_plan, Algorithm, SearchSpace};
use ptune_core::model::DEFAULT_SYSTEM;
use ptune_core::orchestrator::{run_job, run_queue, HptJob, JobOutcome, Mode, Settings, TunePath};
use ptune_core::simulator::{catalog, run_trial};
use ptune_core::{enumerate_system_grid, SystemConfig, TrialSpec, WorkloadSpec};

fn lenet() -> Arc<WorkloadSpec> {
    catalog::workload("lenet5-mnist").unwrap()
}

fn space(batches: &[u32], learning_rates: &[f64], epochs: u32) -> SearchSpace {
    SearchSpace {
        batch_size: batches.to_vec(),
        dropout_rate: vec![0.25],
        embedding_dims: vec![100],
        learning_rate: learning_rates.to_vec(),
        num_epochs: vec![epochs],
        systems: None,
    }
}

fn grid_job(workload: Arc<WorkloadSpec>, mode: Mode, space: SearchSpace, slots: usize) -> HptJob {
    let mut job = HptJob::new("job", "test", workload, mode, 11).with_mode(mode);
    job.search_space = space;
    job.algorithm = Algorithm::Grid;
    job.max_parallel_trials = slots;
    job
}

fn warm_model() -> ClusterModel<f64> {
    let workloads = catalog::default_workloads()
        .into_iter()
        .map(|(n, w)| (n.to_string(), w))
        .collect();
    warm_start(&SweepSpec::standard(workloads, 0), GroundTruthConfig::default())
        .unwrap()
        .0
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Greedy list schedule in issue order: each trial takes the slot that
/// frees up first.
fn list_schedule(durations: &[f64], slots: usize) -> f64 {
    let mut free = vec![0.0f64; slots];
    for &d in durations {
        let slot = (0..slots).min_by(|&a, &b| free[a].total_cmp(&free[b])).unwrap();
        free[slot] += d;
    }
    free.into_iter().fold(0.0, f64::max)
}

fn durations_by_id(o: &JobOutcome) -> Vec<f64> {
    let mut trials: Vec<_> = o.trials.iter().collect();
    trials.sort_by_key(|t| t.trial_id);
    trials.iter().map(|t| t.tuned.result.training_time_s).collect()
}

#[test]
fn single_point_space_matches_a_standalone_trial() {
    let job = grid_job(lenet(), Mode::V1, space(&[64], &[0.01], 12), 4);
    let o = run_job(&job, None, &Settings::default()).unwrap();
    assert_eq!(o.trials.len(), 1);
    let t = &o.trials[0];
    let spec = TrialSpec {
        workload: lenet(),
        hyper: t.proposal.candidate.hyper,
        initial_system: DEFAULT_SYSTEM,
        trial_id: t.trial_id,
        seed: t.seed,
    };
    let alone = run_trial(&spec, &[DEFAULT_SYSTEM; 12]).unwrap();
    assert_eq!(t.tuned.result.final_accuracy, alone.final_accuracy);
    assert!(close(t.tuned.result.training_time_s, alone.training_time_s));
    assert_eq!(o.final_accuracy, alone.final_accuracy);
    assert!(close(o.training_time_s, alone.training_time_s));
    assert!(close(o.tuning_time_s, alone.training_time_s));
    assert!(close(o.response_time_s, o.tuning_time_s));
}

#[test]
fn serial_trials_sum_their_durations() {
    let job = grid_job(lenet(), Mode::V1, space(&[32, 64, 512], &[0.01], 10), 1);
    let o = run_job(&job, None, &Settings::default()).unwrap();
    let total: f64 = durations_by_id(&o).iter().sum();
    assert_eq!(o.trials.len(), 3);
    assert!(close(o.tuning_time_s, total));
}

#[test]
fn two_slots_four_equal_trials_take_two_trial_lengths() {
    // Learning rate leaves the epoch duration unchanged.
    let job = grid_job(lenet(), Mode::V1, space(&[64], &[0.001, 0.003, 0.01, 0.03], 10), 2);
    let o = run_job(&job, None, &Settings::default()).unwrap();
    let d = durations_by_id(&o);
    assert_eq!(d.len(), 4);
    assert!(d.iter().all(|&x| close(x, d[0])));
    assert!(close(o.tuning_time_s, 2.0 * d[0]));
}

#[test]
fn grid_makespan_matches_list_schedule() {
    let job = grid_job(lenet(), Mode::V1, space(&[32, 64, 512, 1024], &[0.01, 0.1], 10), 3);
    let o = run_job(&job, None, &Settings::default()).unwrap();
    assert!(close(o.tuning_time_s, list_schedule(&durations_by_id(&o), 3)));
}

#[test]
fn hyperband_makespan_matches_round_by_round_list_schedule() {
    let mut job = HptJob::new("hb", "lenet5-mnist", lenet(), Mode::V1, 5);
    job.algorithm = Algorithm::HyperBand { r_max: 9, eta: 3 };
    job.max_parallel_trials = 2;
    let o = run_job(&job, None, &Settings::default()).unwrap();
    let durations = durations_by_id(&o);
    let rounds: Vec<usize> = hyperband_plan(9, 3)
        .unwrap()
        .iter()
        .flat_map(|b| b.rounds.iter().map(|&(n, _)| n as usize).collect::<Vec<_>>())
        .collect();
    assert_eq!(rounds.iter().sum::<usize>(), durations.len());
    let mut at = 0;
    let mut makespan = 0.0;
    for n in rounds {
        makespan += list_schedule(&durations[at..at + n], 2);
        at += n;
    }
    assert!(close(o.tuning_time_s, makespan), "{} vs {makespan}", o.tuning_time_s);
}

#[test]
fn v1_runs_every_epoch_on_the_default_configuration() {
    let job = grid_job(lenet(), Mode::V1, space(&[64, 512], &[0.01], 10), 2);
    let o = run_job(&job, None, &Settings::default()).unwrap();
    for t in &o.trials {
        assert_eq!(t.tuned.path, TunePath::Fixed);
        assert!(t.tuned.result.schedule().iter().all(|&s| s == DEFAULT_SYSTEM));
    }
}

#[test]
fn known_workload_reuses_one_configuration_without_probing() {
    let gt = GroundTruth::new(warm_model());
    let job = grid_job(lenet(), Mode::PipeTune, space(&[64], &[0.01], 20), 1);
    let o = run_job(&job, Some(&gt), &Settings::default()).unwrap();
    let t = &o.trials[0];
    assert_eq!(t.tuned.path, TunePath::Reuse);
    let schedule = t.tuned.result.schedule();
    assert_eq!(schedule[0], DEFAULT_SYSTEM);
    assert!(schedule[1..].iter().all(|&s| s == schedule[1]));
}

#[test]
fn novel_workload_probes_the_grid_then_keeps_the_fastest() {
    let (_, holdout) = catalog::holdout_workloads().into_iter().next().unwrap();
    let gt = GroundTruth::new(warm_model());
    let job = grid_job(holdout, Mode::PipeTune, space(&[64], &[0.01], 100), 1);
    let o = run_job(&job, Some(&gt), &Settings::default()).unwrap();
    let t = &o.trials[0];
    let grid = enumerate_system_grid();
    assert_eq!(
        t.tuned.path,
        TunePath::Probe {
            probed: grid.len() as u32,
            truncated: false
        }
    );
    let epochs = &t.tuned.result.epochs;
    assert_eq!(epochs.len(), 100);
    // Epochs 2..=13 probe the grid; 14..=100 run the argmin.
    let probes = &epochs[1..13];
    let probed: Vec<SystemConfig> = probes.iter().map(|e| e.system).collect();
    let mut sorted = probed.clone();
    sorted.sort();
    assert_eq!(sorted, grid);
    let fastest = probes
        .iter()
        .min_by(|a, b| a.duration_s.total_cmp(&b.duration_s).then(a.system.cmp(&b.system)))
        .unwrap()
        .system;
    assert!(epochs[13..].iter().all(|e| e.system == fastest));
}

#[test]
fn pipetune_keeps_accuracy_and_never_tunes_slower() {
    let model = warm_model();
    for (name, w) in catalog::default_workloads() {
        let v1 = run_job(&grid_job(w.clone(), Mode::V1, space(&[64, 1024], &[0.01], 30), 2), None, &Settings::default()).unwrap();
        let gt = GroundTruth::new(model.clone());
        let pt = run_job(&grid_job(w, Mode::PipeTune, space(&[64, 1024], &[0.01], 30), 2), Some(&gt), &Settings::default()).unwrap();
        assert_eq!(v1.proposals(), pt.proposals(), "{name}");
        assert_eq!(v1.best_hyper, pt.best_hyper, "{name}");
        assert_eq!(v1.final_accuracy, pt.final_accuracy, "{name}");
        assert!(pt.tuning_time_s <= v1.tuning_time_s, "{name}");
    }
}

#[test]
fn queue_is_fifo_and_respects_node_capacity() {
    let settings = Settings::default();
    let model = warm_model();
    let jobs: Vec<HptJob> = catalog::default_workloads()
        .into_iter()
        .enumerate()
        .map(|(i, (name, w))| {
            let mut job = grid_job(w, Mode::PipeTune, space(&[32, 64, 512, 1024], &[0.01, 0.1], 12), 4);
            job.job_id = format!("job-{i}");
            job.workload_name = name.to_string();
            job.arrival_time_s = i as f64 * 50.0;
            job
        })
        .collect();
    let gt = GroundTruth::new(model);
    let outcomes = run_queue(&jobs, Some(&gt), &settings).unwrap();
    for pair in outcomes.windows(2) {
        assert!(pair[0].start_s <= pair[1].start_s);
    }
    let trials: Vec<_> = outcomes.iter().flat_map(|o| o.trials.iter()).collect();
    let want = settings.tuned_reservation;
    for t in &trials {
        // Everything running on t's node at the instant t starts.
        let on_node: Vec<_> = trials
            .iter()
            .filter(|u| u.node == t.node && u.start_s <= t.start_s && t.start_s < u.end_s)
            .collect();
        let cores: u32 = on_node.iter().map(|_| want.cores).sum();
        let memory: u32 = on_node.iter().map(|_| want.memory_gb).sum();
        assert!(cores <= settings.cluster.cores_per_node, "{cores} cores on node {}", t.node);
        assert!(memory <= settings.cluster.memory_gb_per_node);
    }
    for o in &outcomes {
        assert!(o.response_time_s >= o.tuning_time_s - 1e-9);
        assert!(close(o.response_time_s, o.completion_s - o.arrival_time_s));
    }
}

#[test]
fn second_job_after_the_first_finishes_does_not_queue() {
    let first = grid_job(lenet(), Mode::V1, space(&[64], &[0.01], 10), 1);
    let alone = run_job(&first, None, &Settings::default()).unwrap();
    let mut second = first.clone();
    second.job_id = "second".into();
    second.arrival_time_s = alone.completion_s + 100.0;
    let outcomes = run_queue(&[first, second], None, &Settings::default()).unwrap();
    for o in &outcomes {
        assert!(close(o.response_time_s, o.tuning_time_s));
    }
    assert!(close(outcomes[1].start_s, outcomes[1].arrival_time_s));
}
