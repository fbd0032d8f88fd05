//! Discrete-event loop over job arrivals and trial completions.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::tuner::{run_trial_fixed, run_trial_pipelined, TunedTrial};
use super::{ClusterState, HptJob, JobOutcome, Mode, Settings, TrialRun};
use crate::error::{Error, Result};
use crate::ground_truth::GroundTruth;
use crate::hpo::{Proposal, Scheduler};
use crate::model::{SystemConfig, TrialSpec};
use crate::simulator::mix_seed;

struct Completion {
    time: f64,
    seq: u64,
    job: usize,
    proposal: Proposal,
    seed: u64,
    start_s: f64,
    node: usize,
    tuned: TunedTrial,
}

impl PartialEq for Completion {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Completion {}

impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Completion {
    // Reversed so the max-heap pops the earliest completion first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

struct JobRun<'a> {
    job: &'a HptJob,
    scheduler: Scheduler,
    ready: VecDeque<Proposal>,
    running: usize,
    exhausted: bool,
    first_dispatch: Option<f64>,
    completion: Option<f64>,
    trials: Vec<TrialRun>,
}

impl JobRun<'_> {
    fn is_done(&self) -> bool {
        self.exhausted && self.running == 0 && self.ready.is_empty()
    }
}

struct Engine<'a> {
    runs: Vec<JobRun<'a>>,
    /// Job indices in admission order.
    order: Vec<usize>,
    arrived: usize,
    cluster: ClusterState,
    events: BinaryHeap<Completion>,
    seq: u64,
    ground_truth: Option<&'a GroundTruth>,
    settings: &'a Settings,
}

/// Runs one job alone on the cluster.
pub fn run_job(job: &HptJob, ground_truth: Option<&GroundTruth>, settings: &Settings) -> Result<JobOutcome> {
    let mut out = run_queue(std::slice::from_ref(job), ground_truth, settings)?;
    Ok(out.pop().expect("one outcome per job"))
}

/// Runs jobs in FIFO order of arrival (ties keep input order). Outcomes are
/// returned in input order.
pub fn run_queue(jobs: &[HptJob], ground_truth: Option<&GroundTruth>, settings: &Settings) -> Result<Vec<JobOutcome>> {
    let cluster = ClusterState::new(settings.cluster)?;
    let mut runs = Vec::with_capacity(jobs.len());
    for job in jobs {
        job.check()?;
        let scheduler = job.algorithm.scheduler(job.search_space.clone(), job.seed)?;
        runs.push(JobRun {
            job,
            scheduler,
            ready: VecDeque::new(),
            running: 0,
            exhausted: false,
            first_dispatch: None,
            completion: None,
            trials: Vec::new(),
        });
    }
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&a, &b| jobs[a].arrival_time_s.total_cmp(&jobs[b].arrival_time_s).then(a.cmp(&b)));
    let mut engine = Engine {
        runs,
        order,
        arrived: 0,
        cluster,
        events: BinaryHeap::new(),
        seq: 0,
        ground_truth,
        settings,
    };
    engine.run()?;
    engine.runs.into_iter().map(outcome).collect()
}

impl<'a> Engine<'a> {
    fn run(&mut self) -> Result<()> {
        let mut now = 0.0f64;
        loop {
            let next_arrival = self.order.get(self.arrived).map(|&j| self.runs[j].job.arrival_time_s);
            let next_completion = self.events.peek().map(|c| c.time);
            now = match (next_arrival, next_completion) {
                (None, None) => break,
                (Some(a), None) => a,
                (None, Some(c)) => c,
                (Some(a), Some(c)) => a.min(c),
            }
            .max(now);
            while self.events.peek().is_some_and(|c| c.time <= now) {
                let c = self.events.pop().expect("peeked");
                self.complete(c)?;
            }
            while self
                .order
                .get(self.arrived)
                .is_some_and(|&j| self.runs[j].job.arrival_time_s <= now)
            {
                self.arrived += 1;
            }
            self.dispatch(now)?;
        }
        if let Some(run) = self.runs.iter().find(|r| r.completion.is_none()) {
            return Err(Error::InvalidParameter(format!(
                "job {} could not be scheduled on the cluster",
                run.job.job_id
            )));
        }
        Ok(())
    }

    fn reservation(&self, job: &HptJob, proposal: &Proposal) -> SystemConfig {
        match job.mode {
            Mode::V1 => job.default_system,
            Mode::V2 => proposal.candidate.system.unwrap_or(job.default_system),
            Mode::PipeTune => self.settings.tuned_reservation,
        }
    }

    fn dispatch(&mut self, now: f64) -> Result<()> {
        for pos in 0..self.arrived {
            let j = self.order[pos];
            loop {
                let run = &mut self.runs[j];
                if run.completion.is_some() {
                    break;
                }
                if run.ready.is_empty() && run.scheduler.pending() == 0 && !run.exhausted {
                    let batch = run.scheduler.next_trials();
                    if batch.is_empty() {
                        run.exhausted = true;
                    }
                    run.ready.extend(batch);
                }
                if run.is_done() {
                    run.completion = Some(now);
                    run.first_dispatch.get_or_insert(now);
                    break;
                }
                if run.running >= run.job.max_parallel_trials {
                    break;
                }
                let Some(&proposal) = run.ready.front() else {
                    break;
                };
                let job = run.job;
                let want = self.reservation(job, &proposal);
                if !self.cluster.admits(want) {
                    return Err(Error::InvalidParameter(format!(
                        "job {}: reservation {want} exceeds a node",
                        job.job_id
                    )));
                }
                let Some(node) = self.cluster.allocate((j, proposal.trial_id), want) else {
                    break;
                };
                let run = &mut self.runs[j];
                run.ready.pop_front();
                run.running += 1;
                run.first_dispatch.get_or_insert(now);
                let seed = mix_seed(job.seed, &[proposal.trial_id]);
                let spec = TrialSpec {
                    workload: job.workload.clone(),
                    hyper: proposal.candidate.hyper,
                    initial_system: match job.mode {
                        Mode::V2 => proposal.candidate.system.unwrap_or(job.default_system),
                        Mode::V1 | Mode::PipeTune => job.default_system,
                    },
                    trial_id: proposal.trial_id,
                    seed,
                };
                let tuned = match job.mode {
                    Mode::PipeTune => run_trial_pipelined(&spec, self.ground_truth, &self.settings.tuner)?,
                    Mode::V1 | Mode::V2 => run_trial_fixed(&spec)?,
                };
                self.seq += 1;
                self.events.push(Completion {
                    time: now + tuned.result.training_time_s,
                    seq: self.seq,
                    job: j,
                    proposal,
                    seed,
                    start_s: now,
                    node,
                    tuned,
                });
            }
        }
        Ok(())
    }

    fn complete(&mut self, c: Completion) -> Result<()> {
        self.cluster.release((c.job, c.proposal.trial_id))?;
        let run = &mut self.runs[c.job];
        let score = run
            .job
            .objective
            .evaluate(c.tuned.result.final_accuracy, c.tuned.result.training_time_s)?;
        run.scheduler.report(c.proposal.trial_id, score)?;
        run.running -= 1;
        if let (Some(gt), Some(update)) = (self.ground_truth, c.tuned.update.clone()) {
            gt.update(update)?;
        }
        run.trials.push(TrialRun {
            trial_id: c.proposal.trial_id,
            proposal: c.proposal,
            seed: c.seed,
            start_s: c.start_s,
            end_s: c.time,
            node: c.node,
            score,
            tuned: c.tuned,
        });
        Ok(())
    }
}

fn outcome(run: JobRun<'_>) -> Result<JobOutcome> {
    let job = run.job;
    let best = run
        .scheduler
        .best()
        .or_else(|| {
            run.scheduler
                .completed()
                .iter()
                .copied()
                .min_by(|a, b| b.score.total_cmp(&a.score).then(a.proposal.trial_id.cmp(&b.proposal.trial_id)))
        })
        .ok_or(Error::Empty("job completed no trials"))?;
    let trial = run
        .trials
        .iter()
        .find(|t| t.trial_id == best.proposal.trial_id)
        .expect("best trial was run");
    let completion = run.completion.expect("job completed");
    let start = run.first_dispatch.unwrap_or(completion);
    Ok(JobOutcome {
        job_id: job.job_id.clone(),
        workload_name: job.workload_name.clone(),
        family: job.workload.family,
        mode: job.mode,
        best_trial: trial.trial_id,
        best_hyper: trial.proposal.candidate.hyper,
        best_system: trial.tuned.result.chosen_system,
        final_accuracy: trial.tuned.result.final_accuracy,
        training_time_s: trial.tuned.result.training_time_s,
        tuning_time_s: completion - start,
        total_energy_j: run.trials.iter().map(|t| t.tuned.result.energy_j).sum(),
        response_time_s: completion - job.arrival_time_s,
        arrival_time_s: job.arrival_time_s,
        start_s: start,
        completion_s: completion,
        trials: run.trials,
    })
}
