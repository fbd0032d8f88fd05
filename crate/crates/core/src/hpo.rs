//! Hyperparameter search: HyperBand, grid and random search behind one
//! scheduler interface.
//!
//! Schedulers hand out batches of [`Proposal`]s and wait for every trial in
//! a batch to be reported before producing the next one. HyperBand runs its
//! brackets one after another; survivors of a round are re-run from scratch
//! with the larger budget.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HyperParams, SystemConfig};
use crate::simulator::stream_rng;

/// Discrete candidate values per hyperparameter. `systems` is only set when
/// system parameters are searched as if they were hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub batch_size: Vec<u32>,
    pub dropout_rate: Vec<f64>,
    pub embedding_dims: Vec<u32>,
    pub learning_rate: Vec<f64>,
    pub num_epochs: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub systems: Option<Vec<SystemConfig>>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            batch_size: vec![32, 64, 512, 1024],
            dropout_rate: vec![0.0, 0.1, 0.25, 0.5],
            embedding_dims: vec![50, 100, 200, 300],
            learning_rate: vec![0.001, 0.003, 0.01, 0.03, 0.1],
            num_epochs: vec![81],
            systems: None,
        }
    }
}

/// One point of a search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub hyper: HyperParams,
    pub system: Option<SystemConfig>,
}

impl SearchSpace {
    pub fn with_systems(mut self, systems: Vec<SystemConfig>) -> Self {
        self.systems = Some(systems);
        self
    }

    pub fn without_systems(mut self) -> Self {
        self.systems = None;
        self
    }

    pub fn has_systems(&self) -> bool {
        self.systems.is_some()
    }

    /// Number of points in the cross product.
    pub fn size(&self) -> usize {
        self.batch_size.len()
            * self.dropout_rate.len()
            * self.embedding_dims.len()
            * self.learning_rate.len()
            * self.num_epochs.len()
            * self.systems.as_ref().map_or(1, Vec::len)
    }

    pub fn check(&self) -> Result<()> {
        if self.size() == 0 {
            return Err(Error::Empty("search space has an empty dimension"));
        }
        for c in self.points() {
            if let Err(v) = c.hyper.validate() {
                let text: Vec<String> = v.iter().map(ToString::to_string).collect();
                return Err(Error::InvalidParameter(format!("search space: {}", text.join("; "))));
            }
            if let Some(s) = c.system {
                if !s.is_valid() {
                    return Err(Error::InvalidParameter(format!("search space: system {s} is off the grid")));
                }
            }
        }
        Ok(())
    }

    fn candidate(&self, idx: [usize; 6]) -> Candidate {
        Candidate {
            hyper: HyperParams {
                batch_size: self.batch_size[idx[0]],
                dropout_rate: self.dropout_rate[idx[1]],
                embedding_dims: self.embedding_dims[idx[2]],
                learning_rate: self.learning_rate[idx[3]],
                num_epochs: self.num_epochs[idx[4]],
            },
            system: self.systems.as_ref().map(|s| s[idx[5]]),
        }
    }

    fn dims(&self) -> [usize; 6] {
        [
            self.batch_size.len(),
            self.dropout_rate.len(),
            self.embedding_dims.len(),
            self.learning_rate.len(),
            self.num_epochs.len(),
            self.systems.as_ref().map_or(1, Vec::len),
        ]
    }

    /// Every point, last dimension varying fastest.
    pub fn points(&self) -> Vec<Candidate> {
        let dims = self.dims();
        let total = self.size();
        (0..total)
            .map(|mut flat| {
                let mut idx = [0usize; 6];
                for d in (0..6).rev() {
                    idx[d] = flat % dims[d];
                    flat /= dims[d];
                }
                self.candidate(idx)
            })
            .collect()
    }

    /// A point drawn uniformly per dimension.
    pub fn sample(&self, rng: &mut impl Rng) -> Candidate {
        let dims = self.dims();
        let mut idx = [0usize; 6];
        for (i, &d) in idx.iter_mut().zip(&dims) {
            *i = rng.random_range(0..d);
        }
        self.candidate(idx)
    }
}

/// Rounds of one successive-halving bracket: `(trials, epoch budget)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketPlan {
    pub s: u32,
    pub rounds: Vec<(u32, u32)>,
}

impl BracketPlan {
    pub fn total_epochs(&self) -> u64 {
        self.rounds.iter().map(|&(n, r)| n as u64 * r as u64).sum()
    }

    pub fn total_trials(&self) -> u64 {
        self.rounds.iter().map(|&(n, _)| n as u64).sum()
    }
}

/// HyperBand brackets for maximum budget `r_max` and halving factor `eta`,
/// most exploratory bracket first.
pub fn hyperband_plan(r_max: u32, eta: u32) -> Result<Vec<BracketPlan>> {
    if r_max < 1 {
        return Err(Error::InvalidParameter("R must be at least 1".into()));
    }
    if eta < 2 {
        return Err(Error::InvalidParameter("eta must be at least 2".into()));
    }
    let (r_max, eta) = (r_max as u64, eta as u64);
    let mut s_max = 0u32;
    while eta.pow(s_max + 1) <= r_max {
        s_max += 1;
    }
    let mut brackets = Vec::new();
    for s in (0..=s_max).rev() {
        let scale = eta.pow(s);
        let n = ((s_max as u64 + 1) * scale).div_ceil(s as u64 + 1);
        let r = (r_max / scale).max(1);
        let mut rounds = Vec::new();
        let (mut n_i, mut r_i) = (n, r);
        for _ in 0..=s {
            if n_i == 0 {
                break;
            }
            rounds.push((n_i as u32, r_i.min(r_max) as u32));
            n_i /= eta;
            r_i *= eta;
        }
        brackets.push(BracketPlan { s, rounds });
    }
    Ok(brackets)
}

/// A trial to run with an epoch budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub trial_id: u64,
    /// Point being trained, with `num_epochs` cut to the budget.
    pub candidate: Candidate,
    /// The point as drawn from the search space.
    pub base: Candidate,
    /// Epochs to train; also the `num_epochs` of `candidate.hyper`.
    pub budget: u32,
    /// Whether this run counts toward the final best.
    pub full_budget: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completed {
    pub proposal: Proposal,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Algorithm {
    HyperBand { r_max: u32, eta: u32 },
    Grid,
    Random { samples: u32 },
}

impl Default for Algorithm {
    fn default() -> Self {
        Algorithm::HyperBand { r_max: 81, eta: 3 }
    }
}

impl Algorithm {
    pub fn scheduler(&self, space: SearchSpace, seed: u64) -> Result<Scheduler> {
        space.check()?;
        let kind = match *self {
            Algorithm::HyperBand { r_max, eta } => Kind::HyperBand(HyperBandState {
                brackets: hyperband_plan(r_max, eta)?,
                r_max,
                bracket: 0,
                round: 0,
                survivors: Vec::new(),
            }),
            Algorithm::Grid => Kind::Once(false),
            Algorithm::Random { samples } => {
                if samples == 0 {
                    return Err(Error::InvalidParameter("random search needs at least one sample".into()));
                }
                Kind::Random { samples, done: false }
            }
        };
        Ok(Scheduler {
            space,
            seed,
            kind,
            next_id: 0,
            issued: BTreeMap::new(),
            pending: 0,
            round_results: Vec::new(),
            completed: Vec::new(),
        })
    }
}

#[derive(Debug, Clone)]
struct HyperBandState {
    brackets: Vec<BracketPlan>,
    r_max: u32,
    bracket: usize,
    round: usize,
    /// Candidates promoted to the current round.
    survivors: Vec<Candidate>,
}

#[derive(Debug, Clone)]
enum Kind {
    HyperBand(HyperBandState),
    /// Grid search; flag set once the grid was issued.
    Once(bool),
    Random { samples: u32, done: bool },
}

/// Search state. `next_trials` and `report` are called by a single owner.
#[derive(Debug, Clone)]
pub struct Scheduler {
    space: SearchSpace,
    seed: u64,
    kind: Kind,
    next_id: u64,
    issued: BTreeMap<u64, (Proposal, Option<f64>)>,
    pending: usize,
    round_results: Vec<Completed>,
    completed: Vec<Completed>,
}

fn with_budget(mut c: Candidate, budget: u32) -> (Candidate, u32) {
    let budget = budget.min(c.hyper.num_epochs);
    c.hyper.num_epochs = budget;
    (c, budget)
}

impl Scheduler {
    /// Next batch of trials. Empty while trials of the current batch are
    /// outstanding, and once the search is exhausted.
    pub fn next_trials(&mut self) -> Vec<Proposal> {
        if self.pending > 0 {
            return Vec::new();
        }
        let batch: Vec<(Candidate, u32, bool)> = match &mut self.kind {
            Kind::Once(done) => {
                if *done {
                    return Vec::new();
                }
                *done = true;
                self.space
                    .points()
                    .into_iter()
                    .map(|c| (c, c.hyper.num_epochs, true))
                    .collect()
            }
            Kind::Random { samples, done } => {
                if *done {
                    return Vec::new();
                }
                *done = true;
                let mut rng = stream_rng(self.seed, 0, 0x7261);
                (0..*samples)
                    .map(|_| {
                        let c = self.space.sample(&mut rng);
                        (c, c.hyper.num_epochs, true)
                    })
                    .collect()
            }
            Kind::HyperBand(hb) => {
                if !self.round_results.is_empty() {
                    hb.advance(std::mem::take(&mut self.round_results));
                }
                let Some(bracket) = hb.brackets.get(hb.bracket) else {
                    return Vec::new();
                };
                let (n, r) = bracket.rounds[hb.round];
                if hb.round == 0 {
                    let mut rng = stream_rng(self.seed, hb.bracket as u64, 0x6862);
                    hb.survivors = (0..n).map(|_| self.space.sample(&mut rng)).collect();
                }
                let full = r >= hb.r_max;
                hb.survivors.iter().map(|&c| (c, r, full)).collect()
            }
        };
        let out: Vec<Proposal> = batch
            .into_iter()
            .map(|(c, budget, full)| {
                let (candidate, budget) = with_budget(c, budget);
                let full_budget = full || budget == c.hyper.num_epochs;
                let p = Proposal {
                    trial_id: self.next_id,
                    candidate,
                    base: c,
                    budget,
                    full_budget,
                };
                self.next_id += 1;
                self.issued.insert(p.trial_id, (p, None));
                p
            })
            .collect();
        self.pending = out.len();
        out
    }

    pub fn report(&mut self, trial_id: u64, score: f64) -> Result<()> {
        let (proposal, slot) = self.issued.get_mut(&trial_id).ok_or(Error::UnknownTrial(trial_id))?;
        if slot.is_some() {
            return Err(Error::InvalidParameter(format!("trial {trial_id} already reported")));
        }
        *slot = Some(score);
        let done = Completed {
            proposal: *proposal,
            score,
        };
        self.pending -= 1;
        self.round_results.push(done);
        self.completed.push(done);
        Ok(())
    }

    /// Highest-scoring full-budget trial; earlier trial wins ties.
    pub fn best(&self) -> Option<Completed> {
        self.completed
            .iter()
            .filter(|c| c.proposal.full_budget)
            .min_by(|a, b| b.score.total_cmp(&a.score).then(a.proposal.trial_id.cmp(&b.proposal.trial_id)))
            .copied()
    }

    pub fn completed(&self) -> &[Completed] {
        &self.completed
    }

    pub fn pending(&self) -> usize {
        self.pending
    }

    pub fn is_finished(&self) -> bool {
        if self.pending > 0 {
            return false;
        }
        match &self.kind {
            Kind::Once(done) => *done,
            Kind::Random { done, .. } => *done,
            Kind::HyperBand(hb) => {
                let mut probe = hb.clone();
                if !self.round_results.is_empty() {
                    probe.advance(self.round_results.clone());
                }
                probe.bracket >= probe.brackets.len()
            }
        }
    }
}

impl HyperBandState {
    /// Moves past a fully reported round, keeping the top scorers.
    fn advance(&mut self, mut results: Vec<Completed>) {
        let bracket = &self.brackets[self.bracket];
        if self.round + 1 < bracket.rounds.len() {
            let keep = bracket.rounds[self.round + 1].0 as usize;
            results.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.proposal.trial_id.cmp(&b.proposal.trial_id)));
            self.survivors = results
                .iter()
                .take(keep)
                .map(|c| c.proposal.base)
                .collect();
            self.round += 1;
        } else {
            self.bracket += 1;
            self.round = 0;
            self.survivors.clear();
        }
    }
}
