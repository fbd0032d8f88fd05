//! Similarity store over historical epoch profiles.
//!
//! Profiles are z-scored per event and clustered with k-means. A new
//! profile is "similar" when its distance to the nearest centroid is within
//! `theta * sqrt(inertia / trained_on)`, i.e. a multiple of the per-point RMS
//! distance of the training set. Each cluster remembers the best-scoring
//! system configuration seen among its members, both overall and per batch
//! size, and similar profiles reuse it.
//!
//! Scores are speedups: the duration of the profiled epoch at the trial's
//! initial configuration divided by the duration under the recorded
//! configuration. Higher is better.

mod kmeans;
pub mod purity;
mod store;
pub mod sweep;

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, nearest, squared_distance, KMeansFit, KMeansParams, Standardizer};
pub use store::GroundTruth;

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::profiler::EpochProfile;
use crate::scalar::Scalar;

/// Identifier written into persisted model files.
pub const MODEL_FORMAT: &str = "ptune-ground-truth";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthConfig {
    pub kmeans: KMeansParams,
    /// Threshold multiple of the per-point RMS training distance.
    pub theta: f64,
    /// Refit after this many novel profiles.
    pub recluster_after: usize,
    /// Rolling window of recent queries.
    pub window: usize,
    /// Refit when the failure fraction over a full window exceeds this.
    pub window_fail_fraction: f64,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self {
            kmeans: KMeansParams::default(),
            theta: 2.0,
            recluster_after: 10,
            window: 20,
            window_fail_fraction: 0.5,
        }
    }
}

/// One historical observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry<T> {
    pub profile: EpochProfile<T>,
    pub config: Option<SystemConfig>,
    pub score: Option<T>,
    pub batch_size: Option<u32>,
}

impl<T> HistoryEntry<T> {
    pub fn profile_only(profile: EpochProfile<T>) -> Self {
        Self {
            profile,
            config: None,
            score: None,
            batch_size: None,
        }
    }

    pub fn with_result(profile: EpochProfile<T>, config: SystemConfig, score: T, batch_size: u32) -> Self {
        Self {
            profile,
            config: Some(config),
            score: Some(score),
            batch_size: Some(batch_size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestRecord<T> {
    pub config: SystemConfig,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord<T> {
    pub count: usize,
    pub mean_sq_dist: T,
    pub best_config: Option<SystemConfig>,
    pub best_score: Option<T>,
    /// Best configuration per batch size.
    #[serde(default = "BTreeMap::new")]
    pub by_batch: BTreeMap<u32, BestRecord<T>>,
}

impl<T: Scalar> ClusterRecord<T> {
    fn empty() -> Self {
        Self {
            count: 0,
            mean_sq_dist: T::zero(),
            best_config: None,
            best_score: None,
            by_batch: BTreeMap::new(),
        }
    }

    /// Folds in a scored configuration; returns whether anything improved.
    /// Ties keep the incumbent.
    fn offer(&mut self, config: SystemConfig, score: T, batch_size: Option<u32>) -> bool {
        let mut improved = false;
        if self.best_score.is_none_or(|s| score > s) {
            self.best_config = Some(config);
            self.best_score = Some(score);
            improved = true;
        }
        if let Some(b) = batch_size {
            let better = self.by_batch.get(&b).is_none_or(|r| score > r.score);
            if better {
                self.by_batch.insert(b, BestRecord { config, score });
                improved = true;
            }
        }
        improved
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityVerdict<T> {
    pub cluster_id: usize,
    pub distance: T,
    pub threshold: T,
    /// `distance <= threshold`.
    pub within_threshold: bool,
    /// Within threshold and the cluster has a configuration to offer.
    pub reuse: bool,
    pub config: Option<SystemConfig>,
}

/// Fitted clustering plus the history it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<T> {
    pub config: GroundTruthConfig,
    pub k: usize,
    pub centroids: Vec<Vec<T>>,
    pub standardizer: Standardizer<T>,
    pub inertia: T,
    pub per_cluster: Vec<ClusterRecord<T>>,
    pub trained_on: usize,
    pub history: Vec<HistoryEntry<T>>,
    /// Novel profiles seen since the last fit.
    pub novelty: usize,
    /// Threshold failures of the most recent queries, oldest first.
    pub recent: VecDeque<bool>,
    pub refits: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    format: String,
    version: u32,
    model: ClusterModel<T>,
}

impl<T: Scalar> ClusterModel<T> {
    /// Fits k-means on the profiles of `history` (all entries are used).
    pub fn fit(history: Vec<HistoryEntry<T>>, config: GroundTruthConfig) -> Result<Self> {
        if history.len() < config.kmeans.k {
            return Err(Error::Insufficient {
                what: "profiles",
                needed: config.kmeans.k,
                got: history.len(),
            });
        }
        for h in &history {
            h.profile.check()?;
        }
        let raw: Vec<Vec<T>> = history.iter().map(|h| h.profile.values.clone()).collect();
        let standardizer = Standardizer::fit(&raw)?;
        let points: Vec<Vec<T>> = raw.iter().map(|p| standardizer.apply(p)).collect();
        let fit = kmeans(&points, &config.kmeans)?;

        let k = config.kmeans.k;
        let mut per_cluster: Vec<ClusterRecord<T>> = (0..k).map(|_| ClusterRecord::empty()).collect();
        let mut sums = vec![T::zero(); k];
        for ((entry, &c), &d) in history.iter().zip(&fit.assignments).zip(&fit.sq_dists) {
            per_cluster[c].count += 1;
            sums[c] += d;
            if let (Some(cfg), Some(score)) = (entry.config, entry.score) {
                per_cluster[c].offer(cfg, score, entry.batch_size);
            }
        }
        for (rec, sum) in per_cluster.iter_mut().zip(sums) {
            if rec.count > 0 {
                rec.mean_sq_dist = sum / T::from_usize_lossy(rec.count);
            }
        }
        Ok(Self {
            config,
            k,
            centroids: fit.centroids,
            standardizer,
            inertia: fit.inertia,
            per_cluster,
            trained_on: history.len(),
            history,
            novelty: 0,
            recent: VecDeque::new(),
            refits: 0,
        })
    }

    /// Distance bound for reuse.
    pub fn threshold(&self) -> T {
        if self.trained_on == 0 {
            return T::zero();
        }
        let theta = T::from_f64_lossy(self.config.theta);
        theta * (self.inertia / T::from_usize_lossy(self.trained_on)).sqrt()
    }

    /// Nearest cluster and Euclidean distance in standardized space.
    pub fn assign(&self, profile: &EpochProfile<T>) -> (usize, T) {
        let z = self.standardizer.apply(&profile.values);
        let (c, d2) = nearest(&z, &self.centroids);
        (c, d2.sqrt())
    }

    /// Similarity against the cluster's overall best configuration.
    pub fn similarity(&self, profile: &EpochProfile<T>) -> SimilarityVerdict<T> {
        self.verdict(profile, |rec| rec.best_config)
    }

    /// Similarity against the cluster's best configuration for a batch size.
    /// Batch sizes the cluster has never seen do not reuse.
    pub fn similarity_for_batch(&self, profile: &EpochProfile<T>, batch_size: u32) -> SimilarityVerdict<T> {
        self.verdict(profile, |rec| rec.by_batch.get(&batch_size).map(|r| r.config))
    }

    fn verdict(
        &self,
        profile: &EpochProfile<T>,
        pick: impl Fn(&ClusterRecord<T>) -> Option<SystemConfig>,
    ) -> SimilarityVerdict<T> {
        let (cluster_id, distance) = self.assign(profile);
        let threshold = self.threshold();
        let within_threshold = distance <= threshold;
        let config = pick(&self.per_cluster[cluster_id]);
        SimilarityVerdict {
            cluster_id,
            distance,
            threshold,
            within_threshold,
            reuse: within_threshold && config.is_some(),
            config,
        }
    }

    /// Notes the outcome of a query in the rolling window.
    pub fn record_query(&mut self, verdict: &SimilarityVerdict<T>) {
        self.recent.push_back(!verdict.within_threshold);
        while self.recent.len() > self.config.window {
            self.recent.pop_front();
        }
    }

    pub fn should_recluster(&self) -> bool {
        if self.novelty >= self.config.recluster_after {
            return true;
        }
        let window = self.config.window;
        if window == 0 || self.recent.len() < window {
            return false;
        }
        let failures = self.recent.iter().filter(|&&f| f).count();
        failures as f64 / window as f64 > self.config.window_fail_fraction
    }

    /// Adds an observation. The assigned cluster's best configuration is
    /// replaced only on a strictly better score. Refits over the whole
    /// history when the re-cluster trigger fires.
    pub fn update(mut self, entry: HistoryEntry<T>) -> Result<Self> {
        self.update_in_place(entry)?;
        Ok(self)
    }

    /// In-place form of [`ClusterModel::update`]. A refit is computed in
    /// full before it replaces `self`.
    pub fn update_in_place(&mut self, entry: HistoryEntry<T>) -> Result<()> {
        entry.profile.check()?;
        let (cluster, distance) = self.assign(&entry.profile);
        if distance > self.threshold() {
            self.novelty += 1;
        }
        if let (Some(cfg), Some(score)) = (entry.config, entry.score) {
            self.per_cluster[cluster].offer(cfg, score, entry.batch_size);
        }
        self.history.push(entry);
        if self.should_recluster() {
            let mut refitted = Self::fit(self.history.clone(), self.config)?;
            refitted.refits = self.refits + 1;
            *self = refitted;
        }
        Ok(())
    }

    /// Re-runs the fit over the full history, keeping the configuration.
    pub fn refit(self) -> Result<Self> {
        let refits = self.refits + 1;
        let mut model = Self::fit(self.history, self.config)?;
        model.refits = refits;
        Ok(model)
    }

    /// Cluster assignment of every history entry.
    pub fn history_assignments(&self) -> Vec<usize> {
        self.history.iter().map(|h| self.assign(&h.profile).0).collect()
    }
}

impl<T: Scalar + Serialize + DeserializeOwned> ClusterModel<T> {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let file: ModelFile<T> = serde_json::from_str(text).map_err(|e| Error::parse(context, e))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::parse(context, format!("unexpected format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::parse(context, format!("unsupported version {}", file.version)));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// Free-function form of [`ClusterModel::fit`] with default settings and the given `k`.
pub fn fit<T: Scalar>(history: Vec<HistoryEntry<T>>, k: usize) -> Result<ClusterModel<T>> {
    let mut config = GroundTruthConfig::default();
    config.kmeans.k = k;
    ClusterModel::fit(history, config)
}
