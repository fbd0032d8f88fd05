use parking_lot::{Mutex, RwLock};

use super::{ClusterModel, HistoryEntry, SimilarityVerdict};
use crate::error::Result;
use crate::profiler::EpochProfile;

/// Shared ground-truth authority.
///
/// Queries run concurrently under a read lock. Updates and refits are
/// serialized through one writer and applied under the write lock, so
/// readers see either the old or the new model, never a partial refit.
#[derive(Debug)]
pub struct GroundTruth {
    model: RwLock<ClusterModel<f64>>,
    writer: Mutex<()>,
}

impl GroundTruth {
    pub fn new(model: ClusterModel<f64>) -> Self {
        Self {
            model: RwLock::new(model),
            writer: Mutex::new(()),
        }
    }

    /// Similarity for a profile and batch size; the outcome is recorded in
    /// the rolling query window.
    pub fn query(&self, profile: &EpochProfile, batch_size: u32) -> SimilarityVerdict<f64> {
        let verdict = self.model.read().similarity_for_batch(profile, batch_size);
        let _w = self.writer.lock();
        self.model.write().record_query(&verdict);
        verdict
    }

    /// Read-only similarity that does not touch the query window.
    pub fn peek(&self, profile: &EpochProfile, batch_size: u32) -> SimilarityVerdict<f64> {
        self.model.read().similarity_for_batch(profile, batch_size)
    }

    pub fn update(&self, entry: HistoryEntry<f64>) -> Result<()> {
        let _w = self.writer.lock();
        let mut guard = self.model.write();
        guard.update_in_place(entry)
    }

    pub fn with_model<R>(&self, f: impl FnOnce(&ClusterModel<f64>) -> R) -> R {
        f(&self.model.read())
    }

    pub fn snapshot(&self) -> ClusterModel<f64> {
        self.model.read().clone()
    }

    pub fn into_model(self) -> ClusterModel<f64> {
        self.model.into_inner()
    }
}
