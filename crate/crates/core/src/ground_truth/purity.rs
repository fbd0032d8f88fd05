//! Cluster-versus-label agreement.

use std::collections::BTreeMap;

/// Counts of `(cluster, label)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency<L: Ord> {
    pub counts: BTreeMap<usize, BTreeMap<L, usize>>,
}

impl<L: Ord + Clone> Contingency<L> {
    pub fn new(assignments: &[usize], labels: &[L]) -> Self {
        let mut counts: BTreeMap<usize, BTreeMap<L, usize>> = BTreeMap::new();
        for (&c, l) in assignments.iter().zip(labels) {
            *counts.entry(c).or_default().entry(l.clone()).or_default() += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.values().flat_map(|m| m.values()).sum()
    }

    /// Share of points whose label is the majority label of their cluster.
    pub fn purity(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let majority: usize = self
            .counts
            .values()
            .map(|m| m.values().copied().max().unwrap_or(0))
            .sum();
        majority as f64 / total as f64
    }

    pub fn labels(&self) -> Vec<L> {
        let mut labels: Vec<L> = self.counts.values().flat_map(|m| m.keys().cloned()).collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

pub fn purity<L: Ord + Clone>(assignments: &[usize], labels: &[L]) -> f64 {
    Contingency::new(assignments, labels).purity()
}
