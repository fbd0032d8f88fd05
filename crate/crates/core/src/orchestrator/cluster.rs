//! Node-level resource accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub nodes: u32,
    pub cores_per_node: u32,
    pub memory_gb_per_node: u32,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            nodes: 4,
            cores_per_node: 32,
            memory_gb_per_node: 64,
        }
    }
}

/// Identifies a running trial across jobs.
pub type AllocationKey = (usize, u64);

/// Free capacity per node plus the live allocations.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub spec: ClusterSpec,
    free: Vec<(u32, u32)>,
    pub allocations: BTreeMap<AllocationKey, (usize, SystemConfig)>,
}

impl ClusterState {
    pub fn new(spec: ClusterSpec) -> Result<Self> {
        if spec.nodes == 0 || spec.cores_per_node == 0 || spec.memory_gb_per_node == 0 {
            return Err(Error::InvalidParameter("cluster must have capacity".into()));
        }
        Ok(Self {
            spec,
            free: vec![(spec.cores_per_node, spec.memory_gb_per_node); spec.nodes as usize],
            allocations: BTreeMap::new(),
        })
    }

    /// Whether `want` could ever fit on an empty node.
    pub fn admits(&self, want: SystemConfig) -> bool {
        want.cores <= self.spec.cores_per_node && want.memory_gb <= self.spec.memory_gb_per_node
    }

    /// Places `want` on the first node with room; `None` when full.
    pub fn allocate(&mut self, key: AllocationKey, want: SystemConfig) -> Option<usize> {
        let node = self
            .free
            .iter()
            .position(|&(c, m)| c >= want.cores && m >= want.memory_gb)?;
        self.free[node].0 -= want.cores;
        self.free[node].1 -= want.memory_gb;
        self.allocations.insert(key, (node, want));
        Some(node)
    }

    pub fn release(&mut self, key: AllocationKey) -> Result<()> {
        let (node, cfg) = self
            .allocations
            .remove(&key)
            .ok_or_else(|| Error::InvalidParameter(format!("no allocation for trial {:?}", key)))?;
        self.free[node].0 += cfg.cores;
        self.free[node].1 += cfg.memory_gb;
        Ok(())
    }

    pub fn free(&self) -> &[(u32, u32)] {
        &self.free
    }

    /// Allocated cores and memory never exceed node capacity.
    pub fn is_consistent(&self) -> bool {
        let mut used = vec![(0u32, 0u32); self.free.len()];
        for &(node, cfg) in self.allocations.values() {
            used[node].0 += cfg.cores;
            used[node].1 += cfg.memory_gb;
        }
        used.iter().zip(&self.free).all(|(&(uc, um), &(fc, fm))| {
            uc + fc == self.spec.cores_per_node && um + fm == self.spec.memory_gb_per_node
        })
    }
}
