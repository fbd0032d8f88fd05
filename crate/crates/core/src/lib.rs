//! Pipelined hyperparameter and system-parameter tuning.
//!
//! Hyperparameter search (HyperBand, grid, random) proposes training trials.
//! Inside every trial a system tuner profiles the first epoch, asks the
//! ground-truth store whether a similar workload already has a known-good
//! `(cores, memory)` configuration, and otherwise probes the configuration
//! grid one epoch at a time before settling on the fastest configuration for
//! the remaining epochs. Training itself is provided by a deterministic
//! simulator, and all time is virtual.
//!
//! The numeric kernels ([`energy`], [`profiler`], [`ground_truth`]) are
//! generic over the scalar type; the aliases below fix them to `f64`, which
//! is what the rest of the engine uses.

pub mod energy;
pub mod error;
pub mod ground_truth;
pub mod hpo;
pub mod metric_store;
pub mod model;
pub mod orchestrator;
pub mod probing;
pub mod profiler;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{
    enumerate_system_grid, score, validate, EpochRecord, Family, HyperParams, Objective,
    SystemConfig, TrialResult, TrialSpec, WorkloadSpec,
};
pub use scalar::Scalar;

pub type PowerTrace = energy::PowerTrace<f64>;
pub type EventSample = profiler::EventSample<f64>;
pub type EpochProfile = profiler::EpochProfile<f64>;

pub type ClusterModel = ground_truth::ClusterModel<f64>;
pub type HistoryEntry = ground_truth::HistoryEntry<f64>;
