//! Job description files (TOML).
//!
//! ```toml
//! job_id = "lenet5-mnist"
//! workload = "lenet5-mnist"        # bundled workload name, or
//! # workload_file = "my.toml"      # a workload file relative to this one
//! seed = 7
//! arrival_time_s = 0.0
//! max_parallel_trials = 4
//! default_system = { cores = 16, memory_gb = 8 }
//!
//! [search_space]
//! batch_size = [32, 64, 512, 1024]
//! dropout_rate = [0.0, 0.1, 0.25, 0.5]
//! embedding_dims = [50, 100, 200, 300]
//! learning_rate = [0.001, 0.003, 0.01, 0.03, 0.1]
//! num_epochs = [81]
//!
//! [algorithm]
//! kind = "hyper-band"
//! r_max = 81
//! eta = 3
//! ```
//!
//! Every field except `job_id` and one of `workload`/`workload_file` is
//! optional. The mode is chosen at run time.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{HptJob, Mode};
use crate::error::{Error, Result};
use crate::hpo::{Algorithm, SearchSpace};
use crate::model::{SystemConfig, WorkloadSpec, DEFAULT_SYSTEM};
use crate::simulator::catalog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub job_id: String,
    #[serde(default)]
    pub workload: Option<String>,
    #[serde(default)]
    pub workload_file: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub arrival_time_s: f64,
    #[serde(default = "default_parallel")]
    pub max_parallel_trials: usize,
    #[serde(default = "default_system")]
    pub default_system: SystemConfig,
    #[serde(default)]
    pub search_space: Option<SearchSpace>,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
}

fn default_parallel() -> usize {
    4
}

fn default_system() -> SystemConfig {
    DEFAULT_SYSTEM
}

impl JobFile {
    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        let file: JobFile = toml::from_str(text).map_err(|e| Error::parse(context, e))?;
        match (&file.workload, &file.workload_file) {
            (Some(_), None) | (None, Some(_)) => Ok(file),
            _ => Err(Error::parse(context, "exactly one of workload and workload_file is required")),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Resolves the workload; relative files are looked up under `base_dir`.
    pub fn resolve_workload(&self, base_dir: &Path) -> Result<(String, Arc<WorkloadSpec>)> {
        if let Some(name) = &self.workload {
            let spec = catalog::workload(name).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown workload {name:?}; bundled: {}",
                    catalog::names().join(", ")
                ))
            })?;
            return Ok((name.clone(), spec));
        }
        let rel = self.workload_file.as_ref().expect("checked on parse");
        let path = if rel.is_absolute() { rel.clone() } else { base_dir.join(rel) };
        let spec = WorkloadSpec::load(&path)?;
        Ok((path.display().to_string(), Arc::new(spec)))
    }

    /// Builds the job for `mode`. `seed` overrides the file's seed.
    pub fn to_job(&self, mode: Mode, seed: Option<u64>, base_dir: &Path) -> Result<HptJob> {
        let (name, workload) = self.resolve_workload(base_dir)?;
        let mut job = HptJob::new(&self.job_id, name, workload, mode, seed.or(self.seed).unwrap_or(0));
        if let Some(space) = &self.search_space {
            job.search_space = space.clone();
        }
        if let Some(algorithm) = self.algorithm {
            job.algorithm = algorithm;
        }
        job.arrival_time_s = self.arrival_time_s;
        job.max_parallel_trials = self.max_parallel_trials;
        job.default_system = self.default_system;
        let job = job.with_mode(mode);
        job.check()?;
        Ok(job)
    }
}

/// Loads a job file and builds the job for `mode`.
pub fn load_job(path: impl AsRef<Path>, mode: Mode, seed: Option<u64>) -> Result<HptJob> {
    let path = path.as_ref();
    let file = JobFile::load(path)?;
    file.to_job(mode, seed, path.parent().unwrap_or(Path::new(".")))
}
