use std::path::{Path, PathBuf};

use clap::Subcommand;
use ptune_core::ground_truth::purity::Contingency;
use ptune_core::ground_truth::{ClusterModel, GroundTruthConfig};
use ptune_core::simulator::catalog;

use crate::output::{default_sweep_model, model_path};
use crate::{CliError, CliResult};

#[derive(Subcommand)]
pub enum GroundTruthCommand {
    /// Fit a model and save it. Without --sweep the saved model's history is refitted.
    Fit {
        /// Build the history from the default profiling sweep.
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of clusters.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Model file; defaults to the data directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print centroids, inertia and best configurations.
    Inspect {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print the cluster-versus-family contingency table.
    Purity {
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn load(path: &Path) -> CliResult<ClusterModel<f64>> {
    if !path.is_file() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no ground-truth model at {}; run `ptune groundtruth fit --sweep` first",
            path.display()
        )));
    }
    Ok(ClusterModel::load(path)?)
}

pub fn run(data_dir: &Path, cmd: GroundTruthCommand) -> CliResult {
    match cmd {
        GroundTruthCommand::Fit { sweep, seed, k, model } => {
            if k == 0 {
                return Err(CliError::Usage(anyhow::anyhow!("--k must be at least 1")));
            }
            let path = model_path(data_dir, model.as_deref());
            let fitted = if sweep {
                let (m, n) = default_sweep_model(seed)?;
                println!("profiling sweep: {n} profiles");
                if k == m.k {
                    m
                } else {
                    refit(m.history, k, seed)?
                }
            } else {
                let old = load(&path)?;
                refit(old.history, k, seed)?
            };
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(anyhow::Error::from)?;
            }
            fitted.save(&path)?;
            println!(
                "fitted k={} on {} profiles, inertia {:.3}, threshold {:.3}",
                fitted.k,
                fitted.trained_on,
                fitted.inertia,
                fitted.threshold()
            );
            println!("wrote {}", path.display());
            Ok(())
        }
        GroundTruthCommand::Inspect { model } => {
            let m = load(&model_path(data_dir, model.as_deref()))?;
            inspect(&m);
            Ok(())
        }
        GroundTruthCommand::Purity { model } => {
            let m = load(&model_path(data_dir, model.as_deref()))?;
            purity(&m);
            Ok(())
        }
    }
}

fn refit(
    history: Vec<ptune_core::ground_truth::HistoryEntry<f64>>,
    k: usize,
    seed: u64,
) -> CliResult<ClusterModel<f64>> {
    let mut config = GroundTruthConfig::default();
    config.kmeans.k = k;
    config.kmeans.seed = seed;
    ClusterModel::fit(history, config).map_err(|e| CliError::Runtime(anyhow::Error::from(e).context("insufficient history")))
}

fn inspect(m: &ClusterModel<f64>) {
    println!("clusters: {}", m.k);
    println!("trained on: {} profiles ({} in history)", m.trained_on, m.history.len());
    println!("inertia: {:.6}", m.inertia);
    println!("threshold: {:.6}", m.threshold());
    println!("refits: {}, novel since last fit: {}", m.refits, m.novelty);
    for (c, (rec, centroid)) in m.per_cluster.iter().zip(&m.centroids).enumerate() {
        let norm = centroid.iter().map(|v| v * v).sum::<f64>().sqrt();
        let head: Vec<String> = centroid.iter().take(4).map(|v| format!("{v:.3}")).collect();
        println!(
            "cluster {c}: {} members, mean sq dist {:.4}, centroid norm {:.3} [{} ...]",
            rec.count,
            rec.mean_sq_dist,
            norm,
            head.join(", ")
        );
        match (rec.best_config, rec.best_score) {
            (Some(cfg), Some(score)) => println!("  best overall: {cfg} (speedup {score:.3})"),
            _ => println!("  best overall: none"),
        }
        for (batch, best) in &rec.by_batch {
            println!("  batch {batch:>5}: {} (speedup {:.3})", best.config, best.score);
        }
    }
}

fn family_label(hint: Option<&str>) -> String {
    hint.and_then(catalog::name_for_key)
        .and_then(catalog::workload)
        .map_or_else(|| "unknown".to_string(), |w| w.family.label().to_string())
}

fn purity(m: &ClusterModel<f64>) {
    let assignments = m.history_assignments();
    let labels: Vec<String> = m
        .history
        .iter()
        .map(|h| family_label(h.profile.workload_hint.as_deref()))
        .collect();
    let table = Contingency::new(&assignments, &labels);
    let columns = table.labels();
    print!("{:<10}", "cluster");
    for l in &columns {
        print!(" {l:>10}");
    }
    println!();
    for (c, row) in &table.counts {
        print!("{c:<10}");
        for l in &columns {
            print!(" {:>10}", row.get(l).copied().unwrap_or(0));
        }
        println!();
    }
    println!("purity (all labels): {:.4}", table.purity());
    let (a, l): (Vec<usize>, Vec<String>) = assignments
        .iter()
        .zip(&labels)
        .filter(|(_, l)| l.as_str() == "type-i" || l.as_str() == "type-ii")
        .map(|(&a, l)| (a, l.clone()))
        .unzip();
    println!("purity (type-i vs type-ii): {:.4}", Contingency::new(&a, &l).purity());
}
