use std::path::{Path, PathBuf};

use clap::Args;
use ptune_core::ground_truth::GroundTruth;
use ptune_core::metric_store::MetricStore;
use ptune_core::orchestrator::jobfile::JobFile;
use ptune_core::orchestrator::{run_job, JobOutcome, Mode, Settings, TunePath};

use crate::output::{csv_writer, fmt_f, load_or_warm_start, model_path, record_job, run_id};
use crate::{require_file, CliError, CliResult, ModeArg};

#[derive(Args)]
pub struct RunArgs {
    /// Job description file (TOML).
    #[arg(long)]
    job: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    mode: ModeArg,
    /// Overrides the seed in the job file.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for summary.csv and epochs.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Ground-truth model for PipeTune; defaults to the one in the data
    /// directory, or a fit on the default profiling sweep.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Skip recording into the metric store.
    #[arg(long)]
    no_record: bool,
}

pub fn run(data_dir: &Path, args: RunArgs) -> CliResult {
    require_file(&args.job, "job file")?;
    let file = JobFile::load(&args.job).map_err(|e| CliError::Usage(e.into()))?;
    let base = args.job.parent().unwrap_or(Path::new("."));
    let settings = Settings::default();
    let modes = args.mode.modes();
    let mut outcomes = Vec::new();
    for &mode in &modes {
        let job = file.to_job(mode, args.seed, base).map_err(|e| CliError::Usage(e.into()))?;
        let ground_truth = if mode == Mode::PipeTune {
            let path = model_path(data_dir, args.ground_truth.as_deref());
            let (model, source) = load_or_warm_start(&path)?;
            eprintln!("pipetune: ground truth from {source}");
            Some(GroundTruth::new(model))
        } else {
            None
        };
        let outcome = run_job(&job, ground_truth.as_ref(), &settings)?;
        outcomes.push((job, outcome));
    }

    write_summary(&args.out, outcomes.iter().map(|(_, o)| o))?;
    write_epochs(&args.out, outcomes.iter().map(|(_, o)| o))?;

    if !args.no_record {
        let store = MetricStore::open(data_dir)?;
        for (job, o) in &outcomes {
            let id = run_id(&o.job_id, &(job.seed, job.mode, &job.search_space, &job.algorithm, &job.workload));
            record_job(&store, "run", &id, o, true)?;
        }
        store.flush()?;
    }

    println!(
        "{:<10} {:>12} {:>18} {:>16} {:>14}",
        "mode", "accuracy[%]", "training time[s]", "tuning time[s]", "energy[kJ]"
    );
    for (_, o) in &outcomes {
        println!(
            "{:<10} {:>12.2} {:>18.1} {:>16.1} {:>14.1}",
            o.mode.label(),
            o.final_accuracy * 100.0,
            o.training_time_s,
            o.tuning_time_s,
            o.total_energy_j / 1000.0
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "mode",
    "job_id",
    "workload",
    "accuracy",
    "training_time_s",
    "tuning_time_s",
    "energy_j",
    "best_trial",
    "batch_size",
    "learning_rate",
    "dropout_rate",
    "embedding_dims",
    "num_epochs",
    "cores",
    "memory_gb",
    "trials",
];

fn write_summary<'a>(out: &Path, outcomes: impl Iterator<Item = &'a JobOutcome>) -> anyhow::Result<()> {
    let mut w = csv_writer(out, "summary.csv")?;
    w.write_record(SUMMARY_HEADER)?;
    for o in outcomes {
        let h = &o.best_hyper;
        w.write_record([
            o.mode.label().to_string(),
            o.job_id.clone(),
            o.workload_name.clone(),
            fmt_f(o.final_accuracy),
            fmt_f(o.training_time_s),
            fmt_f(o.tuning_time_s),
            fmt_f(o.total_energy_j),
            o.best_trial.to_string(),
            h.batch_size.to_string(),
            h.learning_rate.to_string(),
            h.dropout_rate.to_string(),
            h.embedding_dims.to_string(),
            h.num_epochs.to_string(),
            o.best_system.cores.to_string(),
            o.best_system.memory_gb.to_string(),
            o.trials.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const EPOCHS_HEADER: [&str; 11] = [
    "mode",
    "job_id",
    "trial_id",
    "epoch",
    "cores",
    "memory_gb",
    "duration_s",
    "accuracy",
    "energy_j",
    "path",
    "end_s",
];

fn path_label(path: TunePath) -> &'static str {
    match path {
        TunePath::Fixed => "fixed",
        TunePath::Reuse => "reuse",
        TunePath::Probe { truncated: false, .. } => "probe",
        TunePath::Probe { truncated: true, .. } => "probe-truncated",
        TunePath::TooShort => "too-short",
    }
}

fn write_epochs<'a>(out: &Path, outcomes: impl Iterator<Item = &'a JobOutcome>) -> anyhow::Result<()> {
    let mut w = csv_writer(out, "epochs.csv")?;
    w.write_record(EPOCHS_HEADER)?;
    for o in outcomes {
        let mut trials: Vec<_> = o.trials.iter().collect();
        trials.sort_by_key(|t| t.trial_id);
        for t in trials {
            let mut clock = t.start_s - o.start_s;
            for e in &t.tuned.result.epochs {
                clock += e.duration_s;
                w.write_record([
                    o.mode.label().to_string(),
                    o.job_id.clone(),
                    t.trial_id.to_string(),
                    e.index.to_string(),
                    e.system.cores.to_string(),
                    e.system.memory_gb.to_string(),
                    fmt_f(e.duration_s),
                    fmt_f(e.accuracy_after),
                    fmt_f(e.energy_j),
                    path_label(t.tuned.path).to_string(),
                    fmt_f(clock),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
