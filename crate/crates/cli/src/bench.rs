use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use ptune_core::ground_truth::GroundTruth;
use ptune_core::metric_store::MetricStore;
use ptune_core::orchestrator::trace::{generate_trace, jobs_from_trace, read_trace, write_trace, TraceEntry, TraceSpec};
use ptune_core::orchestrator::{run_queue, JobOutcome, Mode, Settings};
use ptune_core::simulator::catalog;

use crate::output::{csv_writer, fmt_f, load_or_warm_start, model_path, record_job, run_id};
use crate::{require_file, CliError, CliResult, ModeArg};

#[derive(Args)]
pub struct BenchArgs {
    /// Arrival trace CSV (`arrival_time_s,job_ref`).
    #[arg(long, conflicts_with_all = ["rate", "jobs", "unseen"])]
    trace: Option<PathBuf>,
    /// Mean arrivals per second of a generated trace.
    #[arg(long, default_value_t = 5e-5)]
    rate: f64,
    /// Number of jobs in a generated trace.
    #[arg(long, default_value_t = 20)]
    jobs: usize,
    /// Share of generated jobs whose workload the warm-start model has not seen.
    #[arg(long, default_value_t = 0.2)]
    unseen: f64,
    #[arg(long, value_enum, default_value = "all")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for response.csv and the trace that was run.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long)]
    no_record: bool,
}

pub fn run(data_dir: &Path, args: BenchArgs) -> CliResult {
    let (trace, base) = match &args.trace {
        Some(path) => {
            require_file(path, "trace file")?;
            let trace = read_trace(path).map_err(|e| CliError::Usage(e.into()))?;
            (trace, path.parent().unwrap_or(Path::new(".")).to_path_buf())
        }
        None => {
            if !(args.rate > 0.0) || args.jobs == 0 || !(0.0..=1.0).contains(&args.unseen) {
                return Err(CliError::Usage(anyhow::anyhow!(
                    "--rate must be positive, --jobs at least 1 and --unseen within [0, 1]"
                )));
            }
            let spec = TraceSpec {
                jobs: args.jobs,
                rate: args.rate,
                unseen_fraction: args.unseen,
                seed: args.seed,
            };
            (generate_trace(&spec)?, PathBuf::from("."))
        }
    };
    if trace.is_empty() {
        return Err(CliError::Usage(anyhow::anyhow!("trace has no jobs")));
    }
    std::fs::create_dir_all(&args.out).map_err(anyhow::Error::from)?;
    write_trace(args.out.join("trace.csv"), &trace)?;

    let settings = Settings::default();
    let mut results: Vec<(Mode, Vec<JobOutcome>)> = Vec::new();
    for mode in args.mode.modes() {
        let jobs = jobs_from_trace(&trace, mode, args.seed, &base).map_err(|e| CliError::Usage(e.into()))?;
        let ground_truth = if mode == Mode::PipeTune {
            let (model, source) = load_or_warm_start(&model_path(data_dir, args.ground_truth.as_deref()))?;
            eprintln!("pipetune: ground truth from {source}");
            Some(GroundTruth::new(model))
        } else {
            None
        };
        results.push((mode, run_queue(&jobs, ground_truth.as_ref(), &settings)?));
    }

    write_responses(&args.out, &trace, &results)?;
    if !args.no_record {
        let store = MetricStore::open(data_dir)?;
        let id = run_id("bench", &(args.seed, &trace));
        for (_, outcomes) in &results {
            for o in outcomes {
                record_job(&store, "bench", &id, o, false)?;
            }
        }
        store.flush()?;
    }
    print_table(&trace, &results);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn is_unseen(job_ref: &str) -> bool {
    catalog::holdout_workloads().iter().any(|(n, _)| *n == job_ref)
}

pub const RESPONSE_HEADER: [&str; 9] = [
    "mode",
    "job_id",
    "workload",
    "family",
    "unseen",
    "arrival_s",
    "start_s",
    "response_time_s",
    "tuning_time_s",
];

fn write_responses(out: &Path, trace: &[TraceEntry], results: &[(Mode, Vec<JobOutcome>)]) -> anyhow::Result<()> {
    let mut w = csv_writer(out, "response.csv")?;
    w.write_record(RESPONSE_HEADER)?;
    for (mode, outcomes) in results {
        for (o, entry) in outcomes.iter().zip(trace) {
            w.write_record([
                mode.label().to_string(),
                o.job_id.clone(),
                o.workload_name.clone(),
                o.family.label().to_string(),
                is_unseen(&entry.job_ref).to_string(),
                fmt_f(o.arrival_time_s),
                fmt_f(o.start_s),
                fmt_f(o.response_time_s),
                fmt_f(o.tuning_time_s),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn print_table(trace: &[TraceEntry], results: &[(Mode, Vec<JobOutcome>)]) {
    println!("{:<10} {:<10} {:>6} {:>22}", "mode", "family", "jobs", "mean response[s]");
    let mut overall = BTreeMap::new();
    for (mode, outcomes) in results {
        let mut by_family: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for o in outcomes {
            by_family.entry(o.family.label()).or_default().push(o.response_time_s);
        }
        for (family, xs) in &by_family {
            println!("{:<10} {:<10} {:>6} {:>22.1}", mode.label(), family, xs.len(), mean(xs));
        }
        let all: Vec<f64> = outcomes.iter().map(|o| o.response_time_s).collect();
        println!("{:<10} {:<10} {:>6} {:>22.1}", mode.label(), "all", all.len(), mean(&all));
        overall.insert(*mode, mean(&all));
    }
    let unseen = trace.iter().filter(|e| is_unseen(&e.job_ref)).count();
    println!("unseen jobs: {unseen}/{}", trace.len());
    if let (Some(v1), Some(pt)) = (overall.get(&Mode::V1), overall.get(&Mode::PipeTune)) {
        if *v1 > 0.0 {
            println!("pipetune mean response reduction vs v1: {:.1}%", (1.0 - pt / v1) * 100.0);
        }
    }
}
