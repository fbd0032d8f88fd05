//! Plot-ready tables from the metric store.
//!
//! * `trajectory.csv`: accuracy of each finished trial against time since
//!   the job started, with the best accuracy so far.
//! * `bars.csv`: per-job accuracy, training time, tuning time and energy.
//! * `response.csv`: per-job response and tuning time of trace runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ptune_core::metric_store::{tags, MetricStore, SeriesPoint};

use crate::output::{csv_writer, fmt_f};
use crate::CliResult;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "report")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

pub const TRAJECTORY_HEADER: [&str; 7] = ["run", "mode", "job_id", "trial_id", "elapsed_s", "accuracy", "best_accuracy"];
pub const BARS_HEADER: [&str; 8] = [
    "run",
    "mode",
    "job_id",
    "workload",
    "accuracy",
    "training_time_s",
    "tuning_time_s",
    "energy_j",
];
pub const RESPONSE_HEADER: [&str; 7] = ["run", "mode", "job_id", "workload", "family", "response_time_s", "tuning_time_s"];

fn tag<'a>(p: &'a SeriesPoint, key: &str) -> &'a str {
    p.tag(key).unwrap_or("")
}

/// Job-level points keyed by (run, mode, job).
fn job_values(store: &MetricStore, series: &str, kind: &str) -> anyhow::Result<BTreeMap<(String, String, String), SeriesPoint>> {
    Ok(store
        .query(series, &tags([("kind", kind)]))?
        .into_iter()
        .map(|p| ((tag(&p, "run").to_string(), tag(&p, "mode").to_string(), tag(&p, "job").to_string()), p))
        .collect())
}

pub fn run(data_dir: &Path, args: ReportArgs) -> CliResult {
    let Format::Csv = args.format;
    let store = MetricStore::open(data_dir)?;
    write_trajectory(&store, &args.out)?;
    write_bars(&store, &args.out)?;
    write_response(&store, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn write_trajectory(store: &MetricStore, out: &Path) -> anyhow::Result<()> {
    let mut w = csv_writer(out, "trajectory.csv")?;
    w.write_record(TRAJECTORY_HEADER)?;
    let mut series: BTreeMap<(String, String, String), Vec<SeriesPoint>> = BTreeMap::new();
    for p in store.query("trial.accuracy", &tags([("kind", "run")]))? {
        let key = (tag(&p, "run").to_string(), tag(&p, "mode").to_string(), tag(&p, "job").to_string());
        series.entry(key).or_default().push(p);
    }
    for ((run, mode, job), mut points) in series {
        points.sort_by(|a, b| a.t.total_cmp(&b.t).then_with(|| trial_num(a).cmp(&trial_num(b))));
        let mut best = f64::NEG_INFINITY;
        for p in points {
            best = best.max(p.value);
            w.write_record([
                run.as_str(),
                mode.as_str(),
                job.as_str(),
                tag(&p, "trial"),
                &fmt_f(p.t),
                &fmt_f(p.value),
                &fmt_f(best),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn trial_num(p: &SeriesPoint) -> u64 {
    tag(p, "trial").parse().unwrap_or(0)
}

fn write_bars(store: &MetricStore, out: &Path) -> anyhow::Result<()> {
    let mut w = csv_writer(out, "bars.csv")?;
    w.write_record(BARS_HEADER)?;
    let acc = job_values(store, "job.accuracy", "run")?;
    let train = job_values(store, "job.training_time_s", "run")?;
    let tune = job_values(store, "job.tuning_time_s", "run")?;
    let energy = job_values(store, "job.energy_j", "run")?;
    for (key, p) in &acc {
        let value = |m: &BTreeMap<_, SeriesPoint>| m.get(key).map_or_else(String::new, |p| fmt_f(p.value));
        w.write_record([
            key.0.as_str(),
            key.1.as_str(),
            key.2.as_str(),
            tag(p, "workload"),
            &fmt_f(p.value),
            &value(&train),
            &value(&tune),
            &value(&energy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_response(store: &MetricStore, out: &Path) -> anyhow::Result<()> {
    let mut w = csv_writer(out, "response.csv")?;
    w.write_record(RESPONSE_HEADER)?;
    let response = job_values(store, "job.response_time_s", "bench")?;
    let tune = job_values(store, "job.tuning_time_s", "bench")?;
    for (key, p) in &response {
        w.write_record([
            key.0.as_str(),
            key.1.as_str(),
            key.2.as_str(),
            tag(p, "workload"),
            tag(p, "family"),
            &fmt_f(p.value),
            &tune.get(key).map_or_else(String::new, |p| fmt_f(p.value)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
