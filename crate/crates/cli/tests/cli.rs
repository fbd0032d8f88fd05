use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ptune(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptune"))
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .output()
        .expect("spawn ptune")
}

fn jobs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../jobs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap_or("").to_string()
}

#[test]
fn missing_job_file_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ptune(tmp.path(), &["run", "--job", "does-not-exist.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ptune(tmp.path(), &["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inspect_without_a_model_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ptune(tmp.path(), &["groundtruth", "inspect"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("groundtruth fit --sweep"));
}

#[test]
fn report_on_an_empty_store_writes_headers_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("report");
    let o = ptune(&tmp.path().join("data"), &["report", "--out", path_arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (file, first) in [
        ("trajectory.csv", "run,mode,job_id,trial_id,elapsed_s,accuracy,best_accuracy"),
        ("bars.csv", "run,mode,job_id,workload,accuracy,training_time_s,tuning_time_s,energy_j"),
        ("response.csv", "run,mode,job_id,workload,family,response_time_s,tuning_time_s"),
    ] {
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.trim_end(), first, "{file}");
    }
}

#[test]
fn run_records_metrics_that_report_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    let job = jobs_dir().join("quick.toml");
    let o = ptune(&data, &["run", "--job", path_arg(&job), "--out", path_arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("pipetune"));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("mode,job_id,workload,accuracy,"));
    let modes: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(modes, vec!["v1", "v2", "pipetune"]);
    assert!(header(&out.join("epochs.csv")).starts_with("mode,job_id,trial_id,epoch,cores,memory_gb"));

    let report = tmp.path().join("report");
    let o = ptune(&data, &["report", "--out", path_arg(&report)]);
    assert!(o.status.success());
    let bars = std::fs::read_to_string(report.join("bars.csv")).unwrap();
    assert_eq!(bars.lines().count(), 4);
    let trajectory = std::fs::read_to_string(report.join("trajectory.csv")).unwrap();
    // Two grid trials for v1 and pipetune; v2 crosses them with 12 systems.
    assert_eq!(trajectory.lines().count(), 1 + 2 + 24 + 2);
}

#[test]
fn groundtruth_fit_inspect_and_purity() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ptune(tmp.path(), &["groundtruth", "fit", "--sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("576 profiles"));
    assert!(tmp.path().join("ground-truth.json").is_file());
    let o = ptune(tmp.path(), &["groundtruth", "inspect"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("clusters: 2"));
    let o = ptune(tmp.path(), &["groundtruth", "purity"]);
    assert!(stdout(&o).contains("purity (type-i vs type-ii): 1.0000"));
    let o = ptune(tmp.path(), &["groundtruth", "fit", "--k", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("fitted k=3"));
}

#[test]
fn bench_runs_a_one_job_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench");
    let o = ptune(
        &tmp.path().join("data"),
        &["bench", "--jobs", "1", "--mode", "v1", "--no-record", "--out", path_arg(&out)],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let response = std::fs::read_to_string(out.join("response.csv")).unwrap();
    assert_eq!(response.lines().count(), 2);
    assert_eq!(header(&out.join("trace.csv")), "arrival_time_s,job_ref");
    let bad = ptune(tmp.path(), &["bench", "--rate", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}
