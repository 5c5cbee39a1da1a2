use std::path::Path;
use std::process::{Command, Output};

use riscf_bench::output::CSV_HEADER;

const SMALL: &str = r#"
name = "small"
sweep_variable = "snr-db"
sweep_values = [0, 10, 20]
methods = ["ls", "somp"]
trials = 3
seed = 5
output_path = "small.csv"
plot = true

[scenario]
num_bs = 2
num_ris = 2
num_users = 2
bs_antennas = [4, 6]
ris_elements = 8
paths_bs_ris = 2
paths_ris_user = 2
pilot_power = 1.0
noise_power = 0.1

[training]
subframes_per_ris = 8

[estimator]
grid_bs = 16
grid_ris = 16
"#;

fn riscf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riscf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn run_small(dir: &Path, extra: &[&str]) -> String {
    let cfg = write_config(dir, SMALL);
    let out = dir.join("out");
    let mut args = vec!["run", cfg.as_str(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = riscf(&args);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out.join("small.csv")).unwrap()
}

#[test]
fn csv_has_one_row_per_method_and_value() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_small(dir.path(), &[]);
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 3);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert!(fields[0] == "ls" || fields[0] == "somp");
        assert_eq!(fields[1], "snr-db");
        assert_eq!(fields[5], "3");
        let linear: f64 = fields[3].parse().unwrap();
        let db: f64 = fields[4].parse().unwrap();
        assert!((10.0 * linear.log10() - db).abs() < 1e-6);
    }
    let svg = std::fs::read_to_string(dir.path().join("out/small.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn output_is_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = run_small(a.path(), &["--threads", "1"]);
    let four = run_small(b.path(), &["--threads", "4"]);
    assert_eq!(one, four);
}

#[test]
fn seed_flag_changes_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_ne!(run_small(a.path(), &[]), run_small(b.path(), &["--seed", "6"]));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), &SMALL.replace("trials = 3", "trials = 3\nturbo = true"));
    let o = riscf(&["run", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("turbo"));

    assert_eq!(riscf(&["run", "/nonexistent/exp.toml"]).status.code(), Some(2));
    assert_eq!(riscf(&["run"]).status.code(), Some(2));
    assert_eq!(riscf(&["run", "--preset", "fig9"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(riscf(&["run", &cfg, "--preset", "ci"]).status.code(), Some(2));
    assert_eq!(riscf(&["run", &cfg, "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = riscf(&["run", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn non_finite_noise_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("sweep_values = [0, 10, 20]", "sweep_values = [-4000]"),
    );
    let out = dir.path().join("out");
    let o = riscf(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.join("small.csv").exists());
}
