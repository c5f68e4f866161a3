//! End-to-end checks of the `gpca` binary: subcommand outputs, config
//! handling, and the documented exit codes (0 success, 1 spec/i-o errors,
//! 2 degenerate-only sweeps).

use std::path::Path;
use std::process::Command;

fn gpca() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gpca"))
}

#[test]
fn moments_prints_pinned_constants() {
    let out = gpca().args(["moments", "--l", "1", "--u", "5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("l,u,gamma,beta\n"));
    assert!(text.contains("0.4839384755992573"));
    assert!(text.contains("0.9678055886618073"));
}

#[test]
fn moments_rejects_bad_thresholds_with_exit_1() {
    let out = gpca().args(["moments", "--l", "0.5", "--u", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("invalid argument"));
}

#[test]
fn unknown_flag_exits_1() {
    let out = gpca().args(["sweep", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let out = gpca().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("sweep"));
}

#[test]
fn sweep_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = gpca()
        .args([
            "sweep",
            "--n",
            "24",
            "--k",
            "4",
            "--m-values",
            "50",
            "--trials",
            "2",
            "--restarts",
            "1",
            "--iterations",
            "8",
            "--solvers",
            "power,ppower",
            "--base-seed",
            "11",
            "--jobs",
            "1",
            "--output",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["rows.csv", "summary.csv", "manifest.txt", "plot.gp"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let rows = std::fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4); // header + 2 solvers x 2 trials
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("solver,m,count,"));
}

#[test]
fn sweep_exit_code_1_on_bad_spec() {
    let out = gpca()
        .args(["sweep", "--n", "24", "--k", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("group layout"), "stderr: {err}");
}

#[test]
fn sweep_exit_code_2_when_every_trial_degenerates() {
    // A network whose second layer is zero keeps every forward pass under
    // the norm floor, so truth sampling fails in every trial.
    let dir = tempfile::tempdir().unwrap();
    let weights_path = dir.path().join("dead-net.bin");
    let net = gpca::generators::ReluNetWeights::new(
        ndarray::Array2::eye(4),
        ndarray::Array2::zeros((16, 4)),
    )
    .unwrap();
    gpca::io::write_relu_net_to_path(&weights_path, &net).unwrap();

    let out_dir = dir.path().join("out");
    let out = gpca()
        .args([
            "sweep", "--n", "16", "--range", "relu-net", "--k", "4", "--hidden", "4",
            "--m-values", "30", "--trials", "2", "--restarts", "1", "--iterations", "5",
            "--solvers", "ppower", "--jobs", "1",
        ])
        .arg("--weights")
        .arg(&weights_path)
        .arg("--output")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    // Rows are still written for inspection, all flagged failed.
    let rows = std::fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert!(rows.lines().skip(1).all(|l| l.is_empty() || l.ends_with("true")));
}

#[test]
fn sweep_accepts_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.cfg");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &config_path,
        "model = spiked-covariance\nn = 24\nrange = group-sparse\nk = 4\n\
         solvers = power\nm_values = 40\ntrials = 1\nrestarts = 1\niterations = 6\n\
         base_seed = 3\n",
    )
    .unwrap();
    let out = gpca()
        .arg("sweep")
        .arg("--config")
        .arg(&config_path)
        .args(["--trials", "2", "--jobs", "1"])
        .arg("--output")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2); // override took: 2 trials
}

#[test]
fn audit_emits_csv_table() {
    let out = gpca()
        .args([
            "audit", "--n", "16", "--s1", "8", "--s2", "8", "--m-grid", "32,128",
            "--trials", "3", "--base-seed", "9",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,trial,max_ratio"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn props_battery_passes() {
    let out = gpca().args(["props", "--base-seed", "7"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("prop distance_sandwich: PASS"));
    assert!(text.contains("all properties passed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn matrix_cache_files_round_trip_through_the_library() {
    // The documented flat binary layout: header line, u64 n, n^2 doubles.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.bin");
    let truth = gpca::models::GroundTruth::new(
        ndarray::Array1::from_vec(vec![0.6, 0.8, 0.0]),
        2.0,
        0.5,
    )
    .unwrap();
    let matrix = gpca::models::population_matrix(&truth);
    gpca::io::write_matrix_to_path(&path, &matrix).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    let header_end = bytes.iter().position(|&b| b == b'\n').unwrap();
    let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
    assert!(header.starts_with("gpca-matrix v1 provenance=custom m=0 seed=none"));
    let n = u64::from_le_bytes(bytes[header_end + 1..header_end + 9].try_into().unwrap());
    assert_eq!(n, 3);
    assert_eq!(bytes.len(), header_end + 1 + 8 + 9 * 8);

    let back = gpca::io::read_matrix_from_path(Path::new(&path)).unwrap();
    assert_eq!(back.v(), matrix.v());
}
