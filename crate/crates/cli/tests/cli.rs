use std::fs;
use std::process::{Command, Output};

fn aquarl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aquarl"))
        .args(args)
        .env_remove("AQUARL_SEED")
        .output()
        .expect("spawn aquarl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_exits_zero_and_lists_keys() {
    let o = aquarl(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let o = aquarl(&["train", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for flag in ["--dw", "--t-epsilon", "--k-min", "--out-dir", "--config"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("[default: 0.8]"));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aquarl(&[
        "train",
        "--config",
        "missing.file",
        "--seed",
        "1",
        "--out-dir",
        out,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.file"));
}

#[test]
fn unknown_flag_and_bad_value_exit_two() {
    assert_eq!(
        aquarl(&["simulate", "--no-such-flag", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        aquarl(&["simulate", "--gamma", "abc"]).status.code(),
        Some(2)
    );
    assert_eq!(
        aquarl(&["simulate", "--feed", "1.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_prints_header_plus_one_row_per_day() {
    let o = aquarl(&["simulate", "--days", "120", "--feed", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 121);
    assert_eq!(lines[0], "day,weight_g,ration_g");
    assert_eq!(lines[1], "0,6,0.18");
    assert!(o.stderr.is_empty());
}

#[test]
fn starving_simulation_is_a_runtime_error() {
    let o = aquarl(&[
        "simulate",
        "--days",
        "120",
        "--feed",
        "0",
        "--w0",
        "0.2",
        "--weight-floor",
        "0.19",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_aquarl"))
        .args([
            "train",
            "--mode",
            "cage",
            "--max-episodes",
            "200",
            "--out-dir",
            out,
        ])
        .env("AQUARL_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(dir.path().join("cage_seed5_report.csv").exists());
}

#[test]
fn train_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["--mode", "cage", "--max-episodes", "300"];
    let mut train = vec!["train", "--seed", "2", "--out-dir", out];
    train.extend(args);
    let o = aquarl(&train);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = stdout(&o);
    assert!(summary.contains("final weight") && summary.contains("MAPE"));

    let qtable = dir.path().join("cage_seed2_qtable.csv");
    let trajectory = dir.path().join("eval_trajectory.csv");
    let mut eval = vec![
        "evaluate",
        "--qtable",
        qtable.to_str().unwrap(),
        "--trajectory",
        trajectory.to_str().unwrap(),
    ];
    eval.extend(args);
    let o = aquarl(&eval);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        fs::read(&trajectory).unwrap(),
        fs::read(dir.path().join("cage_seed2_trajectory.csv")).unwrap()
    );

    // A table of the wrong shape for the config is rejected.
    let o = aquarl(&[
        "evaluate",
        "--qtable",
        qtable.to_str().unwrap(),
        "--mode",
        "tank",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aquarl(&[
        "sweep",
        "--seed",
        "1",
        "--n-seeds",
        "2",
        "--out-dir",
        out,
        "--mode",
        "cage",
        "--max-episodes",
        "100",
        "--axis",
        "dw=10,15",
        "--axis",
        "gamma=0.5,0.8,1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o).lines().count(), 1 + 6);
    let runs = fs::read_to_string(dir.path().join("sweep_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 12);
}

#[test]
fn reference_generate_and_inspect() {
    let o = aquarl(&["reference", "generate", "--horizon", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.csv");
    fs::write(&path, text).unwrap();
    let o = aquarl(&["reference", "inspect", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("non-decreasing  true"));
}
