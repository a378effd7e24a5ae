use std::fs;

use aquarl::experiment::{run, sweep, write_sweep_csv};
use aquarl::{ExperimentConfig, Mode, SweepSpec};
use rayon::prelude::*;

fn config(mode: Mode, overrides: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_mode(mode);
    for (k, v) in overrides {
        c.set(k, v).unwrap();
    }
    c
}

#[test]
fn identical_runs_write_identical_artifacts() {
    let cfg = config(Mode::Tank, &[("max_episodes", "2000")]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let files_a = run(&cfg, 11).unwrap().write_artifacts(a.path()).unwrap();
    let files_b = run(&cfg, 11).unwrap().write_artifacts(b.path()).unwrap();
    assert_eq!(files_a.len(), 5);
    for (x, y) in files_a.iter().zip(&files_b) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(
            fs::read(x).unwrap(),
            fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn different_seeds_explore_differently() {
    let cfg = config(Mode::Cage, &[("max_episodes", "500")]);
    let a = run(&cfg, 1).unwrap();
    let b = run(&cfg, 2).unwrap();
    assert_ne!(a.training.q, b.training.q);
}

#[test]
fn one_episode_is_flagged_unconverged() {
    let out = run(&config(Mode::Tank, &[("max_episodes", "1")]), 3).unwrap();
    assert!(!out.report.converged);
    assert_eq!(out.report.episodes_to_converge, 1);
    assert!(out.report.csv_row().ends_with(",false"));
}

#[test]
fn feeding_penalty_does_not_raise_total_feed() {
    let seeds: Vec<u64> = (1..=10).collect();
    let feed = |lambda: &str| -> Vec<f64> {
        let cfg = config(Mode::Cage, &[("lambda", lambda)]);
        seeds
            .par_iter()
            .map(|&s| run(&cfg, s).unwrap().report.total_feed)
            .collect()
    };
    let (free, penalized) = (feed("0"), feed("0.5"));
    let holds = free.iter().zip(&penalized).filter(|(f, p)| f >= p).count();
    assert!(
        holds >= 8,
        "only {holds}/10 seeds: {free:?} vs {penalized:?}"
    );
}

#[test]
fn tank_policy_stays_inside_temperature_range() {
    let out = run(&config(Mode::Tank, &[("max_episodes", "3000")]), 4).unwrap();
    for day in &out.trajectory.days {
        if let Some(a) = day.action {
            let t = out.env.conditions(&a).temperature;
            assert!((29.6 - 1e-12..=30.7 + 1e-12).contains(&t), "{t}");
        }
    }
    assert_eq!(out.trajectory.days.len(), 71);
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let base = config(Mode::Cage, &[("max_episodes", "50")]);
    let spec = SweepSpec::new(vec![
        SweepSpec::parse_axis("dw=10,15").unwrap(),
        SweepSpec::parse_axis("dt=7,10").unwrap(),
        SweepSpec::parse_axis("reward=L2,L2&L1,L1").unwrap(),
    ]);
    let rows = sweep(&spec, &base, &[1, 2]).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows
        .iter()
        .all(|r| r.runs.len() == 2 && r.failures.is_empty()));
    let mut csv = Vec::new();
    write_sweep_csv(&spec, &rows, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("dw,dt,reward,runs,failures,training_episodes"));
}

#[test]
fn sweep_records_failing_cells_and_continues() {
    let base = config(Mode::Cage, &[("max_episodes", "20")]);
    let spec = SweepSpec::new(vec![SweepSpec::parse_axis("dw=10,-1").unwrap()]);
    let rows = sweep(&spec, &base, &[1]).unwrap();
    assert_eq!(rows[0].runs.len(), 1);
    assert_eq!(rows[1].failures.len(), 1);
}

#[test]
fn csv_reference_drives_training() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reference.csv");
    fs::write(&path, "day,weight_g\n0,6\n35,60\n70,200\n").unwrap();
    let cfg = config(
        Mode::Cage,
        &[
            ("max_episodes", "200"),
            ("reference", path.to_str().unwrap()),
        ],
    );
    let out = run(&cfg, 1).unwrap();
    let last = out.trajectory.days.last().unwrap();
    assert_eq!(last.reference, 200.0);
    let mid = &out.trajectory.days[35];
    assert_eq!(mid.reference, 60.0);
}
