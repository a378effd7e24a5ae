use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use aquarl::experiment::{self, config_keys, write_sweep_csv, write_sweep_runs_csv};
use aquarl::format::sig6;
use aquarl::growth::{step, FishState};
use aquarl::{EvalReport, ExperimentConfig, QTable, Reference, SweepSpec};
use clap::{Arg, ArgAction, ArgMatches, Command};

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

/// One `--flag` per config key, with the default shown in the help text.
fn config_args(required: &[&str]) -> Vec<Arg> {
    let defaults = ExperimentConfig::default();
    let mut args = vec![Arg::new("config")
        .long("config")
        .value_name("FILE")
        .value_parser(clap::value_parser!(PathBuf))
        .help("TOML key-value config, applied before flags")];
    for key in config_keys() {
        let default = match key.name {
            "max_episodes" | "ref_temperature" => "auto".to_string(),
            _ => defaults.get(key.name).unwrap_or_default(),
        };
        let help = if default.is_empty() {
            key.help.to_string()
        } else {
            format!("{} [default: {default}]", key.help)
        };
        let mut arg = Arg::new(key.name)
            .long(flag_name(key.name))
            .value_name("VALUE")
            .help(help)
            .help_heading("Config keys")
            .required(required.contains(&key.name));
        if key.name == "seed" {
            arg = arg.env("AQUARL_SEED");
        }
        args.push(arg);
    }
    args
}

fn cli() -> Command {
    Command::new("aquarl")
        .about("Tilapia growth simulation and Q-learning feeding control")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("simulate")
                .about("Integrate the growth model at a constant ration; CSV on stdout")
                .arg(
                    Arg::new("days")
                        .long("days")
                        .default_value("120")
                        .value_parser(clap::value_parser!(u32)),
                )
                .arg(
                    Arg::new("feed")
                        .long("feed")
                        .default_value("1.0")
                        .value_parser(clap::value_parser!(f64))
                        .help("relative feeding rate in [0, 1]"),
                )
                .args(config_args(&[])),
        )
        .subcommand(
            Command::new("train")
                .about("Train a policy and write log, trajectory, Q-table, policy and report CSVs")
                .args(config_args(&["seed", "out_dir"])),
        )
        .subcommand(
            Command::new("evaluate")
                .about("Roll out the greedy policy of a stored Q-table; report CSV on stdout")
                .arg(
                    Arg::new("qtable")
                        .long("qtable")
                        .required(true)
                        .value_parser(clap::value_parser!(PathBuf)),
                )
                .arg(
                    Arg::new("trajectory")
                        .long("trajectory")
                        .value_name("FILE")
                        .value_parser(clap::value_parser!(PathBuf))
                        .help("also write the rollout trajectory CSV"),
                )
                .args(config_args(&[])),
        )
        .subcommand(
            Command::new("sweep")
                .about("Train every cell of a parameter grid over n_seeds seeds")
                .arg(
                    Arg::new("axis")
                        .long("axis")
                        .value_name("KEY=V1,V2")
                        .action(ArgAction::Append)
                        .help("sweep axis; repeat for a grid"),
                )
                .args(config_args(&["seed", "out_dir"])),
        )
        .subcommand(
            Command::new("reference")
                .about("Generate or inspect the desired weight trajectory")
                .subcommand_required(true)
                .subcommand(
                    Command::new("generate")
                        .about("Print the generated day,weight_g trajectory")
                        .args(config_args(&[])),
                )
                .subcommand(
                    Command::new("inspect")
                        .about("Summarize a day,weight_g CSV")
                        .arg(
                            Arg::new("path")
                                .required(true)
                                .value_parser(clap::value_parser!(PathBuf)),
                        ),
                ),
        )
}

fn load_config(m: &ArgMatches) -> aquarl::Result<ExperimentConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for key in config_keys() {
        if let Some(v) = m.get_one::<String>(key.name) {
            cfg.set(key.name, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(m: &ArgMatches) -> anyhow::Result<()> {
    let cfg = load_config(m)?;
    let days = *m.get_one::<u32>("days").expect("default");
    let feed = *m.get_one::<f64>("feed").expect("default");
    if !(0.0..=1.0).contains(&feed) {
        return Err(aquarl::Error::invalid("feed", "must lie in [0, 1]").into());
    }
    let env = cfg.ambient;
    env.validate()?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "day,weight_g,ration_g")?;
    let mut state = FishState {
        weight: cfg.w0,
        day: 0,
    };
    for _ in 0..days {
        let ration = feed * cfg.params.rm_fraction * state.weight;
        writeln!(out, "{},{},{}", state.day, sig6(state.weight), sig6(ration))?;
        state = match step(state, feed, &env, &cfg.params, 1, &cfg.integrator) {
            Ok(next) => next,
            Err(e) => {
                out.flush()?;
                return Err(e.into());
            }
        };
    }
    out.flush()?;
    Ok(())
}

fn out_dir(cfg: &ExperimentConfig) -> anyhow::Result<&Path> {
    match &cfg.out_dir {
        Some(dir) => Ok(dir),
        None => bail!(aquarl::Error::Config("--out-dir is required".into())),
    }
}

fn train(m: &ArgMatches) -> anyhow::Result<()> {
    let cfg = load_config(m)?;
    let dir = out_dir(&cfg)?;
    let out = experiment::run(&cfg, cfg.seed)?;
    let written = out.write_artifacts(dir)?;
    let r = &out.report;
    let status = if r.converged {
        "converged"
    } else {
        "did not converge"
    };
    println!("mode            {}", cfg.mode);
    println!("seed            {}", out.seed);
    println!("episodes        {} ({status})", r.episodes_to_converge);
    println!(
        "final weight    {} g (reference {} g)",
        sig6(r.final_weight),
        sig6(out.env.reference.at(cfg.grid.horizon as f64))
    );
    println!("total feed      {} g", sig6(r.total_feed));
    println!(
        "FCR             {}",
        r.fcr.map_or_else(|| "NA (no weight gain)".into(), sig6)
    );
    println!("MAPE            {} %", sig6(r.mape));
    println!("MAE / RMSE      {} / {} g", sig6(r.mae), sig6(r.rmse));
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn evaluate(m: &ArgMatches) -> anyhow::Result<()> {
    let cfg = load_config(m)?;
    let path = m.get_one::<PathBuf>("qtable").expect("required");
    let file = fs::File::open(path).map_err(|e| aquarl::Error::io(path, e))?;
    let q = QTable::read_csv(file)?;
    let (report, trajectory) = experiment::evaluate(&cfg, &q)?;
    if let Some(path) = m.get_one::<PathBuf>("trajectory") {
        let env = cfg.build_env()?;
        let file = fs::File::create(path).map_err(|e| aquarl::Error::io(path, e))?;
        experiment::write_trajectory_csv(&env, &trajectory, BufWriter::new(file))
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    let mut out = io::stdout().lock();
    write!(out, "{}", report_without_training(&report))?;
    Ok(())
}

fn report_without_training(r: &EvalReport) -> String {
    let fields = r.csv_row();
    let header = EvalReport::CSV_HEADER;
    // Training columns are meaningless for a stored table.
    let drop = |s: &str| {
        let parts: Vec<&str> = s.split(',').collect();
        parts[1..parts.len() - 1].join(",")
    };
    format!("{}\n{}\n", drop(header), drop(&fields))
}

fn sweep(m: &ArgMatches) -> anyhow::Result<()> {
    let cfg = load_config(m)?;
    let dir = out_dir(&cfg)?.to_path_buf();
    let axes = m
        .get_many::<String>("axis")
        .into_iter()
        .flatten()
        .map(|a| SweepSpec::parse_axis(a))
        .collect::<aquarl::Result<Vec<_>>>()?;
    let spec = SweepSpec::new(axes);
    let seeds = cfg.seeds();
    eprintln!(
        "sweeping {} cells x {} seeds",
        spec.cells().len(),
        seeds.len()
    );
    let rows = experiment::sweep(&spec, &cfg, &seeds)?;
    fs::create_dir_all(&dir).map_err(|e| aquarl::Error::io(&dir, e))?;
    let summary = dir.join("sweep.csv");
    let runs = dir.join("sweep_runs.csv");
    let create = |p: &Path| {
        fs::File::create(p)
            .map(BufWriter::new)
            .map_err(|e| aquarl::Error::io(p, e))
    };
    write_sweep_csv(&spec, &rows, create(&summary)?)?;
    write_sweep_runs_csv(&spec, &rows, create(&runs)?)?;
    write_sweep_csv(&spec, &rows, io::stdout().lock())?;
    for row in &rows {
        for (seed, err) in &row.failures {
            eprintln!("run failed (seed {seed}, {:?}): {err}", row.cell);
        }
    }
    eprintln!("wrote {} and {}", summary.display(), runs.display());
    Ok(())
}

fn reference(m: &ArgMatches) -> anyhow::Result<()> {
    match m.subcommand() {
        Some(("generate", sub)) => {
            let cfg = load_config(sub)?;
            let reference = cfg.build_reference()?;
            let mut out = io::stdout().lock();
            reference.write_csv(&mut out)?;
        }
        Some(("inspect", sub)) => {
            let path = sub.get_one::<PathBuf>("path").expect("required");
            let reference = Reference::load(path)?;
            let points: Vec<(f64, f64)> = reference.points().collect();
            let (d0, w0) = points[0];
            let (d1, w1) = points[points.len() - 1];
            println!("points          {}", points.len());
            println!("days            {} .. {}", sig6(d0), sig6(d1));
            println!("weight          {} g .. {} g", sig6(w0), sig6(w1));
            if d1 > d0 {
                println!("mean gain       {} g/day", sig6((w1 - w0) / (d1 - d0)));
            }
            let monotone = points.windows(2).all(|p| p[1].1 >= p[0].1);
            println!("non-decreasing  {monotone}");
        }
        _ => unreachable!("subcommand_required"),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<aquarl::Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let result = match matches.subcommand() {
        Some(("simulate", m)) => simulate(m),
        Some(("train", m)) => train(m),
        Some(("evaluate", m)) => evaluate(m),
        Some(("sweep", m)) => sweep(m),
        Some(("reference", m)) => reference(m),
        _ => unreachable!("subcommand_required"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
