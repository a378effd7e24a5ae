//! Experiment configuration, seeded training runs and parameter sweeps.
//!
//! Every setting is a flat `key = value` pair. The same keys are accepted
//! from a TOML config file and from command-line flags; growth-model
//! constants use the [`GrowthParams`] field names.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::growth::{
    generate_reference, EnvConditions, GrowthParams, Integrator, ReferenceSettings,
};
use crate::mdp::{
    evenly_spaced, ActionSpace, FishEnv, Grid, Mode, RewardShape, RewardSpec, Trajectory,
};
use crate::metrics::EvalReport;
use crate::qlearn::{train, Policy, QTable, StepSize, TrainConfig, TrainOutcome};
use crate::reference::Reference;

/// Where w^d comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    /// Simulated under the `ref_*` settings.
    Generated,
    /// `day,weight_g` CSV file.
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub w0: f64,
    pub grid: Grid,
    pub feed_levels: usize,
    pub feed_min: f64,
    pub feed_max: f64,
    pub temp_levels: usize,
    pub temp_min: f64,
    pub temp_max: f64,
    pub reward: RewardSpec,
    pub step_size: StepSize,
    pub gamma: f64,
    pub epsilon0: f64,
    pub t_epsilon: f64,
    /// `None` picks 15000 for cages and 30000 for tanks.
    pub max_episodes: Option<usize>,
    pub stop_patience: usize,
    pub ambient: EnvConditions,
    pub reference: ReferenceSource,
    /// `None` means the model's optimal temperature.
    pub ref_temperature: Option<f64>,
    pub ref_feed: f64,
    pub ref_dissolved_oxygen: f64,
    pub ref_uia: f64,
    pub params: GrowthParams,
    pub integrator: Integrator,
    pub seed: u64,
    pub n_seeds: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Tank,
            w0: 6.0,
            grid: Grid {
                w_min: 6.0,
                w_max: 400.0,
                dw: 10.0,
                dt: 7,
                horizon: 70,
            },
            feed_levels: 10,
            feed_min: 0.01,
            feed_max: 1.0,
            temp_levels: 12,
            temp_min: 29.6,
            temp_max: 30.7,
            reward: RewardSpec::default(),
            step_size: StepSize::Constant(0.1),
            gamma: 0.8,
            epsilon0: 0.9,
            t_epsilon: 6000.0,
            max_episodes: None,
            stop_patience: 50,
            ambient: EnvConditions {
                temperature: 29.7,
                dissolved_oxygen: 0.3,
                uia: 0.03,
            },
            reference: ReferenceSource::Generated,
            ref_temperature: None,
            ref_feed: 1.0,
            ref_dissolved_oxygen: 0.3,
            ref_uia: 0.03,
            params: GrowthParams::default(),
            integrator: Integrator::default(),
            seed: 1,
            n_seeds: 10,
            out_dir: None,
        }
    }
}

/// One documented configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeyDoc {
    pub name: &'static str,
    pub help: &'static str,
}

const EXPERIMENT_KEYS: &[KeyDoc] = &[
    KeyDoc {
        name: "mode",
        help: "cage (feeding only) or tank (feeding and temperature)",
    },
    KeyDoc {
        name: "w0",
        help: "stocking weight, g",
    },
    KeyDoc {
        name: "w_min",
        help: "lowest weight bin center, g",
    },
    KeyDoc {
        name: "w_max",
        help: "upper bound of the weight grid, g",
    },
    KeyDoc {
        name: "dw",
        help: "weight resolution, g",
    },
    KeyDoc {
        name: "dt",
        help: "time resolution, days",
    },
    KeyDoc {
        name: "horizon",
        help: "episode length, days",
    },
    KeyDoc {
        name: "feed_levels",
        help: "number of feeding-rate levels",
    },
    KeyDoc {
        name: "feed_min",
        help: "lowest relative feeding rate",
    },
    KeyDoc {
        name: "feed_max",
        help: "highest relative feeding rate",
    },
    KeyDoc {
        name: "temp_levels",
        help: "number of tank temperature levels",
    },
    KeyDoc {
        name: "temp_min",
        help: "lowest tank temperature, °C",
    },
    KeyDoc {
        name: "temp_max",
        help: "highest tank temperature, °C",
    },
    KeyDoc {
        name: "reward",
        help: "reward shape: L2, L2&L1 or L1",
    },
    KeyDoc {
        name: "lambda",
        help: "feeding penalty weight",
    },
    KeyDoc {
        name: "alpha",
        help: "learning rate",
    },
    KeyDoc {
        name: "alpha_schedule",
        help: "constant, visits for 1/n(s,a), or visits^w for n(s,a)^-w",
    },
    KeyDoc {
        name: "gamma",
        help: "discount factor",
    },
    KeyDoc {
        name: "epsilon0",
        help: "initial exploration probability",
    },
    KeyDoc {
        name: "t_epsilon",
        help: "exploration decay constant, episodes",
    },
    KeyDoc {
        name: "max_episodes",
        help: "episode cap (auto: 15000 cage, 30000 tank)",
    },
    KeyDoc {
        name: "stop_patience",
        help: "unchanged-policy episodes needed to stop",
    },
    KeyDoc {
        name: "ambient_temperature",
        help: "water temperature in cages, °C",
    },
    KeyDoc {
        name: "dissolved_oxygen",
        help: "dissolved oxygen, mg/l",
    },
    KeyDoc {
        name: "uia",
        help: "un-ionized ammonia, mg/l",
    },
    KeyDoc {
        name: "reference",
        help: "generated, or a day,weight_g CSV path",
    },
    KeyDoc {
        name: "ref_temperature",
        help: "reference growth temperature, °C (auto: t_opt)",
    },
    KeyDoc {
        name: "ref_feed",
        help: "reference relative feeding rate",
    },
    KeyDoc {
        name: "ref_dissolved_oxygen",
        help: "reference dissolved oxygen, mg/l",
    },
    KeyDoc {
        name: "ref_uia",
        help: "reference un-ionized ammonia, mg/l",
    },
    KeyDoc {
        name: "substep",
        help: "Euler sub-step, days",
    },
    KeyDoc {
        name: "weight_floor",
        help: "starvation weight floor, g",
    },
    KeyDoc {
        name: "seed",
        help: "RNG seed (first seed of a sweep)",
    },
    KeyDoc {
        name: "n_seeds",
        help: "seeds per sweep cell",
    },
    KeyDoc {
        name: "out_dir",
        help: "artifact directory",
    },
];

const GROWTH_HELP: [&str; 17] = [
    "anabolism body-weight exponent",
    "catabolism body-weight exponent",
    "food consumption coefficient",
    "food assimilation efficiency",
    "fraction of assimilated food lost",
    "fasting catabolism at t_min",
    "catabolism temperature slope",
    "temperature response shape",
    "optimal temperature, °C",
    "minimum temperature, °C",
    "maximum temperature, °C",
    "critical un-ionized ammonia, mg/l",
    "maximum un-ionized ammonia, mg/l",
    "critical dissolved oxygen, mg/l",
    "minimum dissolved oxygen, mg/l",
    "photoperiod factor",
    "maximal daily ration, fraction of body weight",
];

/// Every accepted key with a description, experiment keys first.
pub fn config_keys() -> Vec<KeyDoc> {
    EXPERIMENT_KEYS
        .iter()
        .copied()
        .chain(
            GrowthParams::KEYS
                .iter()
                .zip(GROWTH_HELP)
                .map(|(&name, help)| KeyDoc { name, help }),
        )
        .collect()
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Defaults for `mode`.
    pub fn for_mode(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "mode" => self.mode = v.parse()?,
            "w0" => self.w0 = parse(key, v)?,
            "w_min" => self.grid.w_min = parse(key, v)?,
            "w_max" => self.grid.w_max = parse(key, v)?,
            "dw" => self.grid.dw = parse(key, v)?,
            "dt" => self.grid.dt = parse(key, v)?,
            "horizon" => self.grid.horizon = parse(key, v)?,
            "feed_levels" => self.feed_levels = parse(key, v)?,
            "feed_min" => self.feed_min = parse(key, v)?,
            "feed_max" => self.feed_max = parse(key, v)?,
            "temp_levels" => self.temp_levels = parse(key, v)?,
            "temp_min" => self.temp_min = parse(key, v)?,
            "temp_max" => self.temp_max = parse(key, v)?,
            "reward" => self.reward.shape = v.parse::<RewardShape>()?,
            "lambda" => self.reward.lambda = parse(key, v)?,
            "alpha" => {
                let alpha = parse(key, v)?;
                if let StepSize::Constant(a) = &mut self.step_size {
                    *a = alpha;
                } else {
                    self.step_size = StepSize::Constant(alpha);
                }
            }
            "alpha_schedule" => match v.trim() {
                "constant" => {
                    if !matches!(self.step_size, StepSize::Constant(_)) {
                        self.step_size = StepSize::Constant(0.1);
                    }
                }
                "visits" => self.step_size = StepSize::InverseVisits,
                other => match other.strip_prefix("visits^") {
                    Some(omega) => self.step_size = StepSize::PolynomialVisits(parse(key, omega)?),
                    None => {
                        return Err(Error::Config(format!(
                            "bad alpha_schedule `{v}` (constant, visits or visits^<omega>)"
                        )))
                    }
                },
            },
            "gamma" => self.gamma = parse(key, v)?,
            "epsilon0" => self.epsilon0 = parse(key, v)?,
            "t_epsilon" => self.t_epsilon = parse(key, v)?,
            "max_episodes" => {
                self.max_episodes = if v == "auto" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "stop_patience" => self.stop_patience = parse(key, v)?,
            "ambient_temperature" => self.ambient.temperature = parse(key, v)?,
            "dissolved_oxygen" => self.ambient.dissolved_oxygen = parse(key, v)?,
            "uia" => self.ambient.uia = parse(key, v)?,
            "reference" => {
                self.reference = if v == "generated" {
                    ReferenceSource::Generated
                } else {
                    ReferenceSource::Csv(PathBuf::from(v))
                }
            }
            "ref_temperature" => {
                self.ref_temperature = if v == "auto" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "ref_feed" => self.ref_feed = parse(key, v)?,
            "ref_dissolved_oxygen" => self.ref_dissolved_oxygen = parse(key, v)?,
            "ref_uia" => self.ref_uia = parse(key, v)?,
            "substep" => self.integrator.substep = parse(key, v)?,
            "weight_floor" => self.integrator.floor = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "n_seeds" => self.n_seeds = parse(key, v)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(v)),
            _ => {
                let x = parse(key, v)?;
                if !self.params.set(key, x) {
                    return Err(Error::Config(format!("unknown config key `{key}`")));
                }
            }
        }
        Ok(())
    }

    /// Current value of `key` as it would be written in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "mode" => self.mode.to_string(),
            "w0" => self.w0.to_string(),
            "w_min" => self.grid.w_min.to_string(),
            "w_max" => self.grid.w_max.to_string(),
            "dw" => self.grid.dw.to_string(),
            "dt" => self.grid.dt.to_string(),
            "horizon" => self.grid.horizon.to_string(),
            "feed_levels" => self.feed_levels.to_string(),
            "feed_min" => self.feed_min.to_string(),
            "feed_max" => self.feed_max.to_string(),
            "temp_levels" => self.temp_levels.to_string(),
            "temp_min" => self.temp_min.to_string(),
            "temp_max" => self.temp_max.to_string(),
            "reward" => self.reward.shape.to_string(),
            "lambda" => self.reward.lambda.to_string(),
            "alpha" => match self.step_size {
                StepSize::Constant(a) => a.to_string(),
                StepSize::InverseVisits => "1/n".to_string(),
                StepSize::PolynomialVisits(omega) => format!("n^-{omega}"),
            },
            "alpha_schedule" => match self.step_size {
                StepSize::Constant(_) => "constant".to_string(),
                StepSize::InverseVisits => "visits".to_string(),
                StepSize::PolynomialVisits(omega) => format!("visits^{omega}"),
            },
            "gamma" => self.gamma.to_string(),
            "epsilon0" => self.epsilon0.to_string(),
            "t_epsilon" => self.t_epsilon.to_string(),
            "max_episodes" => self
                .max_episodes
                .map_or_else(|| "auto".to_string(), |n| n.to_string()),
            "stop_patience" => self.stop_patience.to_string(),
            "ambient_temperature" => self.ambient.temperature.to_string(),
            "dissolved_oxygen" => self.ambient.dissolved_oxygen.to_string(),
            "uia" => self.ambient.uia.to_string(),
            "reference" => match &self.reference {
                ReferenceSource::Generated => "generated".to_string(),
                ReferenceSource::Csv(p) => p.display().to_string(),
            },
            "ref_temperature" => self
                .ref_temperature
                .map_or_else(|| "auto".to_string(), |t| t.to_string()),
            "ref_feed" => self.ref_feed.to_string(),
            "ref_dissolved_oxygen" => self.ref_dissolved_oxygen.to_string(),
            "ref_uia" => self.ref_uia.to_string(),
            "substep" => self.integrator.substep.to_string(),
            "weight_floor" => self.integrator.floor.to_string(),
            "seed" => self.seed.to_string(),
            "n_seeds" => self.n_seeds.to_string(),
            "out_dir" => self
                .out_dir
                .as_ref()
                .map_or_else(String::new, |p| p.display().to_string()),
            _ => return self.params.get(key).map(|x| x.to_string()),
        })
    }

    /// Applies a flat TOML document on top of the current values.
    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        for (key, value) in table {
            let value = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(x) => x.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => {
                    return Err(Error::Config(format!(
                        "`{key}` must be a scalar, got {}",
                        other.type_str()
                    )))
                }
            };
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_toml(&text)?;
        Ok(cfg)
    }

    pub fn max_episodes(&self) -> usize {
        self.max_episodes.unwrap_or(match self.mode {
            Mode::Cage => 15_000,
            Mode::Tank => 30_000,
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.seed + i).collect()
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            step_size: self.step_size,
            gamma: self.gamma,
            epsilon0: self.epsilon0,
            t_epsilon: self.t_epsilon,
            max_episodes: self.max_episodes(),
            seed,
            stop_patience: self.stop_patience,
            ..TrainConfig::default()
        }
    }

    pub fn reference_settings(&self) -> ReferenceSettings {
        ReferenceSettings {
            env: EnvConditions {
                temperature: self.ref_temperature.unwrap_or(self.params.t_opt),
                dissolved_oxygen: self.ref_dissolved_oxygen,
                uia: self.ref_uia,
            },
            feed: self.ref_feed,
        }
    }

    pub fn build_reference(&self) -> Result<Reference> {
        match &self.reference {
            ReferenceSource::Generated => Reference::from_daily(generate_reference(
                self.w0,
                self.grid.horizon,
                &self.params,
                &self.reference_settings(),
                &self.integrator,
            )?),
            ReferenceSource::Csv(path) => Reference::load(path),
        }
    }

    pub fn action_space(&self) -> Result<ActionSpace> {
        let feed = evenly_spaced(self.feed_min, self.feed_max, self.feed_levels);
        match self.mode {
            Mode::Cage => ActionSpace::cage(feed),
            Mode::Tank => ActionSpace::tank(
                feed,
                evenly_spaced(self.temp_min, self.temp_max, self.temp_levels),
            ),
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.train_config(self.seed).validate()?;
        if self.n_seeds == 0 {
            return Err(Error::invalid("n_seeds", "must be at least 1"));
        }
        if self.max_episodes() == 0 {
            return Err(Error::invalid("max_episodes", "must be at least 1"));
        }
        if self.feed_min > self.feed_max {
            return Err(Error::invalid("feed_min", "must not exceed feed_max"));
        }
        if self.temp_min > self.temp_max {
            return Err(Error::invalid("temp_min", "must not exceed temp_max"));
        }
        self.build_env().map(|_| ())
    }

    pub fn build_env(&self) -> Result<FishEnv> {
        let env = FishEnv {
            grid: self.grid,
            actions: self.action_space()?,
            reward: self.reward,
            ambient: self.ambient,
            params: self.params,
            integrator: self.integrator,
            reference: self.build_reference()?,
            w0: self.w0,
        };
        env.validate()?;
        self.reference_settings().env.validate()?;
        Ok(env)
    }
}

/// Report for a policy's greedy trajectory.
pub fn evaluate_trajectory(
    env: &FishEnv,
    trajectory: &Trajectory,
    episodes: usize,
    converged: bool,
) -> Result<EvalReport> {
    let weights: Vec<f64> = trajectory.days.iter().map(|d| d.weight).collect();
    let desired: Vec<f64> = trajectory.days.iter().map(|d| d.reference).collect();
    let feed = crate::mdp::total_feed(&trajectory.feeding(), &env.params);
    EvalReport::from_series(&weights, &desired, feed, episodes, converged)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub seed: u64,
    pub env: FishEnv,
    pub training: TrainOutcome,
    pub trajectory: Trajectory,
    pub report: EvalReport,
}

/// Trains with `seed`, rolls out the greedy policy and scores it.
pub fn run(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let env = config.build_env()?;
    let training = train(&env, &config.train_config(seed))?;
    let policy = &training.policy;
    let trajectory = env.trajectory(|s| policy.action(s))?;
    let report = evaluate_trajectory(&env, &trajectory, training.episodes(), training.converged)?;
    Ok(RunOutput {
        seed,
        env,
        training,
        trajectory,
        report,
    })
}

/// Greedy rollout of a stored Q-table.
pub fn evaluate(config: &ExperimentConfig, q: &QTable) -> Result<(EvalReport, Trajectory)> {
    let env = config.build_env()?;
    if q.states() != env.grid.state_count() || q.actions() != env.actions.len() {
        return Err(Error::Config(format!(
            "Q-table is {}x{} but the config implies {}x{}",
            q.states(),
            q.actions(),
            env.grid.state_count(),
            env.actions.len()
        )));
    }
    let policy = Policy::from_q(q);
    let trajectory = env.trajectory(|s| policy.action(s))?;
    let report = evaluate_trajectory(&env, &trajectory, 0, true)?;
    Ok((report, trajectory))
}

pub fn write_trajectory_csv<W: Write>(
    env: &FishEnv,
    t: &Trajectory,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "day,weight_g,reference_g,feed_rate,temperature_c")?;
    for d in &t.days {
        let (feed, temp) = match d.action {
            Some(a) => (sig6(a.feed), sig6(env.conditions(&a).temperature)),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{feed},{temp}",
            d.day,
            sig6(d.weight),
            sig6(d.reference)
        )?;
    }
    Ok(())
}

pub fn write_policy_csv<W: Write>(
    env: &FishEnv,
    policy: &Policy,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "state,weight_g,day,action,feed_rate,temperature_c")?;
    for (s, &a) in policy.actions().iter().enumerate() {
        let crate::mdp::StateId::Live {
            weight_bin,
            time_bin,
        } = env.grid.state(s)
        else {
            continue;
        };
        let act = env.actions.get(a);
        writeln!(
            out,
            "{s},{},{},{a},{},{}",
            sig6(env.grid.center(weight_bin)),
            env.grid.bin_start_day(time_bin),
            sig6(act.feed),
            sig6(env.conditions(&act).temperature)
        )?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

impl RunOutput {
    pub fn stem(&self) -> String {
        format!("{}_seed{}", self.env.mode(), self.seed)
    }

    /// Writes log, trajectory, Q-table, policy and report CSVs into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = self.stem();
        let path = |suffix: &str| dir.join(format!("{stem}_{suffix}.csv"));
        let written = vec![
            path("log"),
            path("trajectory"),
            path("qtable"),
            path("policy"),
            path("report"),
        ];
        let io = |p: &Path, r: std::io::Result<()>| r.map_err(|e| Error::io(p, e));
        io(
            &written[0],
            self.training.write_log_csv(create(&written[0])?),
        )?;
        io(
            &written[1],
            write_trajectory_csv(&self.env, &self.trajectory, create(&written[1])?),
        )?;
        io(&written[2], self.training.q.write_csv(create(&written[2])?))?;
        io(
            &written[3],
            write_policy_csv(&self.env, &self.training.policy, create(&written[3])?),
        )?;
        io(&written[4], self.report.write_csv(create(&written[4])?))?;
        Ok(written)
    }
}

/// Axes to cross in a sweep; each axis is a config key and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<(String, Vec<String>)>,
    /// Upper bound on cells × seeds.
    pub max_runs: usize,
}

impl SweepSpec {
    pub fn new(axes: Vec<(String, Vec<String>)>) -> Self {
        Self {
            axes,
            max_runs: 10_000,
        }
    }

    /// Parses `key=v1,v2,...`.
    pub fn parse_axis(text: &str) -> Result<(String, Vec<String>)> {
        let (key, values) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("axis `{text}` must look like key=v1,v2")))?;
        let values = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect();
        Ok((key.trim().to_string(), values))
    }

    /// Cross product of the non-empty axes, first axis slowest.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells = vec![Vec::new()];
        for (key, values) in self.axes.iter().filter(|(_, v)| !v.is_empty()) {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut next = cell.clone();
                        next.push((key.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell: Vec<(String, String)>,
    pub runs: Vec<(u64, EvalReport)>,
    pub failures: Vec<(u64, String)>,
}

impl SweepRow {
    pub fn mean(&self) -> Option<EvalReport> {
        let reports: Vec<EvalReport> = self.runs.iter().map(|(_, r)| *r).collect();
        EvalReport::mean(&reports)
    }
}

/// Runs every cell for every seed in parallel; failed runs are recorded.
pub fn sweep(spec: &SweepSpec, base: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let cells = spec.cells();
    let total = cells.len() * seeds.len();
    if total > spec.max_runs {
        return Err(Error::Config(format!(
            "sweep needs {total} runs, above the cap of {}",
            spec.max_runs
        )));
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<(usize, u64, Result<EvalReport>)> = jobs
        .into_par_iter()
        .map(|(c, seed)| {
            let outcome = (|| {
                let mut cfg = base.clone();
                for (key, value) in &cells[c] {
                    cfg.set(key, value)?;
                }
                run(&cfg, seed).map(|o| o.report)
            })();
            (c, seed, outcome)
        })
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .into_iter()
        .map(|cell| SweepRow {
            cell,
            runs: Vec::new(),
            failures: Vec::new(),
        })
        .collect();
    for (c, seed, outcome) in results {
        match outcome {
            Ok(report) => rows[c].runs.push((seed, report)),
            Err(e) => rows[c].failures.push((seed, e.to_string())),
        }
    }
    Ok(rows)
}

/// One row per cell with mean metrics, shaped like the sensitivity tables.
pub fn write_sweep_csv<W: Write>(
    spec: &SweepSpec,
    rows: &[SweepRow],
    mut out: W,
) -> std::io::Result<()> {
    let axes: Vec<&str> = spec
        .axes
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, _)| k.as_str())
        .collect();
    let mut header: Vec<&str> = axes.clone();
    header.extend(["runs", "failures"]);
    writeln!(out, "{},{}", header.join(","), EvalReport::CSV_HEADER)?;
    for row in rows {
        let mut fields: Vec<String> = row.cell.iter().map(|(_, v)| v.clone()).collect();
        fields.push(row.runs.len().to_string());
        fields.push(row.failures.len().to_string());
        let metrics = match row.mean() {
            Some(m) => m.csv_row(),
            None => vec!["NA"; EvalReport::CSV_HEADER.split(',').count()].join(","),
        };
        writeln!(out, "{},{metrics}", fields.join(","))?;
    }
    Ok(())
}

/// Every individual run, for per-seed comparisons.
pub fn write_sweep_runs_csv<W: Write>(
    spec: &SweepSpec,
    rows: &[SweepRow],
    mut out: W,
) -> std::io::Result<()> {
    let axes: Vec<&str> = spec
        .axes
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, _)| k.as_str())
        .collect();
    let mut header = axes.join(",");
    if !header.is_empty() {
        header.push(',');
    }
    writeln!(out, "{header}seed,{}", EvalReport::CSV_HEADER)?;
    for row in rows {
        let mut prefix: String = row.cell.iter().map(|(_, v)| format!("{v},")).collect();
        let base_len = prefix.len();
        for (seed, report) in &row.runs {
            prefix.truncate(base_len);
            writeln!(out, "{prefix}{seed},{}", report.csv_row())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_round_trip_through_set() {
        let cfg = ExperimentConfig::default();
        for key in config_keys() {
            let value = cfg
                .get(key.name)
                .unwrap_or_else(|| panic!("no getter for {}", key.name));
            if key.name == "out_dir" || key.name == "alpha" && value == "1/n" {
                continue;
            }
            let mut copy = cfg.clone();
            copy.set(key.name, &value)
                .unwrap_or_else(|e| panic!("{}={value}: {e}", key.name));
            assert_eq!(copy, cfg, "key {}", key.name);
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("dw", "ten").is_err());
        assert!(cfg.apply_toml("[section]\nx = 1").is_err());
    }

    #[test]
    fn toml_overrides() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_toml("mode = \"cage\"\ndw = 15\nreward = \"L2&L1\"\nrho = 1.2\nalpha_schedule = \"visits\"\n")
            .unwrap();
        assert_eq!(cfg.mode, Mode::Cage);
        assert_eq!(cfg.grid.dw, 15.0);
        assert_eq!(cfg.reward.shape, RewardShape::L2L1);
        assert_eq!(cfg.params.rho, 1.2);
        assert_eq!(cfg.step_size, StepSize::InverseVisits);
        cfg.set("alpha_schedule", "visits^0.7").unwrap();
        assert_eq!(cfg.step_size, StepSize::PolynomialVisits(0.7));
        assert_eq!(cfg.get("alpha_schedule").unwrap(), "visits^0.7");
        assert_eq!(cfg.max_episodes(), 15_000);
    }

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::for_mode(Mode::Cage).validate().unwrap();
        let mut bad = ExperimentConfig::default();
        bad.set("gamma", "1.5").unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sweep_cell_counts() {
        let table5 = SweepSpec::new(vec![
            SweepSpec::parse_axis("dw=10,15").unwrap(),
            SweepSpec::parse_axis("dt=7,10").unwrap(),
            SweepSpec::parse_axis("reward=L2,L2&L1,L1").unwrap(),
        ]);
        assert_eq!(table5.cells().len(), 12);
        let table6 = SweepSpec::new(vec![
            SweepSpec::parse_axis("alpha=0.1,0.5").unwrap(),
            SweepSpec::parse_axis("gamma=0.1,0.5,0.7,1").unwrap(),
        ]);
        assert_eq!(table6.cells().len(), 8);
        assert_eq!(
            table6.cells()[1],
            vec![
                ("alpha".into(), "0.1".into()),
                ("gamma".into(), "0.5".into())
            ]
        );
        let empty = SweepSpec::new(vec![("dw".into(), vec![])]);
        assert_eq!(empty.cells(), vec![Vec::<(String, String)>::new()]);
    }

    #[test]
    fn sweep_respects_cap() {
        let mut spec = SweepSpec::new(vec![SweepSpec::parse_axis("dw=10,15").unwrap()]);
        spec.max_runs = 3;
        let err = sweep(&spec, &ExperimentConfig::default(), &[1, 2]).unwrap_err();
        assert!(err.to_string().contains("cap"));
    }
}
