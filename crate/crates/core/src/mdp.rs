//! The growth simulator seen as a finite episodic MDP.
//!
//! States are (weight bin, time bin) pairs on a [`Grid`]; actions are feeding
//! rates (cages) or feeding rate and water temperature pairs (tanks). Within
//! an episode the fish keeps its exact simulated weight, and the table row is
//! the discretization of that weight. [`FishEnv::env_step`] gives the
//! bin-center transition used to enumerate the MDP.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::growth::{self, EnvConditions, FishState, GrowthParams, Integrator};
use crate::reference::Reference;

/// (weight, age) discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub w_min: f64,
    pub w_max: f64,
    /// Weight resolution, grams.
    pub dw: f64,
    /// Time resolution, days.
    pub dt: u32,
    /// Episode length, days.
    pub horizon: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateId {
    Live { weight_bin: usize, time_bin: usize },
    Terminal,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_min.is_finite() && self.w_max.is_finite() && self.w_min < self.w_max) {
            return Err(Error::invalid("w_min", "requires finite w_min < w_max"));
        }
        if !(self.dw > 0.0 && self.dw.is_finite()) {
            return Err(Error::invalid("dw", "must be positive"));
        }
        if self.dt == 0 {
            return Err(Error::invalid("dt", "must be at least one day"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least one day"));
        }
        Ok(())
    }

    pub fn weight_bins(&self) -> usize {
        ((self.w_max - self.w_min) / self.dw + 0.5).floor() as usize + 1
    }

    /// Live time bins; day `horizon` and later is terminal.
    pub fn time_bins(&self) -> usize {
        self.horizon.div_ceil(self.dt) as usize
    }

    pub fn state_count(&self) -> usize {
        self.weight_bins() * self.time_bins()
    }

    pub fn center(&self, weight_bin: usize) -> f64 {
        self.w_min + weight_bin as f64 * self.dw
    }

    pub fn bin_start_day(&self, time_bin: usize) -> u32 {
        time_bin as u32 * self.dt
    }

    /// Snaps weight to the nearest bin center (ties upward, out-of-range
    /// weights clamp) and the day to its Δt bin.
    pub fn discretize(&self, w: f64, day: u32) -> StateId {
        if day >= self.horizon {
            return StateId::Terminal;
        }
        let raw = ((w - self.w_min) / self.dw + 0.5).floor();
        let weight_bin = if raw.is_nan() || raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.weight_bins() - 1)
        };
        StateId::Live {
            weight_bin,
            time_bin: (day / self.dt) as usize,
        }
    }

    pub fn index(&self, state: StateId) -> Option<usize> {
        match state {
            StateId::Live {
                weight_bin,
                time_bin,
            } => Some(time_bin * self.weight_bins() + weight_bin),
            StateId::Terminal => None,
        }
    }

    pub fn state(&self, index: usize) -> StateId {
        let nw = self.weight_bins();
        StateId::Live {
            weight_bin: index % nw,
            time_bin: index / nw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Floating cages: feeding only, ambient temperature.
    Cage,
    /// Tanks on land: feeding and water temperature.
    Tank,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cage" | "cages" => Ok(Mode::Cage),
            "tank" | "tanks" => Ok(Mode::Tank),
            _ => Err(Error::Config(format!(
                "unknown mode `{s}` (expected cage or tank)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cage => "cage",
            Mode::Tank => "tank",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub feed: f64,
    /// Set in tank mode only.
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    feed: Vec<f64>,
    temperature: Option<Vec<f64>>,
}

/// `count` evenly spaced values from `min` to `max` inclusive.
pub fn evenly_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn check_levels(name: &'static str, levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::invalid(name, "needs at least one level"));
    }
    if !levels.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid(name, "levels must be finite"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(name, "levels must be strictly increasing"));
    }
    Ok(())
}

impl ActionSpace {
    pub fn cage(feed: Vec<f64>) -> Result<Self> {
        check_levels("feed_levels", &feed)?;
        if feed.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::invalid(
                "feed_levels",
                "feeding rates must lie in [0, 1]",
            ));
        }
        Ok(Self {
            feed,
            temperature: None,
        })
    }

    pub fn tank(feed: Vec<f64>, temperature: Vec<f64>) -> Result<Self> {
        check_levels("temp_levels", &temperature)?;
        let mut space = Self::cage(feed)?;
        space.temperature = Some(temperature);
        Ok(space)
    }

    pub fn mode(&self) -> Mode {
        if self.temperature.is_some() {
            Mode::Tank
        } else {
            Mode::Cage
        }
    }

    pub fn feed_levels(&self) -> &[f64] {
        &self.feed
    }

    pub fn temperature_levels(&self) -> Option<&[f64]> {
        self.temperature.as_deref()
    }

    pub fn len(&self) -> usize {
        self.feed.len() * self.temperature.as_ref().map_or(1, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tank actions are laid out feed-major: `feed_index * n_temps + temp_index`.
    pub fn get(&self, index: usize) -> Action {
        match &self.temperature {
            None => Action {
                feed: self.feed[index],
                temperature: None,
            },
            Some(temps) => Action {
                feed: self.feed[index / temps.len()],
                temperature: Some(temps[index % temps.len()]),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardShape {
    /// Squared tracking error, squared feed penalty.
    L2,
    /// Squared tracking error, absolute feed penalty.
    L2L1,
    /// Absolute tracking error, absolute feed penalty.
    L1,
}

impl FromStr for RewardShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L2" => Ok(RewardShape::L2),
            "L2&L1" | "L2L1" | "L2+L1" => Ok(RewardShape::L2L1),
            "L1" => Ok(RewardShape::L1),
            _ => Err(Error::Config(format!(
                "unknown reward shape `{s}` (L2, L2&L1, L1)"
            ))),
        }
    }
}

impl fmt::Display for RewardShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardShape::L2 => "L2",
            RewardShape::L2L1 => "L2&L1",
            RewardShape::L1 => "L1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSpec {
    pub shape: RewardShape,
    /// Feeding penalty weight.
    pub lambda: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            shape: RewardShape::L2,
            lambda: 0.5,
        }
    }
}

/// Tracking reward, never positive.
pub fn reward(w: f64, w_desired: f64, f: f64, spec: &RewardSpec) -> Result<f64> {
    if !(w_desired > 0.0) {
        return Err(Error::invalid("w_desired", "must be positive"));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::invalid(
            "f",
            format!("feeding rate {f} outside [0, 1]"),
        ));
    }
    let e = (w - w_desired) / w_desired;
    let r = match spec.shape {
        RewardShape::L2 => e * e + spec.lambda * f * f,
        RewardShape::L2L1 => e * e + spec.lambda * f.abs(),
        RewardShape::L1 => e.abs() + spec.lambda * f.abs(),
    };
    Ok(-r)
}

/// Grams of feed delivered over `(weight, f)` daily records.
pub fn total_feed(days: &[(f64, f64)], p: &GrowthParams) -> f64 {
    days.iter().map(|&(w, f)| f * p.rm_fraction * w).sum()
}

/// Result of one table-level transition; `next == None` ends the episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: Option<usize>,
    pub reward: f64,
}

/// Episodic environment seen by the learner.
pub trait Environment {
    /// Full episode state; may carry more than the table row.
    type Point: Clone;

    fn state_count(&self) -> usize;
    fn action_count(&self) -> usize;
    fn start(&self) -> Self::Point;
    /// Table row for `point`, or `None` once the episode has ended.
    fn state_index(&self, point: &Self::Point) -> Option<usize>;
    fn advance(&self, point: &Self::Point, action: usize) -> Result<(Self::Point, f64)>;
}

/// Environments whose table-level transitions can be listed exhaustively.
pub trait Enumerable: Environment {
    fn outcome(&self, state: usize, action: usize) -> Result<Outcome>;
}

/// Explicit deterministic MDP given as a transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    states: usize,
    actions: usize,
    start: usize,
    table: Vec<Outcome>,
}

impl TabularMdp {
    /// `table[s * actions + a]` is the outcome of action `a` in state `s`.
    pub fn new(states: usize, actions: usize, start: usize, table: Vec<Outcome>) -> Result<Self> {
        if states == 0 || actions == 0 || start >= states {
            return Err(Error::invalid(
                "mdp",
                "needs states, actions and a valid start",
            ));
        }
        if table.len() != states * actions {
            return Err(Error::invalid("mdp", "table size must be states * actions"));
        }
        if table
            .iter()
            .any(|o| o.next.is_some_and(|s| s >= states) || !o.reward.is_finite())
        {
            return Err(Error::invalid("mdp", "bad successor or reward"));
        }
        Ok(Self {
            states,
            actions,
            start,
            table,
        })
    }
}

impl Environment for TabularMdp {
    type Point = Option<usize>;

    fn state_count(&self) -> usize {
        self.states
    }

    fn action_count(&self) -> usize {
        self.actions
    }

    fn start(&self) -> Option<usize> {
        Some(self.start)
    }

    fn state_index(&self, point: &Option<usize>) -> Option<usize> {
        *point
    }

    fn advance(&self, point: &Option<usize>, action: usize) -> Result<(Option<usize>, f64)> {
        let s = point.ok_or_else(|| Error::invalid("state", "episode already ended"))?;
        let o = self.outcome(s, action)?;
        Ok((o.next, o.reward))
    }
}

impl Enumerable for TabularMdp {
    fn outcome(&self, state: usize, action: usize) -> Result<Outcome> {
        if state >= self.states || action >= self.actions {
            return Err(Error::invalid("action", "index out of range"));
        }
        Ok(self.table[state * self.actions + action])
    }
}

/// Exact fish state inside an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FishPoint {
    pub weight: f64,
    pub day: u32,
    pub starved: bool,
}

/// Transition between discretized states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: StateId,
    pub reward: f64,
    pub done: bool,
}

/// Daily weights over one decision interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Weight at the end of each simulated day.
    pub daily: Vec<f64>,
    pub end: FishPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayRecord {
    pub day: u32,
    pub weight: f64,
    pub reference: f64,
    /// Action applied during this day; `None` on the final day.
    pub action: Option<Action>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub days: Vec<DayRecord>,
    /// One reward per decision step.
    pub rewards: Vec<f64>,
    pub starved: bool,
}

impl Trajectory {
    /// `(weight, f)` for every fed day.
    pub fn feeding(&self) -> Vec<(f64, f64)> {
        self.days
            .iter()
            .filter_map(|d| d.action.map(|a| (d.weight, a.feed)))
            .collect()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Fish-growth tracking environment.
#[derive(Debug, Clone)]
pub struct FishEnv {
    pub grid: Grid,
    pub actions: ActionSpace,
    pub reward: RewardSpec,
    /// Water state; in tank mode the temperature comes from the action.
    pub ambient: EnvConditions,
    pub params: GrowthParams,
    pub integrator: Integrator,
    pub reference: Reference,
    /// Stocking weight, grams.
    pub w0: f64,
}

impl FishEnv {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.params.validate()?;
        self.ambient.validate()?;
        self.integrator.validate()?;
        if !(self.reward.lambda >= 0.0 && self.reward.lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be non-negative"));
        }
        if !(self.w0 > self.integrator.floor && self.w0.is_finite()) {
            return Err(Error::invalid("w0", "must exceed the weight floor"));
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.actions.mode()
    }

    pub fn conditions(&self, action: &Action) -> EnvConditions {
        EnvConditions {
            temperature: action.temperature.unwrap_or(self.ambient.temperature),
            ..self.ambient
        }
    }

    /// Simulates one decision interval (Δt days, cut at the horizon).
    pub fn simulate_segment(&self, from: FishPoint, action: usize) -> Result<Segment> {
        if from.starved || from.day >= self.grid.horizon {
            return Err(Error::invalid("state", "episode already ended"));
        }
        if action >= self.actions.len() {
            return Err(Error::invalid(
                "action",
                format!("index {action} out of range"),
            ));
        }
        let act = self.actions.get(action);
        let env = self.conditions(&act);
        let days = self.grid.dt.min(self.grid.horizon - from.day);
        let mut state = FishState {
            weight: from.weight,
            day: from.day,
        };
        let mut daily = Vec::with_capacity(days as usize);
        for _ in 0..days {
            match growth::step(state, act.feed, &env, &self.params, 1, &self.integrator) {
                Ok(next) => {
                    state = next;
                    daily.push(state.weight);
                }
                Err(Error::Starved { day, floor }) => {
                    daily.push(floor);
                    return Ok(Segment {
                        daily,
                        end: FishPoint {
                            weight: floor,
                            day,
                            starved: true,
                        },
                    });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Segment {
            daily,
            end: FishPoint {
                weight: state.weight,
                day: state.day,
                starved: false,
            },
        })
    }

    fn reward_at(&self, end: &FishPoint, action: usize) -> Result<f64> {
        let desired = self.reference.at(end.day as f64);
        reward(
            end.weight,
            desired,
            self.actions.get(action).feed,
            &self.reward,
        )
    }

    fn discretize_point(&self, p: &FishPoint) -> StateId {
        if p.starved {
            StateId::Terminal
        } else {
            self.grid.discretize(p.weight, p.day)
        }
    }

    /// Transition from the bin-center weight at the start of `state`'s time bin.
    pub fn env_step(&self, state: StateId, action: usize) -> Result<Transition> {
        let StateId::Live {
            weight_bin,
            time_bin,
        } = state
        else {
            return Err(Error::invalid("state", "cannot step from Terminal"));
        };
        if weight_bin >= self.grid.weight_bins() || time_bin >= self.grid.time_bins() {
            return Err(Error::invalid("state", "bin outside grid"));
        }
        let from = FishPoint {
            weight: self.grid.center(weight_bin),
            day: self.grid.bin_start_day(time_bin),
            starved: false,
        };
        let seg = self.simulate_segment(from, action)?;
        let next = self.discretize_point(&seg.end);
        Ok(Transition {
            next,
            reward: self.reward_at(&seg.end, action)?,
            done: next == StateId::Terminal,
        })
    }

    /// Runs one episode choosing actions by table row, recording daily weights.
    pub fn trajectory(&self, mut choose: impl FnMut(usize) -> usize) -> Result<Trajectory> {
        let mut point = self.start();
        let mut days = Vec::with_capacity(self.grid.horizon as usize + 1);
        let mut rewards = Vec::new();
        while let Some(s) = self.state_index(&point) {
            let a = choose(s);
            let seg = self.simulate_segment(point, a)?;
            let act = self.actions.get(a);
            let mut weight = point.weight;
            for (i, &next_weight) in seg.daily.iter().enumerate() {
                let day = point.day + i as u32;
                days.push(DayRecord {
                    day,
                    weight,
                    reference: self.reference.at(day as f64),
                    action: Some(act),
                });
                weight = next_weight;
            }
            rewards.push(self.reward_at(&seg.end, a)?);
            point = seg.end;
        }
        days.push(DayRecord {
            day: point.day,
            weight: point.weight,
            reference: self.reference.at(point.day as f64),
            action: None,
        });
        Ok(Trajectory {
            days,
            rewards,
            starved: point.starved,
        })
    }
}

impl Environment for FishEnv {
    type Point = FishPoint;

    fn state_count(&self) -> usize {
        self.grid.state_count()
    }

    fn action_count(&self) -> usize {
        self.actions.len()
    }

    fn start(&self) -> FishPoint {
        FishPoint {
            weight: self.w0,
            day: 0,
            starved: false,
        }
    }

    fn state_index(&self, point: &FishPoint) -> Option<usize> {
        self.grid.index(self.discretize_point(point))
    }

    fn advance(&self, point: &FishPoint, action: usize) -> Result<(FishPoint, f64)> {
        let seg = self.simulate_segment(*point, action)?;
        let r = self.reward_at(&seg.end, action)?;
        Ok((seg.end, r))
    }
}

impl Enumerable for FishEnv {
    fn outcome(&self, state: usize, action: usize) -> Result<Outcome> {
        let t = self.env_step(self.grid.state(state), action)?;
        Ok(Outcome {
            next: self.grid.index(t.next),
            reward: t.reward,
        })
    }
}
