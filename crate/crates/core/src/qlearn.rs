//! Tabular Q-learning with exponentially annealed ε-greedy exploration, plus a
//! value-iteration solver used as a test oracle.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{Enumerable, Environment};

/// Dense state-action value table, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(states: usize, actions: usize) -> Self {
        Self {
            states,
            actions,
            values: vec![0.0; states * actions],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.values[s * self.actions + a] = value;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Argmax over actions; ties go to the lowest index.
    pub fn greedy(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        assert_eq!(
            (self.states, self.actions),
            (other.states, other.actions),
            "table shapes differ"
        );
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `state,action,value` rows with full round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# qtable v1 states={} actions={}",
            self.states, self.actions
        )?;
        writeln!(out, "state,action,value")?;
        for s in 0..self.states {
            for a in 0..self.actions {
                writeln!(out, "{s},{a},{:?}", self.get(s, a))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let bad = || Error::Config(format!("malformed Q-table row {record:?}"));
            let s: usize = field(0).parse().map_err(|_| bad())?;
            let a: usize = field(1).parse().map_err(|_| bad())?;
            let v: f64 = field(2).parse().map_err(|_| bad())?;
            rows.push((s, a, v));
        }
        let states = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        let actions = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        if states == 0 || rows.len() != states * actions {
            return Err(Error::Config("Q-table CSV is empty or not dense".into()));
        }
        let mut q = QTable::zeros(states, actions);
        let mut seen = vec![false; states * actions];
        for (s, a, v) in rows {
            if std::mem::replace(&mut seen[s * actions + a], true) {
                return Err(Error::Config(format!("duplicate Q-table entry ({s}, {a})")));
            }
            q.set(s, a, v);
        }
        Ok(q)
    }
}

/// Greedy action per table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn from_q(q: &QTable) -> Self {
        Self {
            actions: (0..q.states()).map(|s| q.greedy(s)).collect(),
        }
    }

    /// Same action everywhere.
    pub fn constant(states: usize, action: usize) -> Self {
        Self {
            actions: vec![action; states],
        }
    }

    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn differences(&self, other: &Policy) -> usize {
        self.actions
            .iter()
            .zip(&other.actions)
            .filter(|(a, b)| a != b)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// α = 1 / n(s, a), n counting updates of that entry.
    InverseVisits,
    /// α = n(s, a)^-ω with ω in (0.5, 1]; forgets early targets faster than 1/n.
    PolynomialVisits(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub step_size: StepSize,
    pub gamma: f64,
    /// Exploration probability at episode 0.
    pub epsilon0: f64,
    /// Exploration decay constant in episodes; `f64::INFINITY` keeps ε at `epsilon0`.
    pub t_epsilon: f64,
    pub max_episodes: usize,
    pub seed: u64,
    /// Consecutive episodes with an unchanged greedy policy needed to stop.
    pub stop_patience: usize,
    /// Per-episode step cap, for environments that may not terminate.
    pub max_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            step_size: StepSize::Constant(0.1),
            gamma: 0.8,
            epsilon0: 0.9,
            t_epsilon: 6000.0,
            max_episodes: 30_000,
            seed: 0,
            stop_patience: 50,
            max_steps: 10_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        match self.step_size {
            StepSize::Constant(alpha) if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::invalid("alpha", "must lie in (0, 1]"));
            }
            StepSize::PolynomialVisits(omega) if !(omega > 0.5 && omega <= 1.0) => {
                return Err(Error::invalid("omega", "must lie in (0.5, 1]"));
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return Err(Error::invalid("epsilon0", "must lie in [0, 1]"));
        }
        if !(self.t_epsilon > 0.0) {
            return Err(Error::invalid("t_epsilon", "must be positive"));
        }
        if self.stop_patience == 0 {
            return Err(Error::invalid("stop_patience", "must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Exploration probability for `episode`: ε0·exp(-episode/t_ε), clamped to [0, 1].
pub fn epsilon_schedule(episode: usize, cfg: &TrainConfig) -> f64 {
    (cfg.epsilon0 * (-(episode as f64) / cfg.t_epsilon).exp()).clamp(0.0, 1.0)
}

/// Q(s,a) += α (r + γ max Q(s',·) - Q(s,a)); a terminal `s_next` bootstraps 0.
pub fn td_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    reward: f64,
    s_next: Option<usize>,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    let bootstrap = s_next.map_or(0.0, |n| q.max(n));
    let old = q.get(s, a);
    let new = old + alpha * (reward + gamma * bootstrap - old);
    if !new.is_finite() {
        return Err(Error::NonFinite("TD update"));
    }
    q.set(s, a, new);
    Ok(new)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Undiscounted sum of rewards.
    pub total_reward: f64,
    pub epsilon: f64,
    /// Rows whose greedy action differs from the previous episode's.
    pub policy_changes: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub q: QTable,
    pub policy: Policy,
    pub log: Vec<EpisodeLog>,
    /// False when `max_episodes` ran out with the policy still changing.
    pub converged: bool,
}

impl TrainOutcome {
    pub fn episodes(&self) -> usize {
        self.log.len()
    }

    pub fn write_log_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "episode,return,epsilon,policy_changes")?;
        for e in &self.log {
            writeln!(
                out,
                "{},{},{},{}",
                e.episode,
                crate::format::sig6(e.total_reward),
                crate::format::sig6(e.epsilon),
                e.policy_changes
            )?;
        }
        Ok(())
    }
}

/// Episodic Q-learning from the environment's start point.
///
/// Each episode explores uniformly with probability [`epsilon_schedule`] and
/// otherwise follows the current greedy policy. Training stops once the
/// greedy policy has been unchanged for `stop_patience` consecutive episodes.
pub fn train<E: Environment>(env: &E, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let states = env.state_count();
    let actions = env.action_count();
    if states == 0 || actions == 0 {
        return Err(Error::invalid("env", "needs at least one state and action"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q = QTable::zeros(states, actions);
    let mut visits = vec![0u64; states * actions];
    let mut greedy = vec![0usize; states];
    let mut previous = greedy.clone();
    let mut log = Vec::new();
    let mut stable = 0;
    let mut converged = false;

    for episode in 0..cfg.max_episodes {
        let epsilon = epsilon_schedule(episode, cfg);
        let mut point = env.start();
        let mut total_reward = 0.0;
        let mut steps = 0;
        while let Some(s) = env.state_index(&point) {
            if steps == cfg.max_steps {
                break;
            }
            let a = if rng.gen::<f64>() < epsilon {
                rng.gen_range(0..actions)
            } else {
                greedy[s]
            };
            let (next, r) = env.advance(&point, a)?;
            let alpha = match cfg.step_size {
                StepSize::Constant(alpha) => alpha,
                StepSize::InverseVisits | StepSize::PolynomialVisits(_) => {
                    let n = &mut visits[s * actions + a];
                    *n += 1;
                    match cfg.step_size {
                        StepSize::PolynomialVisits(omega) => (*n as f64).powf(-omega),
                        _ => 1.0 / *n as f64,
                    }
                }
            };
            td_update(&mut q, s, a, r, env.state_index(&next), alpha, cfg.gamma)?;
            greedy[s] = q.greedy(s);
            total_reward += r;
            point = next;
            steps += 1;
        }
        let policy_changes = greedy.iter().zip(&previous).filter(|(a, b)| a != b).count();
        previous.copy_from_slice(&greedy);
        log.push(EpisodeLog {
            episode,
            total_reward,
            epsilon,
            policy_changes,
        });
        if policy_changes == 0 {
            stable += 1;
            if stable >= cfg.stop_patience {
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
    }

    Ok(TrainOutcome {
        policy: Policy { actions: greedy },
        q,
        log,
        converged,
    })
}

/// Sweeps Q(s,a) ← r(s,a) + γ max Q(s',·) until the largest change drops
/// below `tolerance` (or a sweep cap is reached for undiscounted cycles).
pub fn value_iteration_oracle<E: Enumerable>(
    env: &E,
    gamma: f64,
    tolerance: f64,
) -> Result<QTable> {
    const MAX_SWEEPS: usize = 100_000;
    let states = env.state_count();
    let actions = env.action_count();
    let mut outcomes = Vec::with_capacity(states * actions);
    for s in 0..states {
        for a in 0..actions {
            outcomes.push(env.outcome(s, a)?);
        }
    }
    let mut q = QTable::zeros(states, actions);
    let mut next_q = q.clone();
    for _ in 0..MAX_SWEEPS {
        for (i, o) in outcomes.iter().enumerate() {
            next_q.values[i] = o.reward + gamma * o.next.map_or(0.0, |n| q.max(n));
        }
        let delta = next_q.max_abs_diff(&q);
        std::mem::swap(&mut q, &mut next_q);
        if delta < tolerance {
            break;
        }
    }
    Ok(q)
}

#[derive(Debug, Clone)]
pub struct Rollout<P> {
    /// Start point followed by each visited point.
    pub points: Vec<P>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl<P> Rollout<P> {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.rewards
            .iter()
            .rev()
            .fold(0.0, |acc, r| r + gamma * acc)
    }
}

/// Greedy episode from the start point.
pub fn rollout<E: Environment>(policy: &Policy, env: &E) -> Result<Rollout<E::Point>> {
    const MAX_STEPS: usize = 1_000_000;
    let mut point = env.start();
    let mut out = Rollout {
        points: vec![point.clone()],
        actions: Vec::new(),
        rewards: Vec::new(),
    };
    while let Some(s) = env.state_index(&point) {
        if out.actions.len() == MAX_STEPS {
            return Err(Error::invalid("policy", "rollout did not terminate"));
        }
        let a = policy.action(s);
        let (next, r) = env.advance(&point, a)?;
        out.actions.push(a);
        out.rewards.push(r);
        out.points.push(next.clone());
        point = next;
    }
    Ok(out)
}
