//! Bioenergetic growth simulation and tabular Q-learning control of Nile
//! tilapia feeding.
//!
//! [`growth`] integrates the anabolism/catabolism growth ODE, [`mdp`] wraps it
//! as a discretized episodic MDP for floating cages or temperature-controlled
//! tanks, [`qlearn`] trains ε-greedy Q-learning policies on it, and
//! [`experiment`] runs seeded trainings and sensitivity sweeps scored with
//! [`metrics`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod experiment;
pub mod format;
pub mod growth;
pub mod mdp;
pub mod metrics;
pub mod qlearn;
pub mod reference;

pub use error::{Error, Result};
pub use experiment::{
    run, sweep, ExperimentConfig, ReferenceSource, RunOutput, SweepRow, SweepSpec,
};
pub use growth::{EnvConditions, FishState, GrowthParams, Integrator, ReferenceSettings};
pub use mdp::{
    Action, ActionSpace, Enumerable, Environment, FishEnv, Grid, Mode, Outcome, RewardShape,
    RewardSpec, StateId, TabularMdp, Trajectory, Transition,
};
pub use metrics::EvalReport;
pub use qlearn::{Policy, QTable, StepSize, TrainConfig, TrainOutcome};
pub use reference::Reference;
