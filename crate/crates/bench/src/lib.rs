//! Shared fixtures for the criterion benches.

use aquarl::{ExperimentConfig, FishEnv, Mode};

/// Default environment for `mode`.
pub fn default_env(mode: Mode) -> FishEnv {
    ExperimentConfig::for_mode(mode)
        .build_env()
        .expect("default config is valid")
}
