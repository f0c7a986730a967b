//! Configuration, orchestration and output of simulation and replay experiments.

pub mod chart;
pub mod config;
pub mod io;
pub mod runner;

pub use chart::{emit_chart, render_svg, Series};
pub use config::{EnvironmentConfig, ExperimentConfig, PolicySpec, ReplaySpec, TheoryConfig};
pub use runner::{
    build_policy, run_experiment, run_replay, run_repetition, write_experiment, write_replay, ExperimentOutput,
    PolicyContext, ReplayOutput, RepResult,
};
