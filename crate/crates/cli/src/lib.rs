//! Experiment orchestration for the robust fair-classification toolkit:
//! experiment configuration, the per-trial protocol, parameter sweeps, and
//! the theory verification driver. The `fairguard` binary is a thin clap
//! front end over these.

pub mod config;
pub mod runner;
pub mod verify;

pub use config::{AdversarySpec, DataSource, ExperimentConfig, SolverVariant};
pub use runner::{
    build_grid, derive_trial_seed, run_experiment, run_trial, sweep, GridPoint, SweepReport,
    TrialReport, TrialRow,
};
pub use verify::{verify_theory, TheoryParams, TheoryReport};
