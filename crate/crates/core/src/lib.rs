//! Deterministic simulator and analysis toolkit for the KKPS
//! recommend/endorse model of Web evolution.
//!
//! A world of `k` topics, `m` users and `n` documents is drawn once; then
//! each iteration every user is recommended the `a` highest-scored
//! documents for its topic and endorses the `b` most useful, scores being
//! shared pseudo-scores before any links exist and in-degrees afterwards.
//! The crate simulates that loop, measures the in-degree distribution and
//! the efficiency (attained versus maximum total utility), fits power laws
//! two independent ways, and drives the whole thing across parameter
//! sweeps with reproducible seeding throughout.

pub mod analysis;
pub mod engine;
pub mod experiments;
pub mod io;
pub mod params;
pub mod plot;
pub mod world;

pub use analysis::{
    efficiency, fit_power_law, max_total_utility, DegreeHistogram, FitError, FitMethod,
    PowerLawFit,
};
pub use engine::{
    endorse, initial_scores, recommend, run, IterationRecord, RunOutput, SimError, Simulation,
    Trajectory, WwwState,
};
pub use experiments::{
    preset, run_sweep, run_sweep_with_threads, trend_tests, PresetName, SweepConfig, SweepResult,
    TrendReport,
};
pub use params::{
    InitDist, ModelParams, ParamError, ParamWarning, Scope, TieBreak, UpdateMode, ValueDist,
};
pub use world::TopicWorld;
