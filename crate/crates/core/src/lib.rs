//! Laplace approximations to Bayesian normalizing constants.
//!
//! The crate pairs a generic Newton mode-finder and Laplace assembler
//! with three conjugate reference models whose normalizing constants
//! have closed forms, plus finite-sample accuracy bounds, Monte Carlo
//! sweep tooling, and assumption diagnostics.

// `!(x > 0.0)`-style guards are deliberate throughout: unlike
// `x <= 0.0`, they also reject NaN. Pinned decimal constants keep full
// oracle precision even where it exceeds what f64 resolves.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bounds;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod laplace;
pub mod models;
pub mod numerics;

pub use bounds::{BoundCheck, TheoremId, BOUND_SLACK, T2_N_MIN_DEFAULT, T3_N_MIN_DEFAULT};
pub use diagnostics::{
    consistency_sweep, diagnose, AssumptionReport, ConsistencyPoint, ConsistencySweep,
    DiagnosticsConfig,
};
pub use error::{Error, Result};
pub use harness::{
    emit_csv, emit_json, emit_plot, fit_rate, fit_rate_from_records, floor_coefficient,
    parse_csv, replicate_seed, run_experiment, summarize_bounds, BoundSummary, BoundTally,
    ComparisonRecord, ExperimentConfig, PlotConfig, RateFit, RateStatistic, RecordRow,
};
pub use laplace::{find_mode, laplace_approximate, LaplaceResult, ModeResult, Objective, SolverConfig};
pub use models::{BernoulliModel, Model, ModelKind, MultinomialModel, PoissonModel, TrueDistribution};
