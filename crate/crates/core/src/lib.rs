//! Multivariate regression with grouped predictors and correlated errors:
//! the group lasso jointly estimated with a sparse error precision matrix.
//!
//! The model is `Y = XB + E` with rows of `E` drawn from `N(0, Ω⁻¹)`. The
//! estimator alternates between block coordinate descent for `B` at fixed
//! `Ω` and the graphical lasso for `Ω` at fixed `B`, choosing both penalty
//! levels by BIC. Baselines fix `Ω = I` and/or use singleton groups.

pub mod csvio;
pub mod error;
pub mod estimator;
pub mod forecast;
pub mod glasso;
pub mod grid;
pub mod group_lasso;
pub mod harness;
pub mod lasso;
pub mod objective;
pub mod registry;
pub mod simgen;
pub mod types;

pub use error::{Error, Result};
pub use estimator::{fit, EstimatorKind, FitConfig, FitReport};
pub use forecast::{expanding_window, export_networks, networks_from_matrices, ForecastConfig, ForecastResult, Networks};
pub use glasso::{glasso_solve, CovarianceEstimate};
pub use grid::GridSpec;
pub use group_lasso::{bcd_solve, BcdTrace, SolverSettings};
pub use harness::{run_scenario, SimulationOutcome};
pub use objective::{gradient, loss, objective, partial_score};
pub use registry::{strategy_for, Estimator, EstimatorRegistry};
pub use types::{
    DesignMatrix, GroupPartition, GroupedCoefficients, PenaltyConfig, PrecisionMatrix,
    ResponseMatrix,
};
