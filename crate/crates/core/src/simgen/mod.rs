//! Data generators, error-covariance designs and accuracy metrics for the
//! Monte Carlo study.

mod categorical;
mod metrics;
mod network;
mod rng;
mod scenario;
mod sigma;
mod var;

pub use categorical::{categorical_truth, gen_categorical};
pub use metrics::{aggregate, metrics, paired_t_test, Metrics, PairedTTest};
pub use network::{gen_scale_free_adjacency, gen_scale_free_adjacency_with, DegreeRule};
pub use rng::{replication_rng, SimRng};
pub use scenario::{Design, Replicate, Scenario};
pub use sigma::{make_sigma, SigmaKind};
pub use var::{
    companion_spectral_radius, lag_matrices, simulate_var2, var_coefficients, var_to_regression,
    var_truth, VarTruth, DEFAULT_BURN_IN, STABILITY_LIMIT,
};

use nalgebra::DMatrix;

use crate::types::GroupedCoefficients;

/// The data-generating truth for one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub coefficients: GroupedCoefficients,
    pub sigma: DMatrix<f64>,
    /// Present for VAR designs.
    pub var: Option<VarTruth>,
}
