use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::cholesky_log_det;

/// Error-covariance designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaKind {
    /// `Σ_ij = ρ^{|i−j|}`; the precision matrix is tridiagonal.
    SparseOmega { rho: f64 },
    /// `Σ = I`.
    DiagonalOmega,
    /// Fractional-Gaussian-noise autocovariance with Hurst index 0.9:
    /// `Σ_ij = ½((h+1)^{1.8} − 2h^{1.8} + |h−1|^{1.8})`, `h = |i−j|`.
    DenseOmega,
}

impl SigmaKind {
    pub fn label(&self) -> &'static str {
        match self {
            SigmaKind::SparseOmega { .. } => "sparse",
            SigmaKind::DiagonalOmega => "diagonal",
            SigmaKind::DenseOmega => "dense",
        }
    }
}

pub fn make_sigma(kind: SigmaKind, q: usize) -> Result<DMatrix<f64>> {
    if q == 0 {
        return Err(Error::Configuration("q must be >= 1".into()));
    }
    let sigma = match kind {
        SigmaKind::SparseOmega { rho } => {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(Error::Configuration(format!("rho {rho} outside (-1, 1)")));
            }
            DMatrix::from_fn(q, q, |i, j| rho.powi(i.abs_diff(j) as i32))
        }
        SigmaKind::DiagonalOmega => DMatrix::identity(q, q),
        SigmaKind::DenseOmega => {
            const EXPONENT: f64 = 2.0 * 0.9;
            DMatrix::from_fn(q, q, |i, j| {
                let h = i.abs_diff(j) as f64;
                0.5 * ((h + 1.0).powf(EXPONENT) - 2.0 * h.powf(EXPONENT)
                    + (h - 1.0).abs().powf(EXPONENT))
            })
        }
    };
    if cholesky_log_det(&sigma).is_none() {
        return Err(Error::Definiteness(format!(
            "{} covariance of size {q} is not positive definite",
            kind.label()
        )));
    }
    Ok(sigma)
}
