//! Graphical lasso for the precision matrix given the coefficients.
//!
//! Solves `min_{Ω ≻ 0} tr(SΩ) − log|Ω| + λ Σ_{k≠k'} |ω_{kk'}|` with the
//! diagonal unpenalized, by blockwise coordinate descent on the covariance
//! `W = Ω⁻¹`: each column is refit by a lasso on the remaining block.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lasso::soft_threshold;
use crate::objective::residuals;
use crate::types::{
    check_pair, cholesky_log_det, DesignMatrix, GroupedCoefficients, PrecisionMatrix,
    ResponseMatrix, SYMMETRY_TOL,
};

pub const DEFAULT_GLASSO_TOLERANCE: f64 = 1e-6;
const MAX_OUTER_SWEEPS: usize = 10_000;
const INNER_TOLERANCE: f64 = 1e-13;
const MAX_INNER_SWEEPS: usize = 100_000;

/// Residual second-moment matrix `S = (1/n)(Y − XB)ᵀ(Y − XB)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    s: DMatrix<f64>,
    n: usize,
}

impl CovarianceEstimate {
    pub fn new(s: DMatrix<f64>, n: usize) -> Result<Self> {
        if !s.is_square() || s.nrows() == 0 || n == 0 {
            return Err(Error::Conformance(
                "covariance must be square, non-empty, with n >= 1".into(),
            ));
        }
        let q = s.nrows();
        for r in 0..q {
            if !(s[(r, r)] >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "covariance diagonal entry {} is negative or NaN",
                    r + 1
                )));
            }
            for c in (r + 1)..q {
                if (s[(r, c)] - s[(c, r)]).abs() > SYMMETRY_TOL * (1.0 + s[(r, c)].abs()) {
                    return Err(Error::InvalidInput("covariance is not symmetric".into()));
                }
            }
        }
        Ok(Self { s, n })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.s.nrows()
    }

    /// Largest absolute off-diagonal entry; the smallest penalty at which the
    /// solution is diagonal.
    pub fn max_off_diagonal(&self) -> f64 {
        let q = self.q();
        let mut m: f64 = 0.0;
        for r in 0..q {
            for c in 0..q {
                if r != c {
                    m = m.max(self.s[(r, c)].abs());
                }
            }
        }
        m
    }

    /// Needs a ridge before the precision step: a zero diagonal or a
    /// numerically singular matrix.
    pub fn is_degenerate(&self) -> bool {
        let mean_diag = self.s.diagonal().mean();
        self.s.diagonal().iter().any(|d| *d <= 1e-12 * (1.0 + mean_diag))
            || cholesky_log_det(&self.s).is_none()
    }

    /// Adds `10⁻⁸ · mean(diag S + 1)` to the diagonal; returns the amount.
    pub fn add_jitter(&mut self) -> f64 {
        let jitter = 1e-8 * (self.s.diagonal().mean() + 1.0);
        for d in 0..self.q() {
            self.s[(d, d)] += jitter;
        }
        jitter
    }
}

pub fn residual_covariance(
    x: &DesignMatrix,
    y: &ResponseMatrix,
    b: &GroupedCoefficients,
) -> Result<CovarianceEstimate> {
    check_pair(x, y)?;
    if b.p() != x.p() || b.q() != y.q() {
        return Err(Error::Conformance(format!(
            "B is {}x{} for X {}x{} and Y {}x{}",
            b.p(),
            b.q(),
            x.n(),
            x.p(),
            y.n(),
            y.q()
        )));
    }
    let r = residuals(x, y, b.values());
    let mut s = r.transpose() * &r / x.n() as f64;
    // exact symmetry for downstream checks
    let q = s.nrows();
    for i in 0..q {
        for j in (i + 1)..q {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    CovarianceEstimate::new(s, x.n())
}

fn drop_index(q: usize, j: usize) -> Vec<usize> {
    (0..q).filter(|&i| i != j).collect()
}

/// Lasso on the quadratic form `½βᵀVβ − βᵀu + λ‖β‖₁` by coordinate descent.
fn quadratic_lasso(v: &DMatrix<f64>, u: &DVector<f64>, lambda: f64, beta: &mut DVector<f64>) {
    let m = u.len();
    let scale = u.amax().max(1e-300);
    for _ in 0..MAX_INNER_SWEEPS {
        let mut max_delta: f64 = 0.0;
        for l in 0..m {
            let mut r = u[l];
            for t in 0..m {
                if t != l {
                    r -= v[(l, t)] * beta[t];
                }
            }
            let new = soft_threshold(r, lambda) / v[(l, l)];
            max_delta = max_delta.max((new - beta[l]).abs() * v[(l, l)]);
            beta[l] = new;
        }
        if max_delta <= INNER_TOLERANCE * scale {
            break;
        }
    }
}

/// Graphical lasso with off-diagonal penalty `lambda` (each off-diagonal
/// entry penalized by `lambda·|ω|`, i.e. `2λ Σ_{k<k'} |ω_{kk'}|`).
///
/// `lambda = 0` requires a positive-definite `S` and returns `S⁻¹`.
pub fn glasso_solve(
    cov: &CovarianceEstimate,
    lambda: f64,
    tolerance: f64,
) -> Result<PrecisionMatrix> {
    if lambda.is_nan() || lambda < 0.0 || !(tolerance > 0.0) {
        return Err(Error::Configuration(
            "glasso needs lambda >= 0 and tolerance > 0".into(),
        ));
    }
    let s = cov.values();
    let q = cov.q();
    if lambda == 0.0 {
        let chol = nalgebra::Cholesky::new(s.clone()).ok_or_else(|| {
            Error::Definiteness("unpenalized precision step needs a positive-definite S".into())
        })?;
        return symmetric_precision(chol.inverse());
    }
    if let Some(d) = s.diagonal().iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Definiteness(format!(
            "covariance diagonal entry {} is not positive",
            d + 1
        )));
    }
    if q == 1 {
        return PrecisionMatrix::new(DMatrix::from_element(1, 1, 1.0 / s[(0, 0)]));
    }

    let mut w = s.clone();
    let mut betas: Vec<DVector<f64>> = vec![DVector::zeros(q - 1); q];
    let scale = s.diagonal().mean();
    for _ in 0..MAX_OUTER_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..q {
            let idx = drop_index(q, j);
            let w11 = w.select_rows(&idx).select_columns(&idx);
            let s12 = DVector::from_iterator(q - 1, idx.iter().map(|&i| s[(i, j)]));
            quadratic_lasso(&w11, &s12, lambda, &mut betas[j]);
            let w12 = &w11 * &betas[j];
            for (pos, &i) in idx.iter().enumerate() {
                max_change = max_change.max((w[(i, j)] - w12[pos]).abs());
                w[(i, j)] = w12[pos];
                w[(j, i)] = w12[pos];
            }
        }
        if max_change <= tolerance * scale {
            break;
        }
    }

    let mut omega = DMatrix::zeros(q, q);
    for j in 0..q {
        let idx = drop_index(q, j);
        let w12 = DVector::from_iterator(q - 1, idx.iter().map(|&i| w[(i, j)]));
        let denom = w[(j, j)] - w12.dot(&betas[j]);
        if !(denom > 0.0) {
            return Err(Error::NumericalFailure(
                "graphical lasso produced a non-positive Schur complement".into(),
            ));
        }
        let diag = 1.0 / denom;
        omega[(j, j)] = diag;
        for (pos, &i) in idx.iter().enumerate() {
            omega[(i, j)] = -betas[j][pos] * diag;
        }
    }
    symmetric_precision(omega)
}

/// Averages mirrored entries; an entry zero on either side stays zero.
fn symmetric_precision(mut omega: DMatrix<f64>) -> Result<PrecisionMatrix> {
    let q = omega.nrows();
    for i in 0..q {
        for j in (i + 1)..q {
            let (a, b) = (omega[(i, j)], omega[(j, i)]);
            let v = if a == 0.0 || b == 0.0 { 0.0 } else { 0.5 * (a + b) };
            omega[(i, j)] = v;
            omega[(j, i)] = v;
        }
    }
    PrecisionMatrix::new(omega)
}

/// Largest violation of the graphical-lasso optimality conditions at `Ω`:
/// `(Ω⁻¹)_kk = S_kk`; `(Ω⁻¹ − S)_kk' = λ sign(ω_kk')` where `ω_kk' ≠ 0`;
/// `|(Ω⁻¹ − S)_kk'| ≤ λ` where `ω_kk' = 0`.
pub fn glasso_kkt_check(cov: &CovarianceEstimate, omega: &PrecisionMatrix, lambda: f64) -> f64 {
    let w = omega.inverse();
    let s = cov.values();
    let q = cov.q();
    let mut worst: f64 = 0.0;
    for r in 0..q {
        for c in 0..q {
            let diff = w[(r, c)] - s[(r, c)];
            let violation = if r == c {
                diff.abs()
            } else {
                let om = omega.values()[(r, c)];
                if om != 0.0 {
                    (diff - lambda * om.signum()).abs()
                } else {
                    (diff.abs() - lambda).max(0.0)
                }
            };
            worst = worst.max(violation);
        }
    }
    worst
}

/// `tr(SΩ) − log|Ω| + λ Σ_{k≠k'} |ω_{kk'}|`.
pub fn glasso_objective(cov: &CovarianceEstimate, omega: &PrecisionMatrix, lambda: f64) -> f64 {
    cov.values().component_mul(omega.values()).sum() - omega.log_det()
        + lambda * omega.off_diagonal_l1()
}
