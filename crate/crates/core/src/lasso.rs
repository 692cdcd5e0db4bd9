//! Single-response lasso by cyclic coordinate descent, used to produce the
//! initial coefficient matrix for the group solver.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::grid::log_grid;
use crate::types::{check_pair, DesignMatrix, GroupPartition, GroupedCoefficients, ResponseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoSettings {
    /// Stop once the relative objective change between sweeps drops below this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_sweeps: 10_000,
        }
    }
}

pub(crate) fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn lasso_value(resid: &DVector<f64>, beta: &DVector<f64>, penalties: &[f64], n: f64) -> f64 {
    let pen: f64 = beta
        .iter()
        .zip(penalties)
        .filter(|(b, _)| **b != 0.0)
        .map(|(b, l)| b.abs() * l)
        .sum();
    resid.norm_squared() / (2.0 * n) + pen
}

/// Minimizes `(1/2n)‖y − Xβ‖² + Σ_i λ_i |β_i|` by cyclic coordinate descent
/// with soft-thresholding. Zero columns keep a zero coefficient.
pub fn lasso_cd(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalties: &[f64],
    warm_start: Option<&DVector<f64>>,
    settings: &LassoSettings,
) -> DVector<f64> {
    let (n, p) = x.shape();
    debug_assert_eq!(penalties.len(), p);
    let nf = n as f64;
    let sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let mut beta = warm_start
        .cloned()
        .unwrap_or_else(|| DVector::zeros(p));
    let mut resid = y - x * &beta;
    let mut prev = lasso_value(&resid, &beta, penalties, nf);
    for _ in 0..settings.max_sweeps {
        for i in 0..p {
            let col = x.column(i);
            let old = beta[i];
            let new = if sq[i] > 0.0 {
                let rho = col.dot(&resid) + sq[i] * old;
                soft_threshold(rho / nf, penalties[i]) / (sq[i] / nf)
            } else {
                0.0
            };
            if new != old {
                resid.axpy(old - new, &col, 1.0);
                beta[i] = new;
            }
        }
        let value = lasso_value(&resid, &beta, penalties, nf);
        let change = (prev - value).abs();
        prev = value;
        if change <= settings.tolerance * value.abs() || value == 0.0 {
            break;
        }
    }
    beta
}

/// Smallest uniform penalty for which the lasso solution of response `y` is zero:
/// `max_i |x_iᵀy| / n`.
pub fn lasso_lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = x.nrows() as f64;
    x.column_iter()
        .map(|c| c.dot(y).abs() / n)
        .fold(0.0, f64::max)
}

/// `q` separate lasso regressions, response `k` penalized by `lambdas[k]`.
pub fn lasso_init(
    x: &DesignMatrix,
    y: &ResponseMatrix,
    lambdas: &[f64],
    partition: Arc<GroupPartition>,
) -> Result<GroupedCoefficients> {
    check_pair(x, y)?;
    if lambdas.len() != y.q() || lambdas.iter().any(|l| l.is_nan() || *l < 0.0) {
        return Err(crate::Error::Configuration(format!(
            "need {} nonnegative initializer penalties, got {:?}",
            y.q(),
            lambdas
        )));
    }
    let settings = LassoSettings::default();
    let mut b = DMatrix::zeros(x.p(), y.q());
    for k in 0..y.q() {
        let yk = y.values().column(k).into_owned();
        let pens = vec![lambdas[k]; x.p()];
        let beta = lasso_cd(x.values(), &yk, &pens, None, &settings);
        b.set_column(k, &beta);
    }
    GroupedCoefficients::new(b, partition)
}

/// Result of the BIC-tuned initializer.
#[derive(Debug, Clone)]
pub struct LassoInit {
    pub coefficients: GroupedCoefficients,
    /// Selected penalty per response.
    pub lambdas: Vec<f64>,
}

/// Per-response lasso with the penalty chosen by
/// `BIC = n log(RSS/n) + df log n` over a log-spaced grid running from that
/// response's `λ_max` down to `ratio · λ_max`, warm-started along the grid.
/// Ties go to the larger penalty.
pub fn lasso_init_bic(
    x: &DesignMatrix,
    y: &ResponseMatrix,
    partition: Arc<GroupPartition>,
    points: usize,
    ratio: f64,
) -> Result<LassoInit> {
    check_pair(x, y)?;
    let settings = LassoSettings::default();
    let n = x.n() as f64;
    let mut b = DMatrix::zeros(x.p(), y.q());
    let mut chosen = Vec::with_capacity(y.q());
    for k in 0..y.q() {
        let yk = y.values().column(k).into_owned();
        let grid = log_grid(lasso_lambda_max(x.values(), &yk), points, ratio);
        let mut warm = DVector::zeros(x.p());
        let mut best: Option<(f64, f64, DVector<f64>)> = None;
        for &lambda in &grid {
            let pens = vec![lambda; x.p()];
            let beta = lasso_cd(x.values(), &yk, &pens, Some(&warm), &settings);
            let rss = (&yk - x.values() * &beta).norm_squared();
            let df = beta.iter().filter(|v| **v != 0.0).count() as f64;
            // an exact fit has unbounded likelihood; floor keeps the score finite
            let bic = n * (rss / n).max(1e-300).ln() + df * n.ln();
            if best.as_ref().is_none_or(|(s, _, _)| bic < *s) {
                best = Some((bic, lambda, beta.clone()));
            }
            warm = beta;
        }
        let (_, lambda, beta) = best.expect("grid is nonempty");
        b.set_column(k, &beta);
        chosen.push(lambda);
    }
    Ok(LassoInit {
        coefficients: GroupedCoefficients::new(b, partition)?,
        lambdas: chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supra_threshold_penalty_gives_zero() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.5, -1.0, 2.0, 0.3, 0.1, 2.0, -1.0]);
        let y = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 1.0, -1.0, 3.0, 0.5, 0.2]);
        let xd = DesignMatrix::new(x.clone()).unwrap();
        let yd = ResponseMatrix::new(y.clone()).unwrap();
        let lams: Vec<f64> = (0..2)
            .map(|k| lasso_lambda_max(&x, &y.column(k).into_owned()))
            .collect();
        let part = Arc::new(GroupPartition::singleton(2, 2).unwrap());
        let b = lasso_init(&xd, &yd, &lams, part).unwrap();
        assert!(b.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn orthonormal_design_without_penalty_is_projection() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = DMatrix::from_row_slice(4, 2, &[s, 0.0, s, 0.0, 0.0, s, 0.0, -s]);
        let y = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0, 1.5, 4.0]);
        let part = Arc::new(GroupPartition::singleton(2, 2).unwrap());
        let b = lasso_init(
            &DesignMatrix::new(x.clone()).unwrap(),
            &ResponseMatrix::new(y.clone()).unwrap(),
            &[0.0, 0.0],
            part,
        )
        .unwrap();
        assert!((b.values() - x.transpose() * y).amax() < 1e-12);
    }

    #[test]
    fn zero_column_stays_zero() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, -1.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let beta = lasso_cd(&x, &y, &[0.0, 0.0], None, &LassoSettings::default());
        assert_eq!(beta[1], 0.0);
        assert!((beta[0] - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn negative_penalty_rejected() {
        let x = DesignMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let y = ResponseMatrix::new(DMatrix::identity(2, 1)).unwrap();
        let part = Arc::new(GroupPartition::singleton(2, 1).unwrap());
        assert!(lasso_init(&x, &y, &[-1.0], part).is_err());
    }
}
