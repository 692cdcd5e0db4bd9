use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::network::gen_scale_free_adjacency;
use super::GroundTruth;
use crate::error::{Error, Result};
use crate::types::{DesignMatrix, GroupPartition, GroupedCoefficients, ResponseMatrix};

pub const DEFAULT_BURN_IN: usize = 200;
/// Generated coefficient pairs must have companion spectral radius below this.
pub const STABILITY_LIMIT: f64 = 0.99;
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct VarTruth {
    pub adjacency: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    /// Networks rejected as non-stationary before this one was accepted.
    pub redraws: usize,
}

/// Largest eigenvalue modulus of the companion matrix `[[B₁, B₂], [I, 0]]`.
pub fn companion_spectral_radius(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> f64 {
    let q = b1.nrows();
    let mut companion = DMatrix::zeros(2 * q, 2 * q);
    companion.view_mut((0, 0), (q, q)).copy_from(b1);
    companion.view_mut((0, q), (q, q)).copy_from(b2);
    companion
        .view_mut((q, 0), (q, q))
        .copy_from(&DMatrix::identity(q, q));
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Simulates `y_t = B₁y_{t−1} + B₂y_{t−2} + e_t`, `e_t ~ N(0, Σ)`, from zero
/// initial values, discarding the first `burn_in` draws and returning `T` rows.
pub fn simulate_var2<R: Rng + ?Sized>(
    b1: &DMatrix<f64>,
    b2: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    t: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<ResponseMatrix> {
    let q = sigma.nrows();
    if b1.shape() != (q, q) || b2.shape() != (q, q) || sigma.ncols() != q {
        return Err(Error::Conformance(
            "B1, B2 and Sigma must all be q x q".into(),
        ));
    }
    if t == 0 {
        return Err(Error::Configuration("series length must be >= 1".into()));
    }
    let radius = companion_spectral_radius(b1, b2);
    if !(radius < 1.0) {
        return Err(Error::Stability(radius));
    }
    let chol = nalgebra::Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::Definiteness("error covariance".into()))?;
    let l = chol.l();
    let mut lag1 = DVector::zeros(q);
    let mut lag2 = DVector::zeros(q);
    let mut out = DMatrix::zeros(t, q);
    for step in 0..(burn_in + t) {
        let e = DVector::from_iterator(q, (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let y = b1 * &lag1 + b2 * &lag2 + &l * e;
        if step >= burn_in {
            out.set_row(step - burn_in, &y.transpose());
        }
        lag2 = std::mem::replace(&mut lag1, y);
    }
    ResponseMatrix::new(out)
}

/// Draws a scale-free network and sets `B₁ = 0.4A`, `B₂ = 0.2A`, redrawing
/// while the companion spectral radius is at least [`STABILITY_LIMIT`].
pub fn var_truth<R: Rng + ?Sized>(
    q: usize,
    sigma: DMatrix<f64>,
    rng: &mut R,
) -> Result<GroundTruth> {
    for redraws in 0..MAX_REDRAWS {
        let adjacency = gen_scale_free_adjacency(q, rng)?;
        let b1 = &adjacency * 0.4;
        let b2 = &adjacency * 0.2;
        if companion_spectral_radius(&b1, &b2) < STABILITY_LIMIT {
            let coefficients = GroupedCoefficients::new(
                var_coefficients(&[b1.clone(), b2.clone()])?,
                Arc::new(GroupPartition::var_lags(q, 2)?),
            )?;
            return Ok(GroundTruth {
                coefficients,
                sigma,
                var: Some(VarTruth {
                    adjacency,
                    b1,
                    b2,
                    redraws,
                }),
            });
        }
    }
    Err(Error::NumericalFailure(format!(
        "no stationary network after {MAX_REDRAWS} draws"
    )))
}

/// Stacks lag matrices into the regression layout: `B[i + l·q, k] = B_l[k, i]`.
pub fn var_coefficients(lags: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let q = lags.first().map_or(0, |m| m.nrows());
    if q == 0 || lags.iter().any(|m| m.shape() != (q, q)) {
        return Err(Error::Conformance("lag matrices must be q x q".into()));
    }
    let mut b = DMatrix::zeros(lags.len() * q, q);
    for (l, m) in lags.iter().enumerate() {
        b.view_mut((l * q, 0), (q, q)).copy_from(&m.transpose());
    }
    Ok(b)
}

/// Inverse of [`var_coefficients`].
pub fn lag_matrices(b: &DMatrix<f64>, lags: usize) -> Result<Vec<DMatrix<f64>>> {
    let q = b.ncols();
    if lags == 0 || b.nrows() != lags * q {
        return Err(Error::Conformance(format!(
            "coefficients are {}x{}, expected {}x{q}",
            b.nrows(),
            q,
            lags * q
        )));
    }
    Ok((0..lags)
        .map(|l| b.view((l * q, 0), (q, q)).transpose())
        .collect())
}

/// Lagged regression for a `T × q` series: rows `t = lags+1..T` with
/// predictors `(y_{t−1}ᵀ, …, y_{t−lags}ᵀ)`. Groups hold every lag of series
/// `i` in equation `k`.
pub fn var_to_regression(
    series: &DMatrix<f64>,
    lags: usize,
) -> Result<(DesignMatrix, ResponseMatrix, GroupPartition)> {
    let (t, q) = series.shape();
    if lags == 0 {
        return Err(Error::Configuration("lags must be >= 1".into()));
    }
    if t <= lags {
        return Err(Error::InvalidInput(format!(
            "series of length {t} is too short for {lags} lags"
        )));
    }
    let rows = t - lags;
    let mut x = DMatrix::zeros(rows, lags * q);
    let mut y = DMatrix::zeros(rows, q);
    for r in 0..rows {
        let time = r + lags;
        y.set_row(r, &series.row(time));
        for l in 0..lags {
            x.view_mut((r, l * q), (1, q))
                .copy_from(&series.row(time - l - 1));
        }
    }
    Ok((
        DesignMatrix::new(x)?,
        ResponseMatrix::new(y)?,
        GroupPartition::var_lags(q, lags)?,
    ))
}
