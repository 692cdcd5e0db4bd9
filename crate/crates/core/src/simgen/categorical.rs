use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use super::GroundTruth;
use crate::error::{Error, Result};
use crate::types::{DesignMatrix, GroupPartition, GroupedCoefficients};

fn cut_points() -> (f64, f64) {
    let normal = Normal::standard();
    (normal.inverse_cdf(1.0 / 3.0), normal.inverse_cdf(2.0 / 3.0))
}

/// Draws `n` rows of `K` latent Gaussians with `corr(Z_i, Z_j) = 0.5^{|i−j|}`,
/// trichotomizes each at the 1/3 and 2/3 normal quantiles (below → 0,
/// above → 1, middle → 2) and returns the `n × 2K` dummy design with columns
/// `(D⁰_1, D¹_1, …, D⁰_K, D¹_K)` together with the categories.
pub fn gen_categorical<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<(DesignMatrix, Vec<Vec<u8>>)> {
    if n == 0 || k == 0 {
        return Err(Error::Configuration("categorical design needs n, K >= 1".into()));
    }
    let cov = DMatrix::from_fn(k, k, |i, j| 0.5f64.powi(i.abs_diff(j) as i32));
    let chol = nalgebra::Cholesky::new(cov).expect("0.5^|i-j| is positive definite");
    let l = chol.l();
    let (lo, hi) = cut_points();
    let mut x = DMatrix::zeros(n, 2 * k);
    let mut categories = Vec::with_capacity(n);
    for row in 0..n {
        let e = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let z = &l * e;
        let cats: Vec<u8> = z
            .iter()
            .map(|&v| {
                if v < lo {
                    0
                } else if v > hi {
                    1
                } else {
                    2
                }
            })
            .collect();
        for (j, &c) in cats.iter().enumerate() {
            match c {
                0 => x[(row, 2 * j)] = 1.0,
                1 => x[(row, 2 * j + 1)] = 1.0,
                _ => {}
            }
        }
        categories.push(cats);
    }
    Ok((DesignMatrix::new(x)?, categories))
}

/// Coefficients for the categorical design with `p = 2K` dummies and `q`
/// responses: column `k` carries the alternating pattern `(2, −1, 2, …)` on
/// rows `k·p/q .. (k+1)·p/q` and zeros elsewhere. Groups pair the two dummies
/// of one categorical variable within one response (`m_j = 2`, `K·q` groups).
pub fn categorical_truth(k: usize, q: usize, sigma: DMatrix<f64>) -> Result<GroundTruth> {
    let p = 2 * k;
    if k == 0 || q == 0 || p % q != 0 {
        return Err(Error::Configuration(format!(
            "p = 2K = {p} must be a positive multiple of q = {q}"
        )));
    }
    if sigma.nrows() != q || sigma.ncols() != q {
        return Err(Error::Conformance("sigma must be q x q".into()));
    }
    let block = p / q;
    let b = DMatrix::from_fn(p, q, |i, col| {
        if i / block == col {
            if (i % block) % 2 == 0 {
                2.0
            } else {
                -1.0
            }
        } else {
            0.0
        }
    });
    let assignment = (0..p * q).map(|idx| (idx % p) / 2 + k * (idx / p)).collect();
    let partition = Arc::new(GroupPartition::from_assignment(p, q, assignment)?);
    Ok(GroundTruth {
        coefficients: GroupedCoefficients::new(b, partition)?,
        sigma,
        var: None,
    })
}
