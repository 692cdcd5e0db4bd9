//! The Ω-weighted least-squares loss, its gradient, and the joint penalized
//! negative log-likelihood.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::{
    check_pair, DesignMatrix, GroupedCoefficients, PenaltyConfig, PrecisionMatrix, ResponseMatrix,
};

fn check_dims(
    b: &GroupedCoefficients,
    omega: &PrecisionMatrix,
    x: &DesignMatrix,
    y: &ResponseMatrix,
) -> Result<()> {
    check_pair(x, y)?;
    if b.p() != x.p() || b.q() != y.q() || omega.q() != y.q() {
        return Err(Error::Conformance(format!(
            "X is {}x{}, B is {}x{}, Y is {}x{}, Omega is {}x{}",
            x.n(),
            x.p(),
            b.p(),
            b.q(),
            y.n(),
            y.q(),
            omega.q(),
            omega.q()
        )));
    }
    Ok(())
}

pub(crate) fn residuals(x: &DesignMatrix, y: &ResponseMatrix, b: &DMatrix<f64>) -> DMatrix<f64> {
    y.values() - x.values() * b
}

/// `(1/2n) tr(RᵀR Ω)` for a residual matrix `R`.
pub(crate) fn weighted_quadratic(resid: &DMatrix<f64>, omega: &DMatrix<f64>) -> f64 {
    let n = resid.nrows() as f64;
    let cross = resid.transpose() * resid;
    cross.component_mul(omega).sum() / (2.0 * n)
}

/// `ρ(B) = (1/2n) tr((Y − XB)ᵀ(Y − XB) Ω)`.
pub fn loss(
    b: &GroupedCoefficients,
    omega: &PrecisionMatrix,
    x: &DesignMatrix,
    y: &ResponseMatrix,
) -> Result<f64> {
    check_dims(b, omega, x, y)?;
    Ok(weighted_quadratic(&residuals(x, y, b.values()), omega.values()))
}

/// `Σ_j λ_{G_j} m_j ‖B_{G_j}‖₂`. Zero groups contribute nothing even under an
/// infinite weight; a nonzero group with infinite weight gives `+∞`.
pub fn group_penalty(b: &GroupedCoefficients, penalty: &PenaltyConfig) -> Result<f64> {
    let part = b.partition();
    penalty.check_groups(part)?;
    let mut total = 0.0;
    for j in 0..part.n_groups() {
        let norm = b.group_norm(j);
        if norm > 0.0 {
            total += penalty.group_weights[j] * part.size(j) as f64 * norm;
        }
    }
    Ok(total)
}

/// The conditional objective for `B` with `Ω` fixed: `ρ(B) + Σ_j λ_{G_j} m_j ‖B_{G_j}‖₂`.
pub fn regression_objective(
    b: &GroupedCoefficients,
    omega: &PrecisionMatrix,
    x: &DesignMatrix,
    y: &ResponseMatrix,
    penalty: &PenaltyConfig,
) -> Result<f64> {
    Ok(loss(b, omega, x, y)? + group_penalty(b, penalty)?)
}

/// Joint objective
/// `ρ(B) − ½ log|Ω| + Σ_j λ_{G_j} m_j ‖B_{G_j}‖₂ + λ_ω Σ_{k≠k'} |ω_{kk'}|`.
pub fn objective(
    b: &GroupedCoefficients,
    omega: &PrecisionMatrix,
    x: &DesignMatrix,
    y: &ResponseMatrix,
    penalty: &PenaltyConfig,
) -> Result<f64> {
    let omega_term = if penalty.lambda_omega > 0.0 {
        penalty.lambda_omega * omega.off_diagonal_l1()
    } else {
        0.0
    };
    Ok(regression_objective(b, omega, x, y, penalty)? - 0.5 * omega.log_det() + omega_term)
}

/// `∇ρ(B) = −(1/n) Xᵀ(Y − XB)Ω`.
pub fn gradient(
    b: &GroupedCoefficients,
    omega: &PrecisionMatrix,
    x: &DesignMatrix,
    y: &ResponseMatrix,
) -> Result<DMatrix<f64>> {
    check_dims(b, omega, x, y)?;
    let resid = residuals(x, y, b.values());
    Ok(-(x.values().transpose() * resid * omega.values()) / x.n() as f64)
}

/// `S_ik = x_iᵀ(Y − X B^{−ik}) Ω_k`, where `B^{−ik}` is `B` with cell `(i, k)`
/// zeroed. Satisfies `∇ρ(B)_ik = (−S_ik + ω_kk ‖x_i‖² B_ik) / n`.
pub fn partial_score(
    b: &GroupedCoefficients,
    omega: &PrecisionMatrix,
    x: &DesignMatrix,
    y: &ResponseMatrix,
    i: usize,
    k: usize,
) -> Result<f64> {
    check_dims(b, omega, x, y)?;
    if i >= x.p() || k >= y.q() {
        return Err(Error::IndexOutOfRange(format!(
            "cell ({}, {}) outside {}x{}",
            i + 1,
            k + 1,
            x.p(),
            y.q()
        )));
    }
    let mut minus = b.values().clone();
    minus[(i, k)] = 0.0;
    let resid = residuals(x, y, &minus);
    let xi = x.values().column(i);
    let projected = resid.transpose() * xi;
    Ok(projected.dot(&omega.values().column(k)))
}
