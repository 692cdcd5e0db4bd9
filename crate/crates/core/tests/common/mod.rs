//! Independent reference implementations used as test oracles. None of them
//! calls into the solvers under test; they share only the data types.

#![allow(dead_code)]

use std::sync::Arc;

use glcov::types::{
    DesignMatrix, GroupPartition, GroupedCoefficients, PenaltyConfig, PrecisionMatrix,
    ResponseMatrix,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Random symmetric positive-definite matrix with eigenvalues in [0.5, 2.5].
pub fn random_pd(q: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = normal_matrix(q, q, rng);
    let qr = a.qr();
    let u = qr.q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(q, |_, _| rng.random_range(0.5..2.5)));
    let m = &u * d * u.transpose();
    (&m + m.transpose()) * 0.5
}

/// Naive-loop loss `(1/2n) Σ_t Σ_{k,k'} e_tk ω_kk' e_tk'`.
pub fn loss_loops(b: &DMatrix<f64>, omega: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let (n, p) = x.shape();
    let q = y.ncols();
    let mut total = 0.0;
    for t in 0..n {
        let e: Vec<f64> = (0..q)
            .map(|k| y[(t, k)] - (0..p).map(|i| x[(t, i)] * b[(i, k)]).sum::<f64>())
            .collect();
        for k in 0..q {
            for k2 in 0..q {
                total += e[k] * omega[(k, k2)] * e[k2];
            }
        }
    }
    total / (2.0 * n as f64)
}

pub fn group_penalty_loops(b: &DMatrix<f64>, part: &GroupPartition, weights: &[f64]) -> f64 {
    (0..part.n_groups())
        .map(|j| {
            let norm = part
                .cells(j)
                .iter()
                .map(|&(i, k)| b[(i, k)].powi(2))
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                0.0
            } else {
                weights[j] * part.size(j) as f64 * norm
            }
        })
        .sum()
}

pub fn regression_objective_loops(
    b: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    part: &GroupPartition,
    weights: &[f64],
) -> f64 {
    loss_loops(b, omega, x, y) + group_penalty_loops(b, part, weights)
}

fn max_eigen(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// Accelerated proximal gradient (FISTA with adaptive restart) for
/// `ρ(B) + Σ_j w_j m_j ‖B_{G_j}‖₂`, run until the iterate stops moving.
pub fn fista_group_lasso(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    part: &GroupPartition,
    weights: &[f64],
    max_iter: usize,
) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let xtx = x.transpose() * x / n;
    let xty = x.transpose() * y / n;
    let lip = max_eigen(&xtx) * max_eigen(omega);
    let step = 1.0 / lip;
    let grad = |b: &DMatrix<f64>| (&xtx * b - &xty) * omega;
    let prox = |v: DMatrix<f64>| {
        let mut out = v.clone();
        for j in 0..part.n_groups() {
            let cells = part.cells(j);
            let norm = cells.iter().map(|&(i, k)| v[(i, k)].powi(2)).sum::<f64>().sqrt();
            let thresh = step * weights[j] * cells.len() as f64;
            let scale = if norm <= thresh || thresh.is_infinite() { 0.0 } else { 1.0 - thresh / norm };
            for &(i, k) in cells {
                out[(i, k)] = v[(i, k)] * scale;
            }
        }
        out
    };
    let obj = |b: &DMatrix<f64>| regression_objective_loops(b, omega, x, y, part, weights);
    let mut b = DMatrix::zeros(x.ncols(), y.ncols());
    let mut z = b.clone();
    let mut t: f64 = 1.0;
    let mut prev_obj = obj(&b);
    for _ in 0..max_iter {
        let next = prox(&z - grad(&z) * step);
        let next_obj = obj(&next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if next_obj > prev_obj {
            // restart momentum
            z = b.clone();
            t = 1.0;
            continue;
        }
        let moved = (&next - &b).amax();
        z = &next + (&next - &b) * ((t - 1.0) / t_next);
        b = next;
        t = t_next;
        prev_obj = next_obj;
        if moved < 1e-15 {
            break;
        }
    }
    b
}

/// Proximal gradient for a single-response lasso
/// `(1/2n)‖y − Xβ‖² + λ Σ|β_i|`.
pub fn ista_lasso(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64, iters: usize) -> DMatrix<f64> {
    let p = x.ncols();
    let part = GroupPartition::singleton(p, 1).unwrap();
    fista_group_lasso(x, y, &DMatrix::identity(1, 1), &part, &vec![lambda; p], iters)
}

/// Glasso objective `tr(SΩ) − log|Ω| + λ Σ_{k≠k'} |ω_kk'|` via eigenvalues.
pub fn glasso_objective_eig(s: &DMatrix<f64>, omega: &DMatrix<f64>, lambda: f64) -> f64 {
    let eig = SymmetricEigen::new(omega.clone()).eigenvalues;
    if eig.iter().any(|v| *v <= 0.0) {
        return f64::INFINITY;
    }
    let logdet: f64 = eig.iter().map(|v| v.ln()).sum();
    let mut l1 = 0.0;
    for r in 0..s.nrows() {
        for c in 0..s.ncols() {
            if r != c {
                l1 += omega[(r, c)].abs();
            }
        }
    }
    s.component_mul(omega).sum() - logdet + lambda * l1
}

/// Proximal gradient with backtracking for the graphical lasso, started at
/// `diag(1/s_kk)`.
pub fn glasso_prox_oracle(s: &DMatrix<f64>, lambda: f64, iters: usize) -> DMatrix<f64> {
    let q = s.nrows();
    let mut omega = DMatrix::from_fn(q, q, |r, c| if r == c { 1.0 / s[(r, r)] } else { 0.0 });
    let mut f = glasso_objective_eig(s, &omega, lambda);
    let mut step = 1.0;
    for _ in 0..iters {
        let inv = omega.clone().try_inverse().unwrap();
        let g = s - &inv;
        let mut accepted = false;
        let mut trial_step = step * 2.0;
        for _ in 0..60 {
            let v = &omega - &g * trial_step;
            let cand = DMatrix::from_fn(q, q, |r, c| {
                let z = 0.5 * (v[(r, c)] + v[(c, r)]);
                if r == c {
                    z
                } else {
                    z.signum() * (z.abs() - trial_step * lambda).max(0.0)
                }
            });
            let fc = glasso_objective_eig(s, &cand, lambda);
            if fc <= f {
                let moved = (&cand - &omega).amax();
                omega = cand;
                f = fc;
                step = trial_step;
                accepted = true;
                if moved < 1e-15 {
                    return omega;
                }
                break;
            }
            trial_step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    omega
}

/// Tiny problem: `n = 10`, `p = 4`, `q = 2`, two groups (rows 0–1 and 2–3
/// across both responses), a fixed tridiagonal `Ω` and weights at a random
/// fraction of each group's entry threshold.
pub struct TinyProblem {
    pub x: DesignMatrix,
    pub y: ResponseMatrix,
    pub omega: PrecisionMatrix,
    pub partition: Arc<GroupPartition>,
    pub penalty: PenaltyConfig,
}

pub fn tiny_problem(seed: u64) -> TinyProblem {
    let mut r = rng(seed);
    let (n, p, q) = (10, 4, 2);
    let xv = normal_matrix(n, p, &mut r);
    let mut btrue = normal_matrix(p, q, &mut r);
    btrue.rows_mut(2, 2).fill(0.0);
    let yv = &xv * &btrue + normal_matrix(n, q, &mut r) * 0.7;
    let omega = DMatrix::from_row_slice(2, 2, &[1.5, -0.6, -0.6, 1.2]);
    let part = GroupPartition::from_assignment(p, q, vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
    // ‖∇ρ(0)_{G_j}‖ / m_j is the weight at which group j would vanish alone.
    let g0 = -(xv.transpose() * &yv * &omega) / n as f64;
    let weights: Vec<f64> = (0..2)
        .map(|j| {
            let norm = part.cells(j).iter().map(|&(i, k)| g0[(i, k)].powi(2)).sum::<f64>().sqrt();
            r.random_range(0.05..0.9) * norm / part.size(j) as f64
        })
        .collect();
    TinyProblem {
        x: DesignMatrix::new(xv).unwrap(),
        y: ResponseMatrix::new(yv).unwrap(),
        omega: PrecisionMatrix::new(omega).unwrap(),
        partition: Arc::new(part),
        penalty: PenaltyConfig::new(0.0, weights, 0.0).unwrap(),
    }
}

pub fn zeros(part: &Arc<GroupPartition>) -> GroupedCoefficients {
    GroupedCoefficients::zeros(part.clone())
}
