//! Domain types shared by every estimator.
//!
//! Matrices are stored as dense `nalgebra::DMatrix<f64>`; all types validate
//! their invariants on construction and are immutable afterwards.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetry tolerance for precision and covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

fn check_finite(values: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % values.nrows(), pos / values.nrows());
        return Err(Error::InvalidInput(format!(
            "{what} has a non-finite entry at ({}, {})",
            r + 1,
            c + 1
        )));
    }
    Ok(())
}

/// The n x p predictor matrix `X`. No intercept column is added.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(
                "design matrix needs at least one row and one column".into(),
            ));
        }
        check_finite(&values, "design matrix")?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    /// Squared Euclidean norms of the columns, `‖x_i‖²`.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        self.values
            .column_iter()
            .map(|c| c.norm_squared())
            .collect()
    }

    /// Columns centered and scaled to unit sample standard deviation.
    /// Constant columns are left centered (all zeros).
    pub fn standardized(&self) -> Self {
        let n = self.n() as f64;
        let mut values = self.values.clone();
        for mut col in values.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / n).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        Self { values }
    }
}

/// The n x q response matrix `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    values: DMatrix<f64>,
}

impl ResponseMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(
                "response matrix needs at least one row and one column".into(),
            ));
        }
        check_finite(&values, "response matrix")?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }

    /// Returns the column-centered responses and the removed means.
    pub fn centered(&self) -> (Self, Vec<f64>) {
        let n = self.n() as f64;
        let mut values = self.values.clone();
        let mut means = Vec::with_capacity(self.q());
        for mut col in values.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            means.push(mean);
        }
        (Self { values }, means)
    }
}

pub(crate) fn check_pair(x: &DesignMatrix, y: &ResponseMatrix) -> Result<()> {
    if x.n() != y.n() {
        return Err(Error::Conformance(format!(
            "X has {} rows but Y has {}",
            x.n(),
            y.n()
        )));
    }
    Ok(())
}

/// Assignment of every coefficient cell `(i, k)` of a p x q matrix to one of
/// `K` groups. Group ids are 0-based internally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    p: usize,
    q: usize,
    /// Column-major: cell `(i, k)` lives at `i + k * p`.
    assignment: Vec<usize>,
    cells: Vec<Vec<(usize, usize)>>,
}

impl GroupPartition {
    /// Builds a partition from a column-major assignment vector whose ids must
    /// cover `0..K` with no gaps.
    pub fn from_assignment(p: usize, q: usize, assignment: Vec<usize>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidInput("partition needs p, q >= 1".into()));
        }
        if assignment.len() != p * q {
            return Err(Error::Conformance(format!(
                "partition has {} cells, expected p*q = {}",
                assignment.len(),
                p * q
            )));
        }
        let n_groups = assignment.iter().max().map_or(0, |m| m + 1);
        let mut cells = vec![Vec::new(); n_groups];
        for (idx, &g) in assignment.iter().enumerate() {
            cells[g].push((idx % p, idx / p));
        }
        if let Some(empty) = cells.iter().position(|c| c.is_empty()) {
            return Err(Error::InvalidInput(format!(
                "group {} has no cells (group ids must be contiguous)",
                empty + 1
            )));
        }
        Ok(Self {
            p,
            q,
            assignment,
            cells,
        })
    }

    /// Builds a partition from `(row, column, group)` triples with arbitrary
    /// group labels. Labels are renumbered in ascending order. Every cell must
    /// be listed exactly once.
    pub fn from_triples(p: usize, q: usize, triples: &[(usize, usize, u64)]) -> Result<Self> {
        let mut labels: Vec<u64> = triples.iter().map(|t| t.2).collect();
        labels.sort_unstable();
        labels.dedup();
        let mut assignment = vec![usize::MAX; p * q];
        for &(i, k, label) in triples {
            if i >= p || k >= q {
                return Err(Error::IndexOutOfRange(format!(
                    "cell ({}, {}) outside a {p} x {q} coefficient matrix",
                    i + 1,
                    k + 1
                )));
            }
            let slot = &mut assignment[i + k * p];
            if *slot != usize::MAX {
                return Err(Error::InvalidInput(format!(
                    "cell ({}, {}) is assigned more than once",
                    i + 1,
                    k + 1
                )));
            }
            *slot = labels.binary_search(&label).expect("label present");
        }
        if let Some(idx) = assignment.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidInput(format!(
                "cell ({}, {}) is not assigned to any group",
                idx % p + 1,
                idx / p + 1
            )));
        }
        Self::from_assignment(p, q, assignment)
    }

    /// Every cell is its own group (`m_j = 1`, `K = p*q`), numbered column-major.
    pub fn singleton(p: usize, q: usize) -> Result<Self> {
        Self::from_assignment(p, q, (0..p * q).collect())
    }

    /// Lagged-regression grouping: for `q` series and `lags` lags the design
    /// has `p = lags*q` columns and group `i + q*k` holds cells
    /// `(i + l*q, k)` for every lag `l`.
    pub fn var_lags(q: usize, lags: usize) -> Result<Self> {
        if lags == 0 {
            return Err(Error::Configuration("lags must be >= 1".into()));
        }
        let p = lags * q;
        let assignment = (0..p * q)
            .map(|idx| {
                let (row, k) = (idx % p, idx / p);
                row % q + q * k
            })
            .collect();
        Self::from_assignment(p, q, assignment)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_groups(&self) -> usize {
        self.cells.len()
    }

    /// `m_j`, the number of cells in group `j`.
    pub fn size(&self, group: usize) -> usize {
        self.cells[group].len()
    }

    pub fn cells(&self, group: usize) -> &[(usize, usize)] {
        &self.cells[group]
    }

    pub fn group_of(&self, i: usize, k: usize) -> usize {
        self.assignment[i + k * self.p]
    }

    pub fn is_singleton(&self) -> bool {
        self.cells.iter().all(|c| c.len() == 1)
    }
}

/// A p x q coefficient matrix together with its group structure.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedCoefficients {
    values: DMatrix<f64>,
    partition: Arc<GroupPartition>,
}

impl GroupedCoefficients {
    pub fn new(values: DMatrix<f64>, partition: Arc<GroupPartition>) -> Result<Self> {
        if values.nrows() != partition.p() || values.ncols() != partition.q() {
            return Err(Error::Conformance(format!(
                "coefficients are {}x{} but the partition is {}x{}",
                values.nrows(),
                values.ncols(),
                partition.p(),
                partition.q()
            )));
        }
        check_finite(&values, "coefficient matrix")?;
        Ok(Self { values, partition })
    }

    pub fn zeros(partition: Arc<GroupPartition>) -> Self {
        Self {
            values: DMatrix::zeros(partition.p(), partition.q()),
            partition,
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn partition(&self) -> &Arc<GroupPartition> {
        &self.partition
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }

    /// `‖B_{G_j}‖₂`.
    pub fn group_norm(&self, group: usize) -> f64 {
        self.partition
            .cells(group)
            .iter()
            .map(|&(i, k)| self.values[(i, k)].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn group_norms(&self) -> Vec<f64> {
        (0..self.partition.n_groups())
            .map(|j| self.group_norm(j))
            .collect()
    }

    pub fn active_groups(&self) -> usize {
        (0..self.partition.n_groups())
            .filter(|&j| self.group_norm(j) > 0.0)
            .count()
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Same coefficients under a different (conformant) partition.
    pub fn with_partition(&self, partition: Arc<GroupPartition>) -> Result<Self> {
        Self::new(self.values.clone(), partition)
    }
}

/// A symmetric positive-definite q x q precision matrix `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    values: DMatrix<f64>,
    log_det: f64,
}

impl PrecisionMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return Err(Error::Conformance(format!(
                "precision matrix must be square and non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        check_finite(&values, "precision matrix")?;
        let q = values.nrows();
        for r in 0..q {
            for c in (r + 1)..q {
                let (a, b) = (values[(r, c)], values[(c, r)]);
                if (a - b).abs() > SYMMETRY_TOL * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidInput(format!(
                        "precision matrix is not symmetric at ({}, {})",
                        r + 1,
                        c + 1
                    )));
                }
            }
        }
        let log_det = cholesky_log_det(&values).ok_or_else(|| {
            Error::Definiteness("Cholesky factorization of the precision matrix failed".into())
        })?;
        Ok(Self { values, log_det })
    }

    pub fn identity(q: usize) -> Self {
        Self {
            values: DMatrix::identity(q, q),
            log_det: 0.0,
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn q(&self) -> usize {
        self.values.nrows()
    }

    /// `log|Ω|` from the Cholesky factor.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        nalgebra::Cholesky::new(self.values.clone())
            .expect("validated positive definite")
            .inverse()
    }

    /// `Σ_{k≠k'} |ω_{kk'}|`.
    pub fn off_diagonal_l1(&self) -> f64 {
        let q = self.q();
        let mut total = 0.0;
        for r in 0..q {
            for c in 0..q {
                if r != c {
                    total += self.values[(r, c)].abs();
                }
            }
        }
        total
    }

    /// Number of nonzero entries strictly above the diagonal.
    pub fn off_diagonal_nonzeros(&self) -> usize {
        let q = self.q();
        (0..q)
            .flat_map(|r| ((r + 1)..q).map(move |c| (r, c)))
            .filter(|&(r, c)| self.values[(r, c)] != 0.0)
            .count()
    }

    pub fn is_identity(&self) -> bool {
        self.values == DMatrix::identity(self.q(), self.q())
    }
}

/// `log|A|` via Cholesky; `None` when a pivot is not strictly positive.
pub fn cholesky_log_det(a: &DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(a.clone())?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for d in 0..a.nrows() {
        let pivot = l[(d, d)];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        acc += pivot.ln();
    }
    Some(2.0 * acc)
}

/// Sparsity levels for the joint objective.
///
/// `group_weights[j]` is the effective per-group level `λ_{G_j}`; the group
/// penalty is `Σ_j λ_{G_j} m_j ‖B_{G_j}‖₂`. An infinite weight pins the group
/// at zero. `lambda` records the global level the weights were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    pub lambda: f64,
    pub group_weights: Vec<f64>,
    pub lambda_omega: f64,
}

impl PenaltyConfig {
    pub fn new(lambda: f64, group_weights: Vec<f64>, lambda_omega: f64) -> Result<Self> {
        let bad = |v: f64| v.is_nan() || v < 0.0;
        if bad(lambda) || bad(lambda_omega) || group_weights.iter().any(|&w| bad(w)) {
            return Err(Error::Configuration(
                "penalty levels must be nonnegative".into(),
            ));
        }
        Ok(Self {
            lambda,
            group_weights,
            lambda_omega,
        })
    }

    /// The same weight `lambda` for every one of `n_groups` groups.
    pub fn uniform(lambda: f64, n_groups: usize, lambda_omega: f64) -> Result<Self> {
        Self::new(lambda, vec![lambda; n_groups], lambda_omega)
    }

    pub fn zero(n_groups: usize) -> Self {
        Self {
            lambda: 0.0,
            group_weights: vec![0.0; n_groups],
            lambda_omega: 0.0,
        }
    }

    pub(crate) fn check_groups(&self, partition: &GroupPartition) -> Result<()> {
        if self.group_weights.len() != partition.n_groups() {
            return Err(Error::Conformance(format!(
                "penalty has {} group weights but the partition has {} groups",
                self.group_weights.len(),
                partition.n_groups()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_lag_partition_pairs_both_lags() {
        let part = GroupPartition::var_lags(3, 2).unwrap();
        assert_eq!(part.n_groups(), 9);
        assert!((0..9).all(|j| part.size(j) == 2));
        assert_eq!(part.group_of(1, 2), part.group_of(4, 2));
        assert_ne!(part.group_of(1, 2), part.group_of(1, 1));
    }

    #[test]
    fn triples_must_cover_every_cell_once() {
        let ok = GroupPartition::from_triples(2, 1, &[(0, 0, 7), (1, 0, 3)]).unwrap();
        assert_eq!(ok.group_of(0, 0), 1);
        assert_eq!(ok.group_of(1, 0), 0);
        assert!(GroupPartition::from_triples(2, 1, &[(0, 0, 1)]).is_err());
        assert!(GroupPartition::from_triples(2, 1, &[(0, 0, 1), (0, 0, 2)]).is_err());
        assert!(GroupPartition::from_triples(2, 1, &[(0, 0, 1), (2, 0, 2)]).is_err());
    }

    #[test]
    fn gapped_assignment_rejected() {
        assert!(GroupPartition::from_assignment(1, 2, vec![0, 2]).is_err());
    }

    #[test]
    fn precision_rejects_indefinite_and_asymmetric() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            PrecisionMatrix::new(indefinite),
            Err(Error::Definiteness(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.0, 2.0]);
        assert!(PrecisionMatrix::new(asym).is_err());
    }

    #[test]
    fn log_det_matches_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let omega = PrecisionMatrix::new(m).unwrap();
        assert!((omega.log_det() - 3f64.ln()).abs() < 1e-14);
        assert_eq!(omega.off_diagonal_l1(), 2.0);
        assert_eq!(omega.off_diagonal_nonzeros(), 1);
    }

    #[test]
    fn design_rejects_nan() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(DesignMatrix::new(m).is_err());
    }

    #[test]
    fn standardized_columns_have_unit_scale() {
        let m = DMatrix::from_row_slice(4, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 6.0, 5.0]);
        let x = DesignMatrix::new(m).unwrap().standardized();
        let c0 = x.values().column(0);
        assert!(c0.sum().abs() < 1e-12);
        assert!((c0.norm_squared() / 4.0 - 1.0).abs() < 1e-12);
        assert!(x.values().column(1).iter().all(|v| *v == 0.0));
    }
}
