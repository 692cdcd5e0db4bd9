use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Estimation accuracy and support recovery of one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// Mean absolute estimation error over all cells.
    pub maee: f64,
    /// Share of truly nonzero cells estimated nonzero.
    pub tpr: f64,
    /// Share of truly zero cells estimated zero.
    pub tnr: f64,
}

pub fn metrics(b_hat: &DMatrix<f64>, b_true: &DMatrix<f64>) -> Result<Metrics> {
    if b_hat.shape() != b_true.shape() {
        return Err(Error::Conformance(format!(
            "estimate is {:?} but truth is {:?}",
            b_hat.shape(),
            b_true.shape()
        )));
    }
    let cells = b_true.len() as f64;
    let maee = b_hat
        .iter()
        .zip(b_true.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / cells;
    let (mut pos, mut tp, mut neg, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (a, b) in b_hat.iter().zip(b_true.iter()) {
        if *b != 0.0 {
            pos += 1;
            tp += usize::from(*a != 0.0);
        } else {
            neg += 1;
            tn += usize::from(*a == 0.0);
        }
    }
    if pos == 0 {
        return Err(Error::InvalidInput(
            "true positive rate undefined: truth has no nonzero cells".into(),
        ));
    }
    if neg == 0 {
        return Err(Error::InvalidInput(
            "true negative rate undefined: truth has no zero cells".into(),
        ));
    }
    Ok(Metrics {
        maee,
        tpr: tp as f64 / pos as f64,
        tnr: tn as f64 / neg as f64,
    })
}

/// Component-wise mean over runs.
pub fn aggregate(runs: &[Metrics]) -> Option<Metrics> {
    if runs.is_empty() {
        return None;
    }
    let n = runs.len() as f64;
    Some(Metrics {
        maee: runs.iter().map(|m| m.maee).sum::<f64>() / n,
        tpr: runs.iter().map(|m| m.tpr).sum::<f64>() / n,
        tnr: runs.iter().map(|m| m.tnr).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub pairs: usize,
    /// Mean of `a − b`.
    pub mean_difference: f64,
    pub t_statistic: f64,
    /// Two-sided.
    pub p_value: f64,
}

/// Paired t-test of `mean(a − b) = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput(
            "paired t-test needs two equally long samples of size >= 2".into(),
        ));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let (t, p) = if se > 0.0 {
        let t = mean / se;
        let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("df >= 1");
        (t, 2.0 * dist.cdf(-t.abs()))
    } else if mean == 0.0 {
        (0.0, 1.0)
    } else {
        (mean.signum() * f64::INFINITY, 0.0)
    };
    Ok(PairedTTest {
        pairs: a.len(),
        mean_difference: mean,
        t_statistic: t,
        p_value: p,
    })
}
