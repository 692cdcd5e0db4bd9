//! Expanding-window one-step-ahead evaluation of VAR fits and export of the
//! fitted lagged-effect and contemporaneous-interaction networks.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, RowDVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{FitConfig, FitReport};
use crate::registry::Estimator;
use crate::simgen::var_to_regression;

pub const DEFAULT_FIRST_ORIGIN: usize = 13;
pub const DEFAULT_LAGS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastConfig {
    /// First forecast origin `t` (1-based); the fit uses rows `1..=t`.
    pub first_origin: usize,
    pub lags: usize,
    /// Subtract the in-window column means before fitting and add them back
    /// to the forecast (the VAR has no intercept).
    pub center: bool,
    pub fit: FitConfig,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            first_origin: DEFAULT_FIRST_ORIGIN,
            lags: DEFAULT_LAGS,
            center: true,
            fit: FitConfig::default(),
        }
    }
}

impl ForecastConfig {
    fn validate(&self, t: usize) -> Result<()> {
        if self.lags == 0 || self.first_origin <= self.lags {
            return Err(Error::Configuration(format!(
                "first origin {} must exceed the lag order {} (>= 1)",
                self.first_origin, self.lags
            )));
        }
        if t < self.first_origin + 1 {
            return Err(Error::InvalidInput(format!(
                "series of length {t} is too short for first origin {}",
                self.first_origin
            )));
        }
        Ok(())
    }
}

/// Forecast outcome at one origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginForecast {
    /// 1-based origin `t`; the forecast targets row `t + 1`.
    pub origin: usize,
    /// `|y_{t+1,k} − ŷ_{t+1,k}|` per response; `None` when the fit failed.
    pub abs_errors: Option<Vec<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastResult {
    pub estimator: String,
    /// Mean absolute forecast error over successful origins and all
    /// responses; NaN if every origin failed.
    pub mafe: f64,
    pub origins: Vec<OriginForecast>,
    pub failures: usize,
}

/// One-step forecast from the last `lags` rows of `window`, using the lagged
/// regression layout `B[i + l·q, k]` for lag `l + 1`.
pub fn one_step_forecast(
    window: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lags: usize,
    means: &[f64],
) -> Result<RowDVector<f64>> {
    let (t, q) = window.shape();
    if b.shape() != (lags * q, q) || means.len() != q || t < lags {
        return Err(Error::Conformance(format!(
            "cannot forecast a {t}x{q} window with a {}x{} coefficient matrix and {lags} lags",
            b.nrows(),
            b.ncols()
        )));
    }
    let x = RowDVector::from_fn(lags * q, |_, c| {
        let (l, i) = (c / q, c % q);
        window[(t - 1 - l, i)] - means[i]
    });
    let centered = x * b;
    Ok(RowDVector::from_fn(q, |_, k| centered[k] + means[k]))
}

fn column_means(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows() as f64;
    m.column_iter().map(|c| c.sum() / n).collect()
}

/// Fits `estimator` to rows `1..=t` and forecasts row `t + 1`.
fn forecast_origin(
    series: &DMatrix<f64>,
    t: usize,
    estimator: &dyn Estimator,
    config: &ForecastConfig,
) -> Result<Vec<f64>> {
    let window = series.rows(0, t).into_owned();
    let means = if config.center {
        column_means(&window)
    } else {
        vec![0.0; series.ncols()]
    };
    let mut centered = window.clone();
    for (mut col, m) in centered.column_iter_mut().zip(&means) {
        col.add_scalar_mut(-m);
    }
    let (x, y, partition) = var_to_regression(&centered, config.lags)?;
    let report = estimator.fit(&x, &y, Arc::new(partition), &config.fit)?;
    let prediction = one_step_forecast(&window, report.coefficients.values(), config.lags, &means)?;
    Ok((0..series.ncols())
        .map(|k| (series[(t, k)] - prediction[k]).abs())
        .collect())
}

/// Runs every origin `t = first_origin..=T−1` for each estimator. Origins
/// run concurrently; results come back in origin order.
pub fn expanding_window(
    series: &DMatrix<f64>,
    estimators: &[Arc<dyn Estimator>],
    config: &ForecastConfig,
) -> Result<Vec<ForecastResult>> {
    let (t_len, q) = series.shape();
    config.validate(t_len)?;
    if q == 0 {
        return Err(Error::InvalidInput("series has no columns".into()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series contains non-finite values".into()));
    }
    let origins: Vec<usize> = (config.first_origin..t_len).collect();
    Ok(estimators
        .iter()
        .map(|est| {
            let per_origin: Vec<OriginForecast> = origins
                .par_iter()
                .map(|&t| match forecast_origin(series, t, est.as_ref(), config) {
                    Ok(errors) => OriginForecast {
                        origin: t,
                        abs_errors: Some(errors),
                        failure: None,
                    },
                    Err(e) => OriginForecast {
                        origin: t,
                        abs_errors: None,
                        failure: Some(e.to_string()),
                    },
                })
                .collect();
            let ok: Vec<&Vec<f64>> = per_origin.iter().filter_map(|o| o.abs_errors.as_ref()).collect();
            let mafe = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|e| e.iter().sum::<f64>()).sum::<f64>() / (ok.len() * q) as f64
            };
            ForecastResult {
                estimator: est.name().to_string(),
                mafe,
                failures: per_origin.len() - ok.len(),
                origins: per_origin,
            }
        })
        .collect())
}

/// Edge lists derived from a VAR fit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Networks {
    pub names: Vec<String>,
    /// `(from, to)` index pairs: series `from` has a nonzero lagged
    /// coefficient in the equation of series `to`.
    pub directed: Vec<(usize, usize)>,
    /// `(k, k')` with `k < k'` and `ω̂_{kk'} ≠ 0`.
    pub undirected: Vec<(usize, usize)>,
}

pub fn export_networks(fit: &FitReport, names: &[String], lags: usize) -> Result<Networks> {
    networks_from_matrices(fit.coefficients.values(), fit.precision.values(), names, lags)
}

/// Directed edge `i → k` when any lag coefficient of series `i` in equation
/// `k` is nonzero; undirected edge `k — k'` (`k < k'`) when `ω_{kk'} ≠ 0`.
pub fn networks_from_matrices(
    b: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    names: &[String],
    lags: usize,
) -> Result<Networks> {
    let q = b.ncols();
    if names.len() != q {
        return Err(Error::InvalidInput(format!(
            "{} names given for {q} series",
            names.len()
        )));
    }
    if lags == 0 || b.nrows() != lags * q {
        return Err(Error::Conformance(format!(
            "a {}x{q} coefficient matrix is not a {lags}-lag VAR fit",
            b.nrows()
        )));
    }
    if omega.shape() != (q, q) {
        return Err(Error::Conformance(format!(
            "precision matrix is {}x{} but there are {q} series",
            omega.nrows(),
            omega.ncols()
        )));
    }
    let mut directed = Vec::new();
    for from in 0..q {
        for to in 0..q {
            if (0..lags).any(|l| b[(from + l * q, to)] != 0.0) {
                directed.push((from, to));
            }
        }
    }
    let mut undirected = Vec::new();
    for k in 0..q {
        for k2 in k + 1..q {
            if omega[(k, k2)] != 0.0 || omega[(k2, k)] != 0.0 {
                undirected.push((k, k2));
            }
        }
    }
    Ok(Networks {
        names: names.to_vec(),
        directed,
        undirected,
    })
}

impl Networks {
    /// Graphviz text with one directed graph for lagged effects and one
    /// undirected graph for contemporaneous interactions.
    pub fn to_dot(&self) -> (String, String) {
        let quote = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
        let mut directed = String::from("digraph lagged_effects {\n");
        let mut undirected = String::from("graph contemporaneous {\n");
        for name in &self.names {
            let _ = writeln!(directed, "  {};", quote(name));
            let _ = writeln!(undirected, "  {};", quote(name));
        }
        for &(a, b) in &self.directed {
            let _ = writeln!(directed, "  {} -> {};", quote(&self.names[a]), quote(&self.names[b]));
        }
        for &(a, b) in &self.undirected {
            let _ = writeln!(undirected, "  {} -- {};", quote(&self.names[a]), quote(&self.names[b]));
        }
        directed.push_str("}\n");
        undirected.push_str("}\n");
        (directed, undirected)
    }
}
