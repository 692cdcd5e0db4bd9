//! Tuning-parameter grids.

use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 20;
pub const DEFAULT_GRID_RATIO: f64 = 1e-3;

/// `points` log-spaced values from `max` down to `ratio * max`, descending.
/// A zero (or non-positive) anchor yields the single point `[max(anchor, 0)]`.
pub fn log_grid(max: f64, points: usize, ratio: f64) -> Vec<f64> {
    if !(max > 0.0) || points <= 1 {
        return vec![max.max(0.0)];
    }
    let (hi, lo) = (max.ln(), (max * ratio).ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                max
            } else {
                (hi + (lo - hi) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// How a tuning grid is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Log-spaced from the data-driven maximum.
    Auto { points: usize, ratio: f64 },
    /// Only the data-driven maximum (full shrinkage).
    MaxOnly,
    /// Fixed values; sorted descending before use.
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            points: DEFAULT_GRID_POINTS,
            ratio: DEFAULT_GRID_RATIO,
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, max: f64) -> Vec<f64> {
        match self {
            GridSpec::Auto { points, ratio } => log_grid(max, *points, *ratio),
            GridSpec::MaxOnly => vec![max.max(0.0)],
            GridSpec::Explicit(values) => {
                let mut v = values.clone();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            }
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// Accepts `auto`, `auto:N`, `auto:N:RATIO`, `max-only`, or a
    /// comma-separated list of nonnegative numbers.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: String| Error::Configuration(format!("grid spec {s:?}: {msg}"));
        if s == "max-only" {
            return Ok(GridSpec::MaxOnly);
        }
        if let Some(rest) = s.strip_prefix("auto") {
            let mut parts = rest.split(':').skip(1);
            let points = match parts.next() {
                Some(v) => v.parse().map_err(|e| bad(format!("{e}")))?,
                None => DEFAULT_GRID_POINTS,
            };
            let ratio = match parts.next() {
                Some(v) => v.parse().map_err(|e| bad(format!("{e}")))?,
                None => DEFAULT_GRID_RATIO,
            };
            if points == 0 || !(ratio > 0.0 && ratio <= 1.0) {
                return Err(bad("need points >= 1 and 0 < ratio <= 1".into()));
            }
            return Ok(GridSpec::Auto { points, ratio });
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| bad(format!("{e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(bad("values must be finite and nonnegative".into()));
        }
        Ok(GridSpec::Explicit(values))
    }
}
