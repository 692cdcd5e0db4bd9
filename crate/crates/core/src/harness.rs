//! Monte Carlo driver: every replication of a scenario is fitted by each
//! selected estimator on a worker pool, and results are gathered in a fixed
//! order so the thread count never changes the output.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::csvio::fmt_f64;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorKind, FitConfig};
use crate::registry::Estimator;
use crate::simgen::{aggregate, metrics, paired_t_test, Metrics, PairedTTest, Scenario};

/// One (estimator, replication) result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub estimator: String,
    pub replication: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub estimator: String,
    pub runs: usize,
    pub mean: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationOutcome {
    /// Sorted by estimator (selection order), then replication.
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// Paired test of MAEE(GroupLasso) − MAEE(GroupLasso+Cov), when both ran
    /// and there are at least two replications.
    pub t_test: Option<PairedTTest>,
}

impl SimulationOutcome {
    pub fn maee(&self, estimator: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.estimator == estimator)
            .map(|r| r.metrics.maee)
            .collect()
    }

    pub fn summary_for(&self, estimator: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.estimator == estimator)
    }
}

/// Runs `scenario.replications` replications. `threads = None` uses rayon's
/// default pool size.
pub fn run_scenario(
    scenario: &Scenario,
    estimators: &[Arc<dyn Estimator>],
    config: &FitConfig,
    threads: Option<usize>,
) -> Result<SimulationOutcome> {
    scenario.validate()?;
    if estimators.is_empty() {
        return Err(Error::Configuration("no estimators selected".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Configuration("thread count must be >= 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Configuration(format!("cannot build worker pool: {e}")))?;

    let per_replication: Vec<Vec<Metrics>> = pool.install(|| {
        (0..scenario.replications as u64)
            .into_par_iter()
            .map(|r| {
                let rep = scenario.replicate(r)?;
                estimators
                    .iter()
                    .map(|est| {
                        let report = est
                            .fit(&rep.x, &rep.y, rep.partition.clone(), config)
                            .map_err(|e| annotate(e, est.name(), r))?;
                        metrics(report.coefficients.values(), rep.truth.coefficients.values())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut records = Vec::with_capacity(per_replication.len() * estimators.len());
    for (e, est) in estimators.iter().enumerate() {
        for (r, row) in per_replication.iter().enumerate() {
            records.push(RunRecord {
                scenario: scenario.name.clone(),
                estimator: est.name().to_string(),
                replication: r as u64,
                metrics: row[e],
            });
        }
    }
    let summary = estimators
        .iter()
        .enumerate()
        .map(|(e, est)| {
            let runs: Vec<Metrics> = per_replication.iter().map(|row| row[e]).collect();
            SummaryRow {
                scenario: scenario.name.clone(),
                estimator: est.name().to_string(),
                runs: runs.len(),
                mean: aggregate(&runs).expect("at least one replication"),
            }
        })
        .collect();

    let mut outcome = SimulationOutcome {
        records,
        summary,
        t_test: None,
    };
    let gl = outcome.maee(EstimatorKind::GroupLasso.name());
    let glc = outcome.maee(EstimatorKind::GroupLassoCov.name());
    if !gl.is_empty() && !glc.is_empty() && gl.len() >= 2 {
        outcome.t_test = Some(paired_t_test(&gl, &glc)?);
    }
    Ok(outcome)
}

fn annotate(e: Error, estimator: &str, replication: u64) -> Error {
    let ctx = |m: String| format!("{estimator}, replication {replication}: {m}");
    match e {
        Error::NumericalFailure(m) => Error::NumericalFailure(ctx(m)),
        Error::Definiteness(m) => Error::Definiteness(ctx(m)),
        other => other,
    }
}

/// `scenario,estimator,replication,MAEE,TPR,TNR`.
pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "estimator", "replication", "MAEE", "TPR", "TNR"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.scenario.clone(),
            r.estimator.clone(),
            r.replication.to_string(),
            fmt_f64(r.metrics.maee),
            fmt_f64(r.metrics.tpr),
            fmt_f64(r.metrics.tnr),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `scenario,estimator,runs,MAEE,TPR,TNR` with per-estimator means.
pub fn write_summary<W: Write>(out: W, summary: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "estimator", "runs", "MAEE", "TPR", "TNR"])
        .map_err(csv_err)?;
    for s in summary {
        w.write_record([
            s.scenario.clone(),
            s.estimator.clone(),
            s.runs.to_string(),
            fmt_f64(s.mean.maee),
            fmt_f64(s.mean.tpr),
            fmt_f64(s.mean.tnr),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `pairs,mean_difference,t_statistic,p_value` for the paired MAEE test.
pub fn write_t_test<W: Write>(out: W, t: &PairedTTest) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["comparison", "pairs", "mean_difference", "t_statistic", "p_value"])
        .map_err(csv_err)?;
    w.write_record([
        format!(
            "{} - {}",
            EstimatorKind::GroupLasso.name(),
            EstimatorKind::GroupLassoCov.name()
        ),
        t.pairs.to_string(),
        fmt_f64(t.mean_difference),
        fmt_f64(t.t_statistic),
        fmt_f64(t.p_value),
    ])
    .map_err(csv_err)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("{other:?}")),
    }
}
