//! `glcov` command-line interface.
//!
//! Exit codes: 0 success, 2 input error (unreadable or malformed files, bad
//! flags), 3 numerical failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use glcov::csvio::{
    read_groups, read_matrix, write_directed_edges, write_forecast_errors, write_mafe,
    write_matrix, write_undirected_edges, Table,
};
use glcov::forecast::{
    expanding_window, export_networks, networks_from_matrices, ForecastConfig, ForecastResult,
};
use glcov::harness::{run_scenario, write_records, write_summary, write_t_test};
use glcov::simgen::{var_to_regression, Scenario};
use glcov::{
    DesignMatrix, Error, Estimator, EstimatorRegistry, FitConfig, FitReport, GridSpec, GroupPartition,
    Networks, ResponseMatrix, Result,
};

#[derive(Parser)]
#[command(name = "glcov", version, about = "Group lasso with sparse error covariance estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one estimator to a design matrix and responses.
    Fit(FitArgs),
    /// Run a Monte Carlo scenario for a set of estimators.
    Simulate(SimulateArgs),
    /// Expanding-window one-step-ahead forecast comparison of VAR(2) fits.
    Forecast(ForecastArgs),
    /// Edge lists and DOT graphs from a lagged coefficient matrix and a
    /// precision matrix.
    ExportNetwork(ExportArgs),
}

#[derive(Args, Clone)]
struct TuningArgs {
    /// Grid for λ: `auto`, `auto:N`, `auto:N:RATIO`, `max-only`, or a comma list.
    #[arg(long, default_value = "auto")]
    lambda_grid: GridSpec,
    /// Grid for the graphical-lasso penalty, same syntax as --lambda-grid.
    #[arg(long, default_value = "auto")]
    lambda_omega_grid: GridSpec,
    /// Select λ once at Ω = I and hold it through the alternation.
    #[arg(long)]
    hold_lambda: bool,
    /// Relative objective change at which the solvers stop.
    #[arg(long, default_value_t = 1e-2)]
    tolerance: f64,
}

impl TuningArgs {
    fn config(&self) -> FitConfig {
        let mut cfg = FitConfig {
            lambda_grid: self.lambda_grid.clone(),
            lambda_omega_grid: self.lambda_omega_grid.clone(),
            retune_lambda: !self.hold_lambda,
            outer_tolerance: self.tolerance,
            ..FitConfig::default()
        };
        cfg.solver.tolerance = self.tolerance;
        cfg
    }
}

#[derive(Args)]
struct FitArgs {
    /// Predictor CSV (n rows × p columns, optional header).
    #[arg(long)]
    x: PathBuf,
    /// Response CSV (n rows × q columns, optional header).
    #[arg(long)]
    y: PathBuf,
    /// `singleton`, `var-lags`, or a CSV of `row,column,group` (1-based).
    #[arg(long, default_value = "singleton")]
    groups: String,
    #[arg(long, default_value = "GroupLasso+Cov")]
    estimator: String,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Recorded in the report; fitting itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale predictor columns to unit variance before fitting.
    #[arg(long)]
    standardize: bool,
    /// Subtract response means before fitting.
    #[arg(long)]
    center_y: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated estimator names, or `all`.
    #[arg(long, default_value = "all")]
    estimators: String,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "GLCOV_THREADS")]
    threads: Option<usize>,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ForecastArgs {
    /// Series CSV (rows = time points, columns = series, optional header of
    /// names). Repeat for several samples.
    #[arg(long, required = true)]
    series: Vec<PathBuf>,
    #[arg(long, default_value_t = 13)]
    first_origin: usize,
    #[arg(long, default_value_t = 2)]
    lags: usize,
    #[arg(long, default_value = "all")]
    estimators: String,
    /// Fit the raw series instead of mean-centering each window.
    #[arg(long)]
    no_center: bool,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Lagged coefficient matrix CSV (lags·q rows × q columns).
    #[arg(long)]
    b: PathBuf,
    /// Precision matrix CSV (q × q).
    #[arg(long)]
    omega: PathBuf,
    #[arg(long, default_value_t = 2)]
    lags: usize,
    /// Comma-separated series names; defaults to `y1..yq`.
    #[arg(long)]
    names: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::ExportNetwork(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse {
            line,
            column,
            message,
        } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        Error::Io(io) => Error::InvalidInput(format!("{}: {io}", path.display())),
        other => other,
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| with_path(path, e.into()))
}

fn load_table(path: &Path) -> Result<Table> {
    read_matrix(open(path)?).map_err(|e| with_path(path, e))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| with_path(dir, e.into()))
}

fn default_names(q: usize) -> Vec<String> {
    (1..=q).map(|k| format!("y{k}")).collect()
}

fn report_json(report: &FitReport, seed: u64) -> serde_json::Value {
    json!({
        "estimator": report.kind,
        "seed": seed,
        "lambda": report.lambda,
        "lambda_omega": report.lambda_omega,
        "glasso_penalty": report.glasso_penalty,
        "lambda_grid": report.lambda_grid,
        "init_lambdas": report.init_lambdas,
        "retune_lambda": report.retune_lambda,
        "outer_iterations": report.outer_iterations,
        "converged": report.converged,
        "regression_stages_converged": report.regression_stages_converged,
        "trace": report.trace,
        "active_groups": report.coefficients.active_groups(),
        "nonzero_coefficients": report.coefficients.nonzero_count(),
        "precision_off_diagonal_nonzeros": report.precision.off_diagonal_nonzeros(),
        "group_kkt": report.group_kkt,
        "max_group_kkt": report.max_group_kkt(),
        "gradient_norm_at_zero": report.gradient_norm_at_zero,
        "glasso_kkt": report.glasso_kkt,
        "jitter": report.jitter,
    })
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let registry = EstimatorRegistry::with_defaults();
    let estimator = registry.get(&a.estimator)?;
    let xt = load_table(&a.x)?;
    let yt = load_table(&a.y)?;
    let mut x = DesignMatrix::new(xt.values)?;
    if a.standardize {
        x = x.standardized();
    }
    let mut y = ResponseMatrix::new(yt.values)?;
    if a.center_y {
        y = y.centered().0;
    }
    let (p, q) = (x.p(), y.q());
    let partition = match a.groups.as_str() {
        "singleton" => GroupPartition::singleton(p, q)?,
        "var-lags" => {
            if p % q != 0 {
                return Err(Error::InvalidInput(format!(
                    "var-lags grouping needs p ({p}) to be a multiple of q ({q})"
                )));
            }
            GroupPartition::var_lags(q, p / q)?
        }
        file => {
            let path = Path::new(file);
            read_groups(open(path)?, p, q).map_err(|e| with_path(path, e))?
        }
    };
    let report = estimator.fit(&x, &y, Arc::new(partition), &a.tuning.config())?;

    prepare_out(&a.out)?;
    write_matrix(create(&a.out, "B.csv")?, report.coefficients.values(), yt.header.as_deref())?;
    write_matrix(create(&a.out, "Omega.csv")?, report.precision.values(), yt.header.as_deref())?;
    let json = serde_json::to_string_pretty(&report_json(&report, a.seed))
        .map_err(|e| Error::NumericalFailure(format!("cannot encode report: {e}")))?;
    fs::write(a.out.join("report.json"), json + "\n")?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&a.scenario).map_err(|e| with_path(&a.scenario, e.into()))?;
    let mut scenario: Scenario = text.parse().map_err(|e| with_path(&a.scenario, e))?;
    if let Some(n) = a.replications {
        scenario.replications = n;
    }
    let estimators = EstimatorRegistry::with_defaults().resolve_list(&a.estimators)?;
    let outcome = run_scenario(&scenario, &estimators, &a.tuning.config(), a.threads)?;

    prepare_out(&a.out)?;
    write_records(create(&a.out, "results.csv")?, &outcome.records)?;
    write_summary(create(&a.out, "summary.csv")?, &outcome.summary)?;
    if let Some(t) = &outcome.t_test {
        write_t_test(create(&a.out, "ttest.csv")?, t)?;
    }
    Ok(())
}

fn write_networks(dir: &Path, prefix: &str, net: &Networks) -> Result<()> {
    write_directed_edges(create(dir, &format!("{prefix}directed_edges.csv"))?, net)?;
    write_undirected_edges(create(dir, &format!("{prefix}undirected_edges.csv"))?, net)?;
    let (directed, undirected) = net.to_dot();
    fs::write(dir.join(format!("{prefix}lagged_effects.dot")), directed)?;
    fs::write(dir.join(format!("{prefix}contemporaneous.dot")), undirected)?;
    Ok(())
}

fn sample_name(path: &Path, index: usize) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("sample{}", index + 1))
}

fn cmd_forecast(a: ForecastArgs) -> Result<()> {
    let registry = EstimatorRegistry::with_defaults();
    let estimators = registry.resolve_list(&a.estimators)?;
    let full_fit = registry.get("GroupLasso+Cov")?;
    let config = ForecastConfig {
        first_origin: a.first_origin,
        lags: a.lags,
        center: !a.no_center,
        fit: a.tuning.config(),
    };

    let mut samples = Vec::new();
    for (i, path) in a.series.iter().enumerate() {
        let table = load_table(path)?;
        let names = table.header.clone().unwrap_or_else(|| default_names(table.values.ncols()));
        let mut name = sample_name(path, i);
        while samples.iter().any(|(n, _, _): &(String, _, _)| *n == name) {
            name.push('_');
        }
        samples.push((name, table.values, names));
    }

    prepare_out(&a.out)?;
    let mut mafe_rows = Vec::new();
    let mut all_results = Vec::new();
    for (name, series, names) in &samples {
        let results = expanding_window(series, &estimators, &config)?;
        for r in &results {
            if r.failures > 0 {
                eprintln!(
                    "warning: {} on {name}: {} of {} origins failed and were excluded",
                    r.estimator,
                    r.failures,
                    r.origins.len()
                );
            }
            mafe_rows.push((name.clone(), r.clone()));
        }
        all_results.push(results);

        let report = fit_full_sample(series, &config, full_fit.as_ref())?;
        let prefix = if samples.len() == 1 { String::new() } else { format!("{name}_") };
        write_matrix(create(&a.out, &format!("{prefix}B.csv"))?, report.coefficients.values(), None)?;
        write_matrix(
            create(&a.out, &format!("{prefix}Omega.csv"))?,
            report.precision.values(),
            Some(names),
        )?;
        let net = export_networks(&report, names, config.lags)?;
        write_networks(&a.out, &prefix, &net)?;
    }
    let entries: Vec<(&str, &[String], &ForecastResult)> = samples
        .iter()
        .zip(&all_results)
        .flat_map(|((name, _, names), results)| {
            results.iter().map(move |r| (name.as_str(), names.as_slice(), r))
        })
        .collect();
    write_forecast_errors(create(&a.out, "forecast_errors.csv")?, &entries)?;

    // Per-estimator average over samples, as the last rows.
    let averages: Vec<_> = estimators
        .iter()
        .map(|est| {
            let vals: Vec<f64> = mafe_rows
                .iter()
                .filter(|(_, r)| r.estimator == est.name())
                .map(|(_, r)| r.mafe)
                .collect();
            let mut row = mafe_rows
                .iter()
                .find(|(_, r)| r.estimator == est.name())
                .expect("every estimator ran")
                .1
                .clone();
            row.mafe = vals.iter().sum::<f64>() / vals.len() as f64;
            row.origins.clear();
            ("average".to_string(), row)
        })
        .collect();
    mafe_rows.extend(averages);
    write_mafe(create(&a.out, "mafe.csv")?, &mafe_rows)?;
    Ok(())
}

fn fit_full_sample(
    series: &DMatrix<f64>,
    config: &ForecastConfig,
    estimator: &dyn Estimator,
) -> Result<FitReport> {
    let n = series.nrows() as f64;
    let means: Vec<f64> = if config.center {
        series.column_iter().map(|c| c.sum() / n).collect()
    } else {
        vec![0.0; series.ncols()]
    };
    let mut centered = series.clone();
    for (mut col, m) in centered.column_iter_mut().zip(&means) {
        col.add_scalar_mut(-m);
    }
    let (x, y, partition) = var_to_regression(&centered, config.lags)?;
    estimator.fit(&x, &y, Arc::new(partition), &config.fit)
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let b = load_table(&a.b)?;
    let omega = load_table(&a.omega)?;
    let q = b.values.ncols();
    let names = match &a.names {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => b.header.clone().or(omega.header.clone()).unwrap_or_else(|| default_names(q)),
    };
    let net = networks_from_matrices(&b.values, &omega.values, &names, a.lags)?;
    prepare_out(&a.out)?;
    write_networks(&a.out, "", &net)
}
