//! Replicated estimation experiments and their table statistics.
//!
//! One experiment simulates `replications` independent paths, runs every
//! estimator on each, and aggregates the errors into the usual table rows
//! (mean, median, error sigma, Tukey boxplot, 95% absolute percentile)
//! plus the scaled-error samples behind the histograms. Scaled errors use
//! the regime rate: φ^{−n} when |φ| > 1, n^{−1} at |φ| = 1, n^{−1/2} when
//! |φ| < 1.
//!
//! Replications run in parallel with per-replication derived seeds and are
//! folded in replication order, so a summary is byte-identical for any
//! worker count (`PAR1_THREADS` caps the pool).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{estimate_path, EstimatorError};
use crate::innovation::generate;
use crate::innovation::InnovationSpec;
use crate::limitdist::{
    sample_limit_a, sample_limit_hat_phi, sample_limit_tilde_phi, LimitError, X0Law,
};
use crate::model::{PARModel, Regime};
use crate::seed::{derive_seed, roles};
use crate::simulate::{simulate_path, z_sequence, SimulateError};
use crate::stats::{
    boxplot_stats, ks_two_sample, mean, median, quantile_abs, sample_sd, KsResult, StatsError,
};

#[derive(Debug, Error)]
pub enum McError {
    #[error("config: {0}")]
    InvalidConfig(String),
    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),
    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
    #[error("histogram needs at least one bin")]
    ZeroBins,
    #[error("rate grid needs at least 3 distinct cycle counts, each ≥ 2")]
    DegenerateGrid,
    #[error("median error is zero on the grid; no rate to regress")]
    NotApplicable,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Scaled-error rule. `Auto` picks the regime rate from |φ|.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleRule {
    #[default]
    Auto,
    Explicit(f64),
}

fn default_x0() -> f64 {
    1.0
}

fn default_replications() -> usize {
    100
}

/// Everything one experiment needs; the JSON config file maps onto this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: PARModel,
    pub innovation: InnovationSpec,
    #[serde(default = "default_x0")]
    pub x0: f64,
    pub n_cycles: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub scale_rule: ScaleRule,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.replications < 2 {
            return Err(McError::InvalidConfig(format!(
                "replications must be at least 2 (got {})",
                self.replications
            )));
        }
        if self.n_cycles < 2 {
            return Err(McError::InvalidConfig(format!(
                "n_cycles must be at least 2 (got {})",
                self.n_cycles
            )));
        }
        if !self.x0.is_finite() {
            return Err(McError::InvalidConfig("x0 must be finite".into()));
        }
        Ok(())
    }

    /// Master seed with the documented default 0.
    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    /// Multiplier applied to raw errors, i.e. 1/scale_factor of the rate.
    pub fn scale_factor(&self) -> f64 {
        match self.scale_rule {
            ScaleRule::Explicit(s) => s,
            ScaleRule::Auto => {
                let n = self.n_cycles as f64;
                match self.model.regime() {
                    Regime::Explosive => self.model.phi().powi(-(self.n_cycles as i32)),
                    Regime::Unstable => 1.0 / n,
                    Regime::Stable => 1.0 / n.sqrt(),
                }
            }
        }
    }

    /// Estimator labels in table order: a_1…a_P, phi_hat, phi_tilde.
    pub fn estimator_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = (1..=self.model.period())
            .map(|r| format!("a_{r}"))
            .collect();
        labels.push("phi_hat".into());
        labels.push("phi_tilde".into());
        labels
    }

    fn parameters(&self) -> Vec<f64> {
        let mut params = self.model.coeffs().to_vec();
        params.push(self.model.phi());
        params.push(self.model.phi());
        params
    }
}

/// Per-estimator replication statistics, one table block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub estimator: String,
    /// True value being estimated.
    pub parameter: f64,
    pub mean: f64,
    pub median: f64,
    pub error_mean: f64,
    pub error_sigma: f64,
    pub upper_whisker: f64,
    pub upper_hinge: f64,
    pub lower_hinge: f64,
    pub lower_whisker: f64,
    /// 95% percentile of |error|.
    pub abs_p95: f64,
    pub scaled_errors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FailureBreakdown {
    pub overflow: usize,
    pub zero_denominator: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCSummary {
    pub phi: f64,
    pub regime: Regime,
    pub n_cycles: usize,
    pub replications: usize,
    pub scale_factor_used: f64,
    pub estimators: Vec<EstimatorStats>,
    /// Replications whose |X₀ + ζ̂| fell below 1e−6 (kept in the statistics).
    pub degenerate_count: usize,
    /// Replications excluded from the statistics.
    pub failure_count: usize,
    pub failures: FailureBreakdown,
}

enum RepFailure {
    Overflow,
    ZeroDenominator,
}

struct RepValues {
    estimates: Vec<f64>,
    near_degenerate: bool,
}

const NEAR_DEGENERATE_AMPLITUDE: f64 = 1e-6;

fn run_one(config: &ExperimentConfig, rep: usize) -> Result<RepValues, RepFailure> {
    let p = config.model.period();
    let seed = derive_seed(config.seed(), roles::MC_PATH, rep as u64);
    let stream =
        generate(&config.innovation, config.n_cycles * p, seed).expect("validated innovation spec");
    let path = match simulate_path(&config.model, &stream, config.x0, config.n_cycles) {
        Ok(path) => path,
        Err(SimulateError::OverflowAtStep(_)) => return Err(RepFailure::Overflow),
        Err(e) => unreachable!("stream sized for the path: {e}"),
    };
    let report = match estimate_path(&path, false) {
        Ok(report) => report,
        Err(EstimatorError::ZeroDenominator(_)) | Err(EstimatorError::ZeroDenominatorLag) => {
            return Err(RepFailure::ZeroDenominator)
        }
        Err(e) => unreachable!("path lengths are consistent: {e}"),
    };
    let near_degenerate = if config.model.is_explosive() {
        let zs = z_sequence(&config.model, &stream, config.n_cycles)
            .expect("explosive model with a sized stream");
        (config.x0 + zs.zeta_hat()).abs() < NEAR_DEGENERATE_AMPLITUDE
    } else {
        false
    };
    let mut estimates = report.a_hat;
    estimates.push(report.phi_hat);
    estimates.push(report.phi_tilde);
    Ok(RepValues {
        estimates,
        near_degenerate,
    })
}

/// Worker cap from `PAR1_THREADS`; unset or unparsable means the rayon
/// default.
pub fn thread_count_from_env() -> Option<usize> {
    std::env::var("PAR1_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run the experiment with the worker count taken from `PAR1_THREADS`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MCSummary, McError> {
    run_experiment_with_threads(config, thread_count_from_env())
}

/// Run the experiment on an explicit worker count. The summary does not
/// depend on it.
pub fn run_experiment_with_threads(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<MCSummary, McError> {
    config.validate()?;
    config
        .innovation
        .validate()
        .map_err(|e| McError::InvalidConfig(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| McError::ThreadPool(e.to_string()))?;
    let outcomes: Vec<Result<RepValues, RepFailure>> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| run_one(config, rep))
            .collect()
    });

    let mut failures = FailureBreakdown::default();
    let mut degenerate_count = 0usize;
    let mut kept: Vec<&RepValues> = Vec::with_capacity(config.replications);
    for outcome in &outcomes {
        match outcome {
            Ok(values) => {
                if values.near_degenerate {
                    degenerate_count += 1;
                }
                kept.push(values);
            }
            Err(RepFailure::Overflow) => failures.overflow += 1,
            Err(RepFailure::ZeroDenominator) => failures.zero_denominator += 1,
        }
    }
    let failure_count = failures.overflow + failures.zero_denominator;
    if kept.is_empty() {
        return Err(McError::AllReplicationsFailed(config.replications));
    }

    let labels = config.estimator_labels();
    let params = config.parameters();
    let scale = config.scale_factor();
    let mut estimators = Vec::with_capacity(labels.len());
    for (slot, (label, param)) in labels.into_iter().zip(params).enumerate() {
        let estimates: Vec<f64> = kept.iter().map(|v| v.estimates[slot]).collect();
        let errors: Vec<f64> = estimates.iter().map(|e| e - param).collect();
        let scaled_errors: Vec<f64> = errors.iter().map(|e| e / scale).collect();
        let bp = boxplot_stats(&errors)?;
        estimators.push(EstimatorStats {
            estimator: label,
            parameter: param,
            mean: mean(&estimates)?,
            median: median(&estimates)?,
            error_mean: mean(&errors)?,
            error_sigma: sample_sd(&errors)?,
            upper_whisker: bp.upper_whisker,
            upper_hinge: bp.upper_hinge,
            lower_hinge: bp.lower_hinge,
            lower_whisker: bp.lower_whisker,
            abs_p95: quantile_abs(&errors, 0.95)?,
            scaled_errors,
        });
    }
    Ok(MCSummary {
        phi: config.model.phi(),
        regime: config.model.regime(),
        n_cycles: config.n_cycles,
        replications: config.replications,
        scale_factor_used: scale,
        estimators,
        degenerate_count,
        failure_count,
        failures,
    })
}

/// Equal-width histogram of one estimator's scaled errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub estimator: String,
    /// n_bins + 1 edges over [min, max].
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn scaled_error_histogram(
    summary: &MCSummary,
    estimator: &str,
    n_bins: usize,
) -> Result<Histogram, McError> {
    if n_bins == 0 {
        return Err(McError::ZeroBins);
    }
    let stats = summary
        .estimators
        .iter()
        .find(|e| e.estimator == estimator)
        .ok_or_else(|| McError::UnknownEstimator(estimator.to_string()))?;
    let xs = &stats.scaled_errors;
    if xs.is_empty() {
        return Err(McError::Stats(StatsError::EmptySample));
    }
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in xs {
        let idx = if width == 0.0 {
            0
        } else {
            (((x - min) / width) as usize).min(n_bins - 1)
        };
        counts[idx] += 1;
    }
    let edges = (0..=n_bins).map(|i| min + width * i as f64).collect();
    Ok(Histogram {
        estimator: estimator.to_string(),
        edges,
        counts,
    })
}

/// Abscissa for the rate regression: cycles for the explosive |φ|^n rate,
/// log-cycles for polynomial rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateAbscissa {
    Cycles,
    LogCycles,
}

/// Least squares slope of log(median |â_r − a_r|) against the grid.
///
/// Each grid point reruns the experiment at that cycle count under a
/// sub-seed derived from (master, grid value).
pub fn rate_regression(
    config: &ExperimentConfig,
    n_grid: &[usize],
    phase: usize,
    abscissa: RateAbscissa,
) -> Result<f64, McError> {
    let p = config.model.period();
    if phase == 0 || phase > p {
        return Err(McError::UnknownEstimator(format!("a_{phase}")));
    }
    let mut distinct = n_grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct.iter().any(|&n| n < 2) {
        return Err(McError::DegenerateGrid);
    }
    let mut xs = Vec::with_capacity(distinct.len());
    let mut ys = Vec::with_capacity(distinct.len());
    for &n in &distinct {
        let sub = ExperimentConfig {
            n_cycles: n,
            master_seed: Some(derive_seed(config.seed(), roles::RATE_GRID, n as u64)),
            ..config.clone()
        };
        let summary = run_experiment(&sub)?;
        let stats = &summary.estimators[phase - 1];
        let abs_scaled: Vec<f64> = stats.scaled_errors.iter().map(|e| e.abs()).collect();
        let med = median(&abs_scaled)? * summary.scale_factor_used.abs();
        if med == 0.0 {
            return Err(McError::NotApplicable);
        }
        xs.push(match abscissa {
            RateAbscissa::Cycles => n as f64,
            RateAbscissa::LogCycles => (n as f64).ln(),
        });
        ys.push(med.ln());
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// One estimator's distributional comparison in a theory check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCheckEntry {
    pub estimator: String,
    pub ks: KsResult,
    pub pass: bool,
}

/// KS comparison of every estimator's scaled errors against its limit law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCheckReport {
    pub entries: Vec<TheoryCheckEntry>,
    pub all_pass: bool,
    pub replications: usize,
    pub limit_draws: usize,
}

/// Run the experiment and test each scaled-error sample against `n_draws`
/// of the matching limit law at the asymptotic 1% KS critical value.
pub fn theory_check(
    config: &ExperimentConfig,
    n_draws: usize,
    tol: f64,
) -> Result<TheoryCheckReport, McError> {
    let summary = run_experiment(config)?;
    let model = &config.model;
    let spec = &config.innovation;
    let x0_law = X0Law::Fixed(config.x0);
    let p = model.period();
    let master = config.seed();

    let mut entries = Vec::with_capacity(p + 2);
    for (slot, stats) in summary.estimators.iter().enumerate() {
        let seed = derive_seed(master, roles::THEORY, slot as u64);
        let law = if slot < p {
            sample_limit_a(model, spec, slot + 1, &x0_law, tol, n_draws, seed)?
        } else if stats.estimator == "phi_hat" {
            sample_limit_hat_phi(model, spec, &x0_law, tol, n_draws, seed)?
        } else {
            sample_limit_tilde_phi(model, spec, &x0_law, tol, n_draws, seed)?
        };
        let ks = ks_two_sample(&stats.scaled_errors, &law.values)?;
        entries.push(TheoryCheckEntry {
            estimator: stats.estimator.clone(),
            pass: ks.passes(),
            ks,
        });
    }
    Ok(TheoryCheckReport {
        all_pass: entries.iter().all(|e| e.pass),
        entries,
        replications: summary.replications,
        limit_draws: n_draws,
    })
}
