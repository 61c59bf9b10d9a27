//! Explosive PAR(1) time series: simulation, least squares estimation,
//! limit-law sampling, and Monte Carlo replication.
//!
//! The crate covers the full pipeline around the periodic autoregression
//! X_k = a_k·X_{k−1} + u_k with a periodically distributed, possibly
//! m-dependent innovation:
//!
//! * [`model`] — the coefficient cycle, partial products A_s^r, φ and the
//!   stable/unstable/explosive classification,
//! * [`innovation`] — modulated moving-average innovation streams, their
//!   reversed-law companions, and the block sums U_n^(r), V_j^(r),
//! * [`simulate`] — path generation with overflow fail-fast and the
//!   decomposition X_{nP+r} = A_1^r·φ^n·(X₀+Z_{n−1}) + U_n^(r),
//! * [`estimators`] — the per-phase LSE â_r, the product estimator φ̃ and
//!   the lag-P LSE φ̂, with overflow-safe rescaled accumulation,
//! * [`limitdist`] — truncated-series samplers for ζ, ζ_r*, ζ* and the
//!   three scaled-error limit laws,
//! * [`montecarlo`] — replicated experiments, table statistics, scaled-error
//!   histograms, rate regressions and KS theory checks,
//! * [`stats`] — the fixed statistical conventions (Tukey boxplot,
//!   interpolated quantiles, two-sample KS),
//! * [`seed`] — deterministic (master, role, index) seed derivation.
//!
//! Everything is deterministic given a master seed; parallel execution never
//! changes results.

pub mod estimators;
pub mod innovation;
pub mod limitdist;
pub mod model;
pub mod montecarlo;
pub mod seed;
pub mod simulate;
pub mod stats;

pub use estimators::{
    diagnostic_sums, estimate_path, estimate_series, lag_lse_phi, lse_periodic, product_estimator,
    EstimateReport, EstimatorError,
};
pub use innovation::{
    block_u, block_v, covariance_k, generate, reversed_law_stream, BaseLaw, CovEstimate,
    InnovationError, InnovationSpec, InnovationStream,
};
pub use limitdist::{
    sample_limit_a, sample_limit_hat_phi, sample_limit_tilde_phi, sample_zeta,
    sample_zeta_star_vector, LimitError, LimitKind, LimitLawSample, X0Law,
};
pub use model::{ModelError, PARModel, Regime};
pub use montecarlo::{
    rate_regression, run_experiment, run_experiment_with_threads, scaled_error_histogram,
    theory_check, EstimatorStats, ExperimentConfig, Histogram, MCSummary, McError, RateAbscissa,
    ScaleRule, TheoryCheckReport,
};
pub use simulate::{
    decomposition_residual, simulate_path, z_partial_sums, z_sequence, zeta_qm_tail_bound, Path,
    SimulateError, ZSequence,
};
pub use stats::{
    boxplot_stats, ks_two_sample, quantile_abs, sample_kurtosis, BoxplotStats, KsResult, StatsError,
};
