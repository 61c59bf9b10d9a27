//! Least squares estimators for PAR(1) coefficients.
//!
//! * â_r — per-phase slope Σ_j X_{jP+r−1}·X_{jP+r} / Σ_j X²_{jP+r−1},
//! * φ̃ — product of the â_r,
//! * φ̂ — lag-P slope Σ_k X_k·X_{k−P} / Σ_k X²_{k−P} over k = P+1…nP.
//!
//! Both ratios accumulate in a rescaled space (terms divided by the running
//! maximum magnitude), so explosive paths whose raw squares leave the double
//! range still produce correct ratios. The diagnostic sums B, C are plain
//! direct sums and are meant for n small enough to avoid overflow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::innovation::block_v;
use crate::simulate::Path;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("series of length {len} is not 1 + n·{period} with n ≥ 2")]
    BadLength { len: usize, period: usize },
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("zero denominator B_n^({0}): phase {0} has no nonzero predecessor values")]
    ZeroDenominator(usize),
    #[error("zero denominator in the lag-P regression: the path is identically zero")]
    ZeroDenominatorLag,
    #[error("innovation slice holds {got} values, the path needs {needed}")]
    InnovationLength { needed: usize, got: usize },
}

/// Denominators smaller than this (in rescaled units) are flagged rather
/// than trusted to produce a meaningful ratio.
const DEGENERATE_DENOMINATOR: f64 = 1e-300;

/// Ratio of two quadratic forms, accumulated relative to a running
/// power-of-two scale covering the largest magnitude seen so far. The scale
/// cancels in the ratio, and both the divisions by it and the occasional
/// rescaling are exact.
#[derive(Debug, Clone, Copy)]
struct RatioAccumulator {
    scale: f64,
    num: f64,
    den: f64,
}

/// Smallest power of two ≥ mag, capped at 2^1023 to stay finite.
fn pow2_cover(mag: f64) -> f64 {
    let e = mag.log2().ceil();
    if e >= 1023.0 {
        2f64.powi(1023)
    } else {
        2f64.powi(e as i32)
    }
}

impl RatioAccumulator {
    fn new() -> Self {
        RatioAccumulator {
            scale: 0.0,
            num: 0.0,
            den: 0.0,
        }
    }

    fn push(&mut self, prev: f64, next: f64) {
        let mag = prev.abs().max(next.abs());
        if mag == 0.0 {
            return;
        }
        if mag > self.scale {
            let new_scale = pow2_cover(mag);
            if new_scale > self.scale {
                if self.scale > 0.0 {
                    let shrink = self.scale / new_scale;
                    let sq = shrink * shrink;
                    self.num *= sq;
                    self.den *= sq;
                }
                self.scale = new_scale;
            }
        }
        let a = prev / self.scale;
        let b = next / self.scale;
        self.num += a * b;
        self.den += a * a;
    }

    fn ratio(&self) -> Option<f64> {
        if self.den == 0.0 {
            None
        } else {
            Some(self.num / self.den)
        }
    }

    fn is_degenerate(&self) -> bool {
        self.den > 0.0 && self.den < DEGENERATE_DENOMINATOR
    }

    /// Denominator in original units; saturates to +∞ when out of range.
    fn raw_denominator(&self) -> f64 {
        self.den * self.scale * self.scale
    }
}

fn check_series(x: &[f64], period: usize) -> Result<usize, EstimatorError> {
    if period == 0 {
        return Err(EstimatorError::ZeroPeriod);
    }
    let len = x.len();
    if len < 1 + 2 * period || !(len - 1).is_multiple_of(period) {
        return Err(EstimatorError::BadLength { len, period });
    }
    Ok((len - 1) / period)
}

/// Per-phase least squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicLse {
    pub a_hat: Vec<f64>,
    /// B_n^(r) = Σ_j X²_{jP+r−1}; +∞ when outside the double range.
    pub b_r: Vec<f64>,
    /// Phase flagged when its rescaled denominator underflows toward zero.
    pub degenerate: Vec<bool>,
}

/// â_r for r = 1…P from a series X_0…X_{nP}.
pub fn lse_periodic(x: &[f64], period: usize) -> Result<PeriodicLse, EstimatorError> {
    let n = check_series(x, period)?;
    let mut a_hat = Vec::with_capacity(period);
    let mut b_r = Vec::with_capacity(period);
    let mut degenerate = Vec::with_capacity(period);
    for r in 1..=period {
        let mut acc = RatioAccumulator::new();
        for j in 0..n {
            acc.push(x[j * period + r - 1], x[j * period + r]);
        }
        let ratio = acc.ratio().ok_or(EstimatorError::ZeroDenominator(r))?;
        a_hat.push(ratio);
        b_r.push(acc.raw_denominator());
        degenerate.push(acc.is_degenerate());
    }
    Ok(PeriodicLse {
        a_hat,
        b_r,
        degenerate,
    })
}

/// φ̃ = â_1·â_2⋯â_P.
pub fn product_estimator(a_hat: &[f64]) -> f64 {
    a_hat.iter().fold(1.0, |acc, a| acc * a)
}

/// Lag-P least squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagLse {
    pub phi_hat: f64,
    /// B_n = Σ_{k=P+1}^{nP} X²_{k−P}; +∞ when outside the double range.
    pub b_total: f64,
    pub degenerate: bool,
}

/// φ̂ from the lag-P regression over k = P+1…nP.
pub fn lag_lse_phi(x: &[f64], period: usize) -> Result<LagLse, EstimatorError> {
    let n = check_series(x, period)?;
    let mut acc = RatioAccumulator::new();
    for k in (period + 1)..=(n * period) {
        acc.push(x[k - period], x[k]);
    }
    let phi_hat = acc.ratio().ok_or(EstimatorError::ZeroDenominatorLag)?;
    Ok(LagLse {
        phi_hat,
        b_total: acc.raw_denominator(),
        degenerate: acc.is_degenerate(),
    })
}

/// Direct sums behind the estimator identities, for diagnostics and tests:
/// â_r = a_r + C_n^(r)/B_n^(r) and φ̂ = φ + C_n/B_n.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSums {
    pub b_r: Vec<f64>,
    pub c_r: Vec<f64>,
    pub b_total: f64,
    pub c_total: f64,
}

/// Exact (unscaled) B and C sums of a simulated path.
pub fn diagnostic_sums(path: &Path) -> DiagnosticSums {
    let p = path.model().period();
    let n = path.n_cycles();
    let x = path.x();
    let mut b_r = vec![0.0; p];
    let mut c_r = vec![0.0; p];
    for r in 1..=p {
        for j in 0..n {
            let prev = x[j * p + r - 1];
            b_r[r - 1] += prev * prev;
            c_r[r - 1] += prev * path.stream().value(j * p + r);
        }
    }
    let mut b_total = 0.0;
    for k in (p + 1)..=(n * p) {
        b_total += x[k - p] * x[k - p];
    }
    let mut c_total = 0.0;
    for j in 1..n {
        for r in 1..=p {
            let v =
                block_v(path.model(), path.stream(), j, r).expect("path stream covers its indices");
            c_total += x[(j - 1) * p + r] * v;
        }
    }
    DiagnosticSums {
        b_r,
        c_r,
        b_total,
        c_total,
    }
}

/// Full estimation output for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub a_hat: Vec<f64>,
    pub phi_tilde: f64,
    pub phi_hat: f64,
    pub b_r: Vec<f64>,
    /// C_n^(r) = Σ_j X_{jP+r−1}·u_{jP+r}; needs the true innovation, so it is
    /// only present on diagnostic runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_r: Option<Vec<f64>>,
    pub b_total: f64,
    pub n_cycles: usize,
    pub degenerate_flags: Vec<bool>,
}

/// Estimate from a bare series X_0…X_{nP}; pass the innovation u_1…u_{nP}
/// to fill the diagnostic C sums.
pub fn estimate_series(
    x: &[f64],
    period: usize,
    innovation: Option<&[f64]>,
) -> Result<EstimateReport, EstimatorError> {
    let n = check_series(x, period)?;
    let periodic = lse_periodic(x, period)?;
    let lag = lag_lse_phi(x, period)?;
    let c_r = match innovation {
        None => None,
        Some(u) => {
            if u.len() < n * period {
                return Err(EstimatorError::InnovationLength {
                    needed: n * period,
                    got: u.len(),
                });
            }
            let mut c = vec![0.0; period];
            for r in 1..=period {
                for j in 0..n {
                    c[r - 1] += x[j * period + r - 1] * u[j * period + r - 1];
                }
            }
            Some(c)
        }
    };
    Ok(EstimateReport {
        phi_tilde: product_estimator(&periodic.a_hat),
        phi_hat: lag.phi_hat,
        a_hat: periodic.a_hat,
        b_r: periodic.b_r,
        c_r,
        b_total: lag.b_total,
        n_cycles: n,
        degenerate_flags: periodic.degenerate,
    })
}

/// Estimate a simulated path; `diagnostics` adds the C sums from the
/// retained innovation.
pub fn estimate_path(path: &Path, diagnostics: bool) -> Result<EstimateReport, EstimatorError> {
    let u;
    let innovation = if diagnostics {
        u = path.stream().values().to_vec();
        Some(&u[..])
    } else {
        None
    };
    estimate_series(path.x(), path.model().period(), innovation)
}
