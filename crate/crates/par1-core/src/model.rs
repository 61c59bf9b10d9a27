//! Periodic coefficient structure of a PAR(1) model.
//!
//! A PAR(1) process follows X_k = a_k·X_{k−1} + u_k where {a_k} repeats with
//! period P. The product φ = a_1⋯a_P of one full cycle of coefficients decides
//! the regime: |φ| < 1 stable, |φ| = 1 unstable, |φ| > 1 explosive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default half-width of the band around |φ| = 1 treated as unstable.
///
/// Chosen so that coefficient families whose product is an exact decimal
/// (e.g. 0.972 or 1.0164) never flip regime due to rounding in the product.
pub const DEFAULT_REGIME_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("period must be at least 1 (got empty coefficient vector)")]
    EmptyCoeffs,
    #[error("coefficient a_{index} is not finite")]
    NonFiniteCoeff { index: usize },
    #[error("declared period {declared} does not match coefficient count {actual}")]
    PeriodMismatch { declared: usize, actual: usize },
}

/// Regime classification by |φ|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Stable,
    Unstable,
    Explosive,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Stable => write!(f, "stable"),
            Regime::Unstable => write!(f, "unstable"),
            Regime::Explosive => write!(f, "explosive"),
        }
    }
}

/// A PAR(1) coefficient sequence a_1…a_P together with derived quantities.
///
/// Coefficients are addressed with paper-style 1-based indices; any integer
/// index is reduced by periodicity (a_{P+r} = a_r). Immutable after
/// construction, so values can be shared freely across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct PARModel {
    coeffs: Vec<f64>,
    regime_epsilon: f64,
}

/// Wire format: `{"period": 6, "coeffs": [0.8, 1.2, 1, 1.5, 1.1, 0.9]}`.
#[derive(Serialize, Deserialize)]
struct RawModel {
    period: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawModel> for PARModel {
    type Error = ModelError;

    fn try_from(raw: RawModel) -> Result<Self, ModelError> {
        if raw.period != raw.coeffs.len() {
            return Err(ModelError::PeriodMismatch {
                declared: raw.period,
                actual: raw.coeffs.len(),
            });
        }
        PARModel::new(raw.coeffs)
    }
}

impl From<PARModel> for RawModel {
    fn from(model: PARModel) -> Self {
        RawModel {
            period: model.period(),
            coeffs: model.coeffs,
        }
    }
}

impl PARModel {
    /// Build a model from one cycle of coefficients a_1…a_P.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, ModelError> {
        if coeffs.is_empty() {
            return Err(ModelError::EmptyCoeffs);
        }
        if let Some(i) = coeffs.iter().position(|a| !a.is_finite()) {
            return Err(ModelError::NonFiniteCoeff { index: i + 1 });
        }
        Ok(PARModel {
            coeffs,
            regime_epsilon: DEFAULT_REGIME_EPSILON,
        })
    }

    /// Override the unstable-band half-width used by [`PARModel::regime`].
    pub fn with_regime_epsilon(mut self, epsilon: f64) -> Self {
        self.regime_epsilon = epsilon;
        self
    }

    pub fn period(&self) -> usize {
        self.coeffs.len()
    }

    /// One cycle of coefficients, a_1 first.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient a_k for any integer k, extended by periodicity.
    pub fn coeff(&self, k: i64) -> f64 {
        let p = self.coeffs.len() as i64;
        self.coeffs[(k - 1).rem_euclid(p) as usize]
    }

    /// Partial product A_s^r over the periodic coefficients.
    ///
    /// A_s^{s−1} := 1, A_s^r := a_s·a_{s+1}⋯a_r for 1 ≤ s ≤ r, and 0 in every
    /// other case. Indices beyond one period reduce via a_{P+r} = a_r.
    pub fn partial_product(&self, s: i64, r: i64) -> f64 {
        if r == s - 1 {
            1.0
        } else if 1 <= s && s <= r {
            (s..=r).fold(1.0, |acc, j| acc * self.coeff(j))
        } else {
            0.0
        }
    }

    /// φ = a_1·a_2⋯a_P, accumulated left to right.
    pub fn phi(&self) -> f64 {
        self.coeffs.iter().fold(1.0, |acc, a| acc * a)
    }

    pub fn regime(&self) -> Regime {
        let mag = self.phi().abs();
        if (mag - 1.0).abs() <= self.regime_epsilon {
            Regime::Unstable
        } else if mag < 1.0 {
            Regime::Stable
        } else {
            Regime::Explosive
        }
    }

    pub fn is_explosive(&self) -> bool {
        self.regime() == Regime::Explosive
    }
}
