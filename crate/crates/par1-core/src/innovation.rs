//! Periodically distributed innovation streams.
//!
//! The generator follows the construction u_k = cos(2πk/M)·v_k with
//! v_k = (m+1)^{−1/2}·(ε_k + … + ε_{k+m}) for iid centered ε. With m = 0 the
//! u_k are independent; with m ≥ 1 they are (m+something)-dependent, hence
//! strongly mixing. The default modulation period M = 6 gives cos(πk/3).
//!
//! Also provides the reversed-law companion stream u* (equal in law to a
//! forward block read backwards), and the stationary block sums U_n^(r) and
//! V_j^(r) that drive the decomposition and the lag-P regression.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PARModel;
use crate::seed::{derive_seed, rng_from, roles};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

#[derive(Debug, Error, PartialEq)]
pub enum InnovationError {
    #[error("gaussian sd must be positive and finite (got {sd})")]
    NonPositiveSd { sd: f64 },
    #[error("uniform range requires finite lo < hi (got [{lo}, {hi}])")]
    EmptyRange { lo: f64, hi: f64 },
    #[error("modulation period must be at least 1")]
    ZeroModulationPeriod,
    #[error("a stream must hold at least one value")]
    EmptyStream,
    #[error("stream of length {len} too short: value u_{needed} required")]
    IndexOutOfRange { needed: usize, len: usize },
    #[error("phase r = {r} outside 0..={period}")]
    PhaseOutOfRange { r: usize, period: usize },
    #[error("block index j must be at least 1")]
    BlockIndexZero,
    #[error("covariance estimation needs at least 2 replicates (got {0})")]
    TooFewSamples(usize),
}

/// Distribution of the iid driving noise ε_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseLaw {
    Gaussian {
        sd: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Point mass at 0; turns every stream into the zero sequence.
    /// Useful for exact-recovery and degenerate-path diagnostics.
    Zero,
}

impl BaseLaw {
    /// Standard deviation of ε.
    pub fn sd(&self) -> f64 {
        match *self {
            BaseLaw::Gaussian { sd } => sd,
            BaseLaw::Uniform { lo, hi } => (hi - lo) / 12f64.sqrt(),
            BaseLaw::Zero => 0.0,
        }
    }
}

/// Recipe for an innovation stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInnovation", into = "RawInnovation")]
pub struct InnovationSpec {
    pub law: BaseLaw,
    /// Moving-average window minus one; m = 0 means v_k = ε_k.
    pub m: usize,
    pub modulated: bool,
    /// Period of the cosine modulation cos(2πk/M).
    pub modulation_period: usize,
    /// Opaque tag mixed into every derived seed; distinguishes logical
    /// innovation sources that share identical parameters.
    pub seed_label: u64,
}

/// Wire format, e.g. `{"law":"gaussian","sd":1.0,"m":0,"modulated":true}`
/// or `{"law":"uniform","lo":-1000,"hi":1000,"m":2000,"modulated":true}`.
#[derive(Serialize, Deserialize)]
struct RawInnovation {
    law: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(default)]
    m: usize,
    #[serde(default = "default_true")]
    modulated: bool,
    #[serde(default = "default_modulation_period")]
    modulation_period: usize,
    #[serde(default)]
    seed_label: u64,
}

fn default_true() -> bool {
    true
}

fn default_modulation_period() -> usize {
    6
}

impl TryFrom<RawInnovation> for InnovationSpec {
    type Error = String;

    fn try_from(raw: RawInnovation) -> Result<Self, String> {
        let law = match raw.law.as_str() {
            "gaussian" => BaseLaw::Gaussian {
                sd: raw.sd.ok_or("gaussian law requires field `sd`")?,
            },
            "uniform" => BaseLaw::Uniform {
                lo: raw.lo.ok_or("uniform law requires field `lo`")?,
                hi: raw.hi.ok_or("uniform law requires field `hi`")?,
            },
            "zero" => BaseLaw::Zero,
            other => {
                return Err(format!(
                    "unknown law `{other}` (expected gaussian|uniform|zero)"
                ))
            }
        };
        let spec = InnovationSpec {
            law,
            m: raw.m,
            modulated: raw.modulated,
            modulation_period: raw.modulation_period,
            seed_label: raw.seed_label,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl From<InnovationSpec> for RawInnovation {
    fn from(spec: InnovationSpec) -> Self {
        let (law, sd, lo, hi) = match spec.law {
            BaseLaw::Gaussian { sd } => ("gaussian", Some(sd), None, None),
            BaseLaw::Uniform { lo, hi } => ("uniform", None, Some(lo), Some(hi)),
            BaseLaw::Zero => ("zero", None, None, None),
        };
        RawInnovation {
            law: law.to_string(),
            sd,
            lo,
            hi,
            m: spec.m,
            modulated: spec.modulated,
            modulation_period: spec.modulation_period,
            seed_label: spec.seed_label,
        }
    }
}

impl InnovationSpec {
    /// Gaussian ε with the paper's default modulation (period 6, m as given).
    pub fn gaussian(sd: f64, m: usize) -> Result<Self, InnovationError> {
        let spec = InnovationSpec {
            law: BaseLaw::Gaussian { sd },
            m,
            modulated: true,
            modulation_period: 6,
            seed_label: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(lo: f64, hi: f64, m: usize) -> Result<Self, InnovationError> {
        let spec = InnovationSpec {
            law: BaseLaw::Uniform { lo, hi },
            m,
            modulated: true,
            modulation_period: 6,
            seed_label: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The zero innovation; every generated stream is identically 0.
    pub fn zero() -> Self {
        InnovationSpec {
            law: BaseLaw::Zero,
            m: 0,
            modulated: false,
            modulation_period: 6,
            seed_label: 0,
        }
    }

    pub fn with_modulation(mut self, modulated: bool) -> Self {
        self.modulated = modulated;
        self
    }

    pub fn with_seed_label(mut self, label: u64) -> Self {
        self.seed_label = label;
        self
    }

    pub fn validate(&self) -> Result<(), InnovationError> {
        match self.law {
            BaseLaw::Gaussian { sd } => {
                if !(sd > 0.0 && sd.is_finite()) {
                    return Err(InnovationError::NonPositiveSd { sd });
                }
            }
            BaseLaw::Uniform { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(InnovationError::EmptyRange { lo, hi });
                }
            }
            BaseLaw::Zero => {}
        }
        if self.modulation_period == 0 {
            return Err(InnovationError::ZeroModulationPeriod);
        }
        Ok(())
    }

    /// Period of the distribution of {u_k}: the modulation period when
    /// modulation is on, 1 (stationary) otherwise.
    pub fn distribution_period(&self) -> usize {
        if self.modulated {
            self.modulation_period
        } else {
            1
        }
    }

    /// Modulation factor cos(2πk/M) applied to v_k, or 1 when unmodulated.
    pub fn modulation_factor(&self, k: usize) -> f64 {
        if self.modulated {
            modulation_table(self.modulation_period)[k % self.modulation_period]
        } else {
            1.0
        }
    }

    /// sd of ε (equals the sd of v_k for every m).
    pub fn sigma_eps(&self) -> f64 {
        self.law.sd()
    }

    /// Upper bound on the per-phase sd of u_k (|cos| ≤ 1).
    pub fn sigma_max(&self) -> f64 {
        self.sigma_eps()
    }

    /// sd of u_k at unit index k.
    pub fn phase_sd(&self, k: usize) -> f64 {
        self.modulation_factor(k).abs() * self.sigma_eps()
    }
}

fn modulation_table(period: usize) -> Vec<f64> {
    (0..period)
        .map(|p| (std::f64::consts::TAU * p as f64 / period as f64).cos())
        .collect()
}

/// A realized innovation block.
///
/// Forward streams hold u_1…u_N (`value(k)` uses the 1-based paper index).
/// Streams returned by [`reversed_law_stream`] hold u*_0…u*_{N−1} in
/// `values()[0..N]`, which is the indexing the limit-series formulas use.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationStream {
    values: Vec<f64>,
    spec: InnovationSpec,
}

impl InnovationStream {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// u_k by 1-based index.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> &InnovationSpec {
        &self.spec
    }

    /// Build a stream from explicit values (test fixtures).
    #[cfg(test)]
    pub(crate) fn from_values(spec: InnovationSpec, values: Vec<f64>) -> Self {
        InnovationStream { values, spec }
    }
}

fn draw_eps(spec: &InnovationSpec, count: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    match spec.law {
        BaseLaw::Gaussian { sd } => (0..count)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        BaseLaw::Uniform { lo, hi } => {
            let dist = Uniform::new(lo, hi).expect("validated range");
            (0..count).map(|_| dist.sample(rng)).collect()
        }
        BaseLaw::Zero => vec![0.0; count],
    }
}

fn generate_with_role(
    spec: &InnovationSpec,
    n_values: usize,
    seed: u64,
    role: u64,
) -> Result<InnovationStream, InnovationError> {
    if n_values == 0 {
        return Err(InnovationError::EmptyStream);
    }
    spec.validate()?;
    let mut rng = rng_from(derive_seed(seed, role, spec.seed_label));
    let eps = draw_eps(spec, n_values + spec.m, &mut rng);

    // v_k = (m+1)^{-1/2} (ε_k + … + ε_{k+m}) via prefix sums
    let mut prefix = Vec::with_capacity(eps.len() + 1);
    prefix.push(0.0);
    for (i, e) in eps.iter().enumerate() {
        prefix.push(prefix[i] + e);
    }
    let norm = 1.0 / ((spec.m + 1) as f64).sqrt();

    let table = if spec.modulated {
        Some(modulation_table(spec.modulation_period))
    } else {
        None
    };
    let values = (1..=n_values)
        .map(|k| {
            let v = norm * (prefix[k + spec.m] - prefix[k - 1]);
            match &table {
                Some(t) => t[k % spec.modulation_period] * v,
                None => v,
            }
        })
        .collect();
    Ok(InnovationStream {
        values,
        spec: spec.clone(),
    })
}

/// Generate u_1…u_N. Bit-reproducible for fixed (spec, N, seed).
pub fn generate(
    spec: &InnovationSpec,
    n_values: usize,
    seed: u64,
) -> Result<InnovationStream, InnovationError> {
    generate_with_role(spec, n_values, seed, roles::GEN_FORWARD)
}

/// Generate a stream u*_0…u*_{N−1} with the law of (u_N, …, u_1).
///
/// Internally runs a fresh forward pass of length N+1 on a seed domain
/// disjoint from [`generate`]'s and returns the first N values reversed, so
/// the output is independent of any forward stream and carries exactly the
/// reversed law. For the phase alignment u*_i ~ u_{−i mod M} expected by the
/// limit-series formulas, request N as a multiple of the distribution period.
pub fn reversed_law_stream(
    spec: &InnovationSpec,
    n_values: usize,
    seed: u64,
) -> Result<InnovationStream, InnovationError> {
    let forward = generate_with_role(spec, n_values + 1, seed, roles::GEN_REVERSED)?;
    let mut values = forward.values[..n_values].to_vec();
    values.reverse();
    Ok(InnovationStream {
        values,
        spec: spec.clone(),
    })
}

/// Weighted block sum U_n^(r) = Σ_{s=1}^{r} A_{s+1}^r · u_{nP+s}, with
/// U_n^(0) := 0.
pub fn block_u(
    model: &PARModel,
    stream: &InnovationStream,
    n: usize,
    r: usize,
) -> Result<f64, InnovationError> {
    let p = model.period();
    if r > p {
        return Err(InnovationError::PhaseOutOfRange { r, period: p });
    }
    if r == 0 {
        return Ok(0.0);
    }
    let needed = n * p + r;
    if needed > stream.len() {
        return Err(InnovationError::IndexOutOfRange {
            needed,
            len: stream.len(),
        });
    }
    let mut sum = 0.0;
    let mut weight = 1.0; // A_{s+1}^r, starting at A_{r+1}^r = 1
    for s in (1..=r).rev() {
        sum += weight * stream.value(n * p + s);
        weight *= model.coeff(s as i64);
    }
    Ok(sum)
}

/// Lag-P block sum V_j^(r) = Σ_{k=0}^{P−1} A_{r−k+1}^r · u_{jP+r−k}, j ≥ 1.
///
/// On any simulated path it satisfies X_{jP+r} = φ·X_{(j−1)P+r} + V_j^(r).
pub fn block_v(
    model: &PARModel,
    stream: &InnovationStream,
    j: usize,
    r: usize,
) -> Result<f64, InnovationError> {
    let p = model.period();
    if r == 0 || r > p {
        return Err(InnovationError::PhaseOutOfRange { r, period: p });
    }
    if j == 0 {
        return Err(InnovationError::BlockIndexZero);
    }
    let needed = j * p + r;
    if needed > stream.len() {
        return Err(InnovationError::IndexOutOfRange {
            needed,
            len: stream.len(),
        });
    }
    let mut sum = 0.0;
    let mut weight = 1.0; // A_{r-k+1}^r, starting at A_{r+1}^r = 1
    for k in 0..p {
        sum += weight * stream.value(j * p + r - k);
        weight *= model.coeff(r as i64 - k as i64);
    }
    Ok(sum)
}

/// Monte Carlo estimate of K_n^(r) = Cov[U_l^(r), U_{l+n}^(r)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Estimate K_n^(r) from `n_mc` independent streams, each contributing the
/// block pair (U_0^(r), U_n^(r)). The standard error comes from the spread of
/// the centered cross products.
pub fn covariance_k(
    model: &PARModel,
    spec: &InnovationSpec,
    n: usize,
    r: usize,
    n_mc: usize,
    seed: u64,
) -> Result<CovEstimate, InnovationError> {
    if n_mc < 2 {
        return Err(InnovationError::TooFewSamples(n_mc));
    }
    let p = model.period();
    if r > p {
        return Err(InnovationError::PhaseOutOfRange { r, period: p });
    }
    if r == 0 {
        return Ok(CovEstimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let len = n * p + r;
    let mut first = Vec::with_capacity(n_mc);
    let mut second = Vec::with_capacity(n_mc);
    for i in 0..n_mc {
        let stream = generate(spec, len, derive_seed(seed, roles::COV, i as u64))?;
        first.push(block_u(model, &stream, 0, r)?);
        second.push(block_u(model, &stream, n, r)?);
    }
    let mean_a = first.iter().sum::<f64>() / n_mc as f64;
    let mean_b = second.iter().sum::<f64>() / n_mc as f64;
    let products: Vec<f64> = first
        .iter()
        .zip(&second)
        .map(|(a, b)| (a - mean_a) * (b - mean_b))
        .collect();
    let value = products.iter().sum::<f64>() / (n_mc - 1) as f64;
    let pm = products.iter().sum::<f64>() / n_mc as f64;
    let pvar = products.iter().map(|x| (x - pm) * (x - pm)).sum::<f64>() / (n_mc - 1) as f64;
    Ok(CovEstimate {
        value,
        std_error: (pvar / n_mc as f64).sqrt(),
    })
}
