//! Samplers for the limiting random variables of the explosive regime.
//!
//! All three limit laws are ratios built from two independent ingredients:
//! the trend amplitude X₀ + ζ with ζ = Σ_{l≥0} φ^{−l−1}·U_l^(P), and series in
//! a reversed-law stream u*:
//!
//! * per-phase scaled error of â_r:  (φ²−1)·ζ_r* / (A_1^{r−1}·(X₀+ζ))
//!   with ζ_r* = Σ_{j≥1} φ^{−j}·u*_{jP−r},
//! * scaled error of φ̃:  (φ²−1)/(X₀+ζ) · Σ_r A_{r+1}^P·ζ_r*,
//! * scaled error of φ̂:  (φ²−1)·ζ* / (Σ_r (A_{r+1}^P)^{−2}·(X₀+ζ))
//!   with ζ* = Σ_r Σ_k (A_{r+1}^P)^{−1}·A_{r−k+1}^r·Σ_{j≥1} φ^{−j}·u*_{jP−r+k},
//!   the A-products read over the cyclically extended coefficients (the
//!   weights the lag-P blocks V_j^(r) carry).
//!
//! Each series is truncated at a depth L whose geometric tail is below the
//! requested tolerance. ζ-streams and u*-streams live in disjoint seed
//! domains, which realizes the required independence between (X₀, ζ) and the
//! starred variables.

use thiserror::Error;

use crate::innovation::{
    generate, reversed_law_stream, InnovationError, InnovationSpec, InnovationStream,
};
use crate::model::PARModel;
use crate::seed::{derive_seed, rng_from, roles};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Error, PartialEq)]
pub enum LimitError {
    #[error("|phi| = {phi_abs} is not explosive")]
    NotExplosive { phi_abs: f64 },
    #[error("tolerance must be positive and finite (got {0})")]
    BadTolerance(f64),
    #[error("phase r = {r} outside 1..={period}")]
    PhaseOutOfRange { r: usize, period: usize },
    #[error("need at least one draw")]
    ZeroDraws,
    #[error("draw {draw}: denominator stayed zero after {attempts} redraws")]
    DegenerateDenominator { draw: usize, attempts: usize },
    #[error(transparent)]
    Innovation(#[from] InnovationError),
}

/// Law of the initial value X₀ used inside the limit ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum X0Law {
    Fixed(f64),
    Gaussian { mean: f64, sd: f64 },
}

impl X0Law {
    fn draw(&self, seed: u64) -> f64 {
        match *self {
            X0Law::Fixed(v) => v,
            X0Law::Gaussian { mean, sd } => {
                let mut rng = rng_from(seed);
                mean + sd * rng.sample::<f64, _>(StandardNormal)
            }
        }
    }
}

/// Which limit law a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// Scaled-error law of â_r for the given phase (1-based).
    ScaledErrorA(usize),
    TildePhi,
    HatPhi,
}

/// A batch of iid draws from one limit law.
#[derive(Debug, Clone)]
pub struct LimitLawSample {
    pub kind: LimitKind,
    pub values: Vec<f64>,
    /// Truncation depth L shared by every series in the ratio.
    pub truncation_depth: usize,
    /// Geometric tail bound at depth L; at most the requested tolerance.
    pub tail_bound: f64,
    /// Draws rejected because the denominator evaluated to exactly 0
    /// (an almost-surely-null event; expected to stay 0).
    pub rejection_count: usize,
}

const MAX_REDRAWS: usize = 64;

fn require_explosive(model: &PARModel) -> Result<f64, LimitError> {
    let phi_abs = model.phi().abs();
    if phi_abs <= 1.0 {
        return Err(LimitError::NotExplosive { phi_abs });
    }
    Ok(phi_abs)
}

fn check_tol(tol: f64) -> Result<(), LimitError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(LimitError::BadTolerance(tol));
    }
    Ok(())
}

/// Depth L with |φ|^{−L}·scale/(|φ|−1) ≤ tol, and the bound it achieves.
fn depth_for_scale(phi_abs: f64, scale: f64, tol: f64) -> (usize, f64) {
    if scale <= 0.0 {
        return (1, 0.0);
    }
    let raw = (scale / ((phi_abs - 1.0) * tol)).ln() / phi_abs.ln();
    let depth = raw.ceil().max(1.0) as usize;
    let tail = phi_abs.powi(-(depth as i32)) * scale / (phi_abs - 1.0);
    (depth, tail)
}

/// Triangle-inequality scale of one series term, per kind.
fn zeta_term_scale(model: &PARModel, spec: &InnovationSpec) -> f64 {
    let p = model.period() as i64;
    let sigma = spec.sigma_max();
    (1..=p)
        .map(|s| model.partial_product(s + 1, p).abs() * sigma)
        .sum()
}

fn star_vector_term_scale(spec: &InnovationSpec) -> f64 {
    spec.sigma_max()
}

fn tilde_term_scale(model: &PARModel, spec: &InnovationSpec) -> f64 {
    let p = model.period() as i64;
    let sigma = spec.sigma_max();
    (1..=p)
        .map(|r| model.partial_product(r + 1, p).abs() * sigma)
        .sum()
}

fn hat_term_scale(model: &PARModel, spec: &InnovationSpec) -> f64 {
    let p = model.period() as i64;
    let sigma = spec.sigma_max();
    let mut total = 0.0;
    for r in 1..=p {
        let c = 1.0 / model.partial_product(r + 1, p);
        // cyclic A_{r-k+1}^r, the weights V_j^(r) actually carries
        let mut weight = 1.0;
        for k in 0..p {
            total += (c * weight).abs() * sigma;
            weight *= model.coeff(r - k);
        }
    }
    total
}

/// Reversed-stream length covering indices 0..=max_index, rounded up so the
/// distribution period divides it (keeps u*_i on the phase −i mod M).
fn reversed_len(spec: &InnovationSpec, max_index: usize) -> usize {
    let period = spec.distribution_period();
    (max_index + 1).div_ceil(period) * period
}

/// ζ truncated at depth L, evaluated on a forward stream of length ≥ L·P.
pub(crate) fn zeta_from_stream(
    model: &PARModel,
    stream: &InnovationStream,
    depth: usize,
) -> Result<f64, InnovationError> {
    let p = model.period();
    let inv = 1.0 / model.phi();
    let mut acc = 0.0;
    for l in 0..depth {
        acc += inv.powi(l as i32 + 1) * crate::innovation::block_u(model, stream, l, p)?;
    }
    Ok(acc)
}

/// ζ_r* = Σ_{j=1}^{L} φ^{−j}·u*_{jP−r} on a reversed-law stream.
pub(crate) fn zeta_star_from_stream(
    model: &PARModel,
    stream: &InnovationStream,
    depth: usize,
    r: usize,
) -> f64 {
    let p = model.period();
    let inv = 1.0 / model.phi();
    let values = stream.values();
    let mut acc = 0.0;
    let mut w = 1.0;
    for j in 1..=depth {
        w *= inv;
        acc += w * values[j * p - r];
    }
    acc
}

/// ζ* = Σ_r Σ_k (A_{r+1}^P)^{−1}·A_{r−k+1}^r·Σ_{j=1}^{L} φ^{−j}·u*_{jP−r+k},
/// with A_{r−k+1}^r read cyclically — the same weights the lag-P block
/// V_j^(r) carries, which the series is the reversed-law limit of.
pub(crate) fn zeta_hat_star_from_stream(
    model: &PARModel,
    stream: &InnovationStream,
    depth: usize,
) -> f64 {
    let p = model.period();
    let inv = 1.0 / model.phi();
    let values = stream.values();
    let mut powers = Vec::with_capacity(depth + 1);
    let mut w = 1.0;
    for _ in 0..depth {
        w *= inv;
        powers.push(w);
    }
    let mut total = 0.0;
    for r in 1..=p {
        let c = 1.0 / model.partial_product(r as i64 + 1, p as i64);
        let mut weight = 1.0; // cyclic A_{r-k+1}^r, starting at A_{r+1}^r = 1
        for k in 0..p {
            let mut series = 0.0;
            for j in 1..=depth {
                series += powers[j - 1] * values[j * p - r + k];
            }
            total += c * weight * series;
            weight *= model.coeff(r as i64 - k as i64);
        }
    }
    total
}

/// Pack a (draw, redraw-attempt) pair into one stream index.
fn attempt_index(draw: usize, attempt: usize) -> u64 {
    (draw as u64) | ((attempt as u64) << 40)
}

/// Draws of ζ by truncated series, one independent stream per draw.
pub fn sample_zeta(
    model: &PARModel,
    spec: &InnovationSpec,
    tol: f64,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<f64>, LimitError> {
    let phi_abs = require_explosive(model)?;
    check_tol(tol)?;
    if n_draws == 0 {
        return Err(LimitError::ZeroDraws);
    }
    let (depth, _) = depth_for_scale(phi_abs, zeta_term_scale(model, spec), tol);
    let p = model.period();
    let mut out = Vec::with_capacity(n_draws);
    for i in 0..n_draws {
        let stream = generate(spec, depth * p, derive_seed(seed, roles::ZETA, i as u64))?;
        out.push(zeta_from_stream(model, &stream, depth)?);
    }
    Ok(out)
}

/// Draws of the vector (ζ_1*, …, ζ_P*), one reversed-law stream per row.
pub fn sample_zeta_star_vector(
    model: &PARModel,
    spec: &InnovationSpec,
    tol: f64,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, LimitError> {
    let phi_abs = require_explosive(model)?;
    check_tol(tol)?;
    if n_draws == 0 {
        return Err(LimitError::ZeroDraws);
    }
    let (depth, _) = depth_for_scale(phi_abs, star_vector_term_scale(spec), tol);
    let p = model.period();
    let len = reversed_len(spec, depth * p - 1);
    let mut out = Vec::with_capacity(n_draws);
    for i in 0..n_draws {
        let stream = reversed_law_stream(spec, len, derive_seed(seed, roles::ZETA_STAR, i as u64))?;
        out.push(
            (1..=p)
                .map(|r| zeta_star_from_stream(model, &stream, depth, r))
                .collect(),
        );
    }
    Ok(out)
}

fn sample_ratio_law(
    model: &PARModel,
    spec: &InnovationSpec,
    kind: LimitKind,
    x0_law: &X0Law,
    tol: f64,
    n_draws: usize,
    seed: u64,
) -> Result<LimitLawSample, LimitError> {
    let phi_abs = require_explosive(model)?;
    check_tol(tol)?;
    if n_draws == 0 {
        return Err(LimitError::ZeroDraws);
    }
    let p = model.period();
    let phi = model.phi();

    let star_scale = match kind {
        LimitKind::ScaledErrorA(_) => star_vector_term_scale(spec),
        LimitKind::TildePhi => tilde_term_scale(model, spec),
        LimitKind::HatPhi => hat_term_scale(model, spec),
    };
    let (d1, t1) = depth_for_scale(phi_abs, zeta_term_scale(model, spec), tol);
    let (d2, t2) = depth_for_scale(phi_abs, star_scale, tol);
    let depth = d1.max(d2);
    let tail_bound = t1.max(t2);

    // stream lengths: forward needs depth·P, reversed needs the deepest index used
    let max_star_index = match kind {
        LimitKind::ScaledErrorA(_) | LimitKind::TildePhi => depth * p - 1,
        LimitKind::HatPhi => depth * p + p - 2,
    };
    let rev_len = reversed_len(spec, max_star_index);

    // denominator structure
    let denom_factor = match kind {
        LimitKind::ScaledErrorA(r) => model.partial_product(1, r as i64 - 1),
        LimitKind::TildePhi => 1.0,
        LimitKind::HatPhi => (1..=p as i64)
            .map(|r| model.partial_product(r + 1, p as i64).powi(-2))
            .sum(),
    };
    let tilde_weights: Vec<f64> = (1..=p as i64)
        .map(|r| model.partial_product(r + 1, p as i64))
        .collect();

    let mut values = Vec::with_capacity(n_draws);
    let mut rejection_count = 0usize;
    for i in 0..n_draws {
        let mut attempt = 0usize;
        loop {
            let idx = attempt_index(i, attempt);
            let forward = generate(spec, depth * p, derive_seed(seed, roles::ZETA, idx))?;
            let zeta = zeta_from_stream(model, &forward, depth)?;
            let x0 = x0_law.draw(derive_seed(seed, roles::X0, idx));
            let denom = denom_factor * (x0 + zeta);
            if denom == 0.0 {
                rejection_count += 1;
                attempt += 1;
                if attempt > MAX_REDRAWS {
                    return Err(LimitError::DegenerateDenominator {
                        draw: i,
                        attempts: attempt,
                    });
                }
                continue;
            }
            let reversed =
                reversed_law_stream(spec, rev_len, derive_seed(seed, roles::ZETA_STAR, idx))?;
            let num = match kind {
                LimitKind::ScaledErrorA(r) => zeta_star_from_stream(model, &reversed, depth, r),
                LimitKind::TildePhi => (1..=p)
                    .map(|r| {
                        tilde_weights[r - 1] * zeta_star_from_stream(model, &reversed, depth, r)
                    })
                    .sum(),
                LimitKind::HatPhi => zeta_hat_star_from_stream(model, &reversed, depth),
            };
            values.push((phi * phi - 1.0) * num / denom);
            break;
        }
    }
    Ok(LimitLawSample {
        kind,
        values,
        truncation_depth: depth,
        tail_bound,
        rejection_count,
    })
}

/// Limit law of the scaled error φ^n·(â_r − a_r).
pub fn sample_limit_a(
    model: &PARModel,
    spec: &InnovationSpec,
    r: usize,
    x0_law: &X0Law,
    tol: f64,
    n_draws: usize,
    seed: u64,
) -> Result<LimitLawSample, LimitError> {
    let p = model.period();
    if r == 0 || r > p {
        return Err(LimitError::PhaseOutOfRange { r, period: p });
    }
    sample_ratio_law(
        model,
        spec,
        LimitKind::ScaledErrorA(r),
        x0_law,
        tol,
        n_draws,
        seed,
    )
}

/// Limit law of the scaled error φ^n·(φ̃ − φ) (Delta-method form).
pub fn sample_limit_tilde_phi(
    model: &PARModel,
    spec: &InnovationSpec,
    x0_law: &X0Law,
    tol: f64,
    n_draws: usize,
    seed: u64,
) -> Result<LimitLawSample, LimitError> {
    sample_ratio_law(model, spec, LimitKind::TildePhi, x0_law, tol, n_draws, seed)
}

/// Limit law of the scaled error φ^n·(φ̂ − φ).
pub fn sample_limit_hat_phi(
    model: &PARModel,
    spec: &InnovationSpec,
    x0_law: &X0Law,
    tol: f64,
    n_draws: usize,
    seed: u64,
) -> Result<LimitLawSample, LimitError> {
    sample_ratio_law(model, spec, LimitKind::HatPhi, x0_law, tol, n_draws, seed)
}
