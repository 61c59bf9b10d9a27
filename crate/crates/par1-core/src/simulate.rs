//! Path generation and the explosive-trend decomposition.
//!
//! A path follows X_k = a_k·X_{k−1} + u_k. For |φ| > 1 it decomposes as
//! X_{nP+r} = A_1^r·φ^n·(X₀ + Z_{n−1}) + U_n^(r) with
//! Z_n = Σ_{l≤n} φ^{−l−1}·U_l^(P); the partial sums Z_n converge to the
//! random amplitude ζ of the explosive trend.

use thiserror::Error;

use crate::innovation::{block_u, InnovationError, InnovationStream};
use crate::model::PARModel;

#[derive(Debug, Error, PartialEq)]
pub enum SimulateError {
    #[error("stream holds {len} values but {needed} are required")]
    StreamTooShort { needed: usize, len: usize },
    #[error("path exceeded the double range at step {0}")]
    OverflowAtStep(usize),
    #[error("|phi| = {phi_abs} is not explosive; the zeta series does not contract")]
    NotExplosive { phi_abs: f64 },
    #[error("phi = 0; the decomposition weights are undefined")]
    ZeroPhi,
    #[error(transparent)]
    Innovation(#[from] InnovationError),
}

/// A realized trajectory X_0…X_{nP} together with the innovation behind it.
#[derive(Debug, Clone)]
pub struct Path {
    x: Vec<f64>,
    model: PARModel,
    stream: InnovationStream,
    x0: f64,
    n_cycles: usize,
}

impl Path {
    /// X_0…X_{nP}.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x_at(&self, k: usize) -> f64 {
        self.x[k]
    }

    pub fn model(&self) -> &PARModel {
        &self.model
    }

    pub fn stream(&self) -> &InnovationStream {
        &self.stream
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn n_cycles(&self) -> usize {
        self.n_cycles
    }
}

/// Run the forward recursion X_k = a_k·X_{k−1} + u_k for k = 1…nP.
///
/// Fails fast with the offending step index instead of propagating
/// infinities when an explosive path leaves the double range.
pub fn simulate_path(
    model: &PARModel,
    stream: &InnovationStream,
    x0: f64,
    n_cycles: usize,
) -> Result<Path, SimulateError> {
    let needed = n_cycles * model.period();
    if stream.len() < needed {
        return Err(SimulateError::StreamTooShort {
            needed,
            len: stream.len(),
        });
    }
    let mut x = Vec::with_capacity(needed + 1);
    x.push(x0);
    for k in 1..=needed {
        let next = model.coeff(k as i64) * x[k - 1] + stream.value(k);
        if !next.is_finite() {
            return Err(SimulateError::OverflowAtStep(k));
        }
        x.push(next);
    }
    Ok(Path {
        x,
        model: model.clone(),
        stream: stream.clone(),
        x0,
        n_cycles,
    })
}

/// Partial sums Z_0…Z_{n−1} of the amplitude series, plus their last value
/// as the truncated limit ζ̂.
#[derive(Debug, Clone, PartialEq)]
pub struct ZSequence {
    z: Vec<f64>,
    zeta_hat: f64,
}

impl ZSequence {
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Z_{n−1}, the deepest available partial sum.
    pub fn zeta_hat(&self) -> f64 {
        self.zeta_hat
    }

    /// Z_{n−1} with the convention Z_{−1} = 0, as the decomposition uses it.
    pub fn z_before(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.z[n - 1]
        }
    }
}

/// Z_n partial sums for an explosive model. Errors with
/// [`SimulateError::NotExplosive`] when |φ| ≤ 1.
pub fn z_sequence(
    model: &PARModel,
    stream: &InnovationStream,
    n_cycles: usize,
) -> Result<ZSequence, SimulateError> {
    let phi_abs = model.phi().abs();
    if phi_abs <= 1.0 {
        return Err(SimulateError::NotExplosive { phi_abs });
    }
    z_partial_sums(model, stream, n_cycles)
}

/// Z_n partial sums without the explosivity gate.
///
/// The decomposition X_{nP+r} = A_1^r·φ^n·(X₀+Z_{n−1}) + U_n^(r) is an
/// algebraic identity for any φ ≠ 0, so stable and unstable models are
/// accepted here; only the reading of Z_n as an approximation of ζ needs
/// |φ| > 1.
pub fn z_partial_sums(
    model: &PARModel,
    stream: &InnovationStream,
    n_cycles: usize,
) -> Result<ZSequence, SimulateError> {
    let phi = model.phi();
    if phi == 0.0 {
        return Err(SimulateError::ZeroPhi);
    }
    let inv = 1.0 / phi;
    let p = model.period();
    let mut z = Vec::with_capacity(n_cycles);
    let mut acc = 0.0;
    for l in 0..n_cycles {
        let u_l = block_u(model, stream, l, p)?;
        acc += inv.powi(l as i32 + 1) * u_l;
        z.push(acc);
    }
    Ok(ZSequence {
        zeta_hat: z.last().copied().unwrap_or(0.0),
        z,
    })
}

/// Quadratic-mean tail bound E[(Z_n − ζ)²] ≤ φ^{−2n}·K₀^(P)/(|φ|−1)².
///
/// `k0` is the block variance K₀^(P) (see [`crate::innovation::covariance_k`]).
pub fn zeta_qm_tail_bound(model: &PARModel, k0: f64, n: usize) -> Result<f64, SimulateError> {
    let phi_abs = model.phi().abs();
    if phi_abs <= 1.0 {
        return Err(SimulateError::NotExplosive { phi_abs });
    }
    Ok(phi_abs.powi(-2 * n as i32) * k0 / (phi_abs - 1.0).powi(2))
}

/// Residual of the decomposition at cycle n, phase r:
/// X_{nP+r} − [A_1^r·φ^n·(X₀ + Z_{n−1}) + U_n^(r)].
///
/// Must vanish (relative to |X_{nP+r}| + 1) on any simulated path.
pub fn decomposition_residual(path: &Path, z_seq: &ZSequence, n: usize, r: usize) -> f64 {
    let p = path.model().period();
    assert!(n < path.n_cycles(), "cycle index {n} out of range");
    assert!(r >= 1 && r <= p, "phase {r} out of range");
    let phi = path.model().phi();
    let a1r = path.model().partial_product(1, r as i64);
    let u_nr = block_u(path.model(), path.stream(), n, r).expect("path stream covers its indices");
    let closed = a1r * phi.powi(n as i32) * (path.x0() + z_seq.z_before(n)) + u_nr;
    path.x_at(n * p + r) - closed
}
