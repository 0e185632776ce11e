//! Closed-form exponent relations.
//!
//! Inputs: `q` is the concavity exponent of the spatial source (`q ≥ 1`,
//! `q = ∞` for a positive constant), `γ ∈ [0, 1/2]` the time weight `t^γ`,
//! `n` the space dimension, `m > 0` the power in `H_m`.

use alloc::format;

use crate::means::Exponent;
use crate::{Error, Result};

fn check_source(q: Exponent, gamma: f64) -> Result<()> {
    match q {
        Exponent::PosInf => {}
        Exponent::Finite(v) if v >= 1.0 && v.is_finite() => {}
        _ => return Err(Error::InvalidArgument(format!("source exponent q = {q} must be ≥ 1"))),
    }
    if !(0.0..=0.5).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("γ = {gamma} outside [0, 1/2]")));
    }
    Ok(())
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
    }
    Ok(())
}

/// `p = q / (1 + 2q + 2γq)`, or `1 / (2(1 + γ))` for `q = ∞`: the
/// parabolic concavity exponent of the solution with source `t^γ f(x)`.
pub fn solution_exponent(q: Exponent, gamma: f64) -> Result<f64> {
    check_source(q, gamma)?;
    Ok(match q {
        Exponent::Finite(q) => q / (1.0 + 2.0 * q + 2.0 * gamma * q),
        _ => 1.0 / (2.0 * (1.0 + gamma)),
    })
}

/// `r = q / ((n + 2 + γ) q + 1)`, or `1 / (n + 2 + γ)` for `q = ∞`: the
/// concavity exponent of the heat energy.
pub fn energy_exponent(q: Exponent, gamma: f64, n: usize) -> Result<f64> {
    check_source(q, gamma)?;
    check_dimension(n)?;
    let k = n as f64 + 2.0 + gamma;
    Ok(match q {
        Exponent::Finite(q) => q / (k * q + 1.0),
        _ => 1.0 / k,
    })
}

/// `(p, q) = ((1 - γ)/2, (1 - γ)/(n(1 - γ) + 2))` for `∂t u = Δu + u^γ`.
pub fn semilinear_exponents(gamma: f64, n: usize) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("γ = {gamma} outside (0, 1)")));
    }
    check_dimension(n)?;
    let a = 1.0 - gamma;
    Ok((a / 2.0, a / (n as f64 * a + 2.0)))
}

/// Parabolic p-concavity must fail for `p` above this value when the source
/// is `t^γ dist(x, ∂Ω)^{1/q}` (or `t^γ` for `q = ∞`).
pub fn sharpness_threshold(q: Exponent, gamma: f64) -> Result<f64> {
    solution_exponent(q, gamma)
}

/// `1/β = 3 - 1/p + 2γ + 1/q` for the structure function
/// `v^{3-1/p} t^{2γ} f(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureBeta {
    pub inv_beta: f64,
    /// `1/β < 1`.
    pub concavity_valid: bool,
}

impl StructureBeta {
    pub fn beta(&self) -> Exponent {
        if self.inv_beta == 0.0 {
            Exponent::PosInf
        } else {
            Exponent::Finite(1.0 / self.inv_beta)
        }
    }
}

pub fn structure_beta(p: f64, q: Exponent, gamma: f64) -> Result<StructureBeta> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0, 1)")));
    }
    let inv_q = match q {
        Exponent::PosInf => 0.0,
        Exponent::Finite(v) if v > 0.0 => 1.0 / v,
        _ => return Err(Error::InvalidArgument(format!("q = {q} must be positive"))),
    };
    let inv_beta = 3.0 - 1.0 / p + 2.0 * gamma + inv_q;
    Ok(StructureBeta {
        inv_beta,
        concavity_valid: inv_beta < 1.0,
    })
}

/// Every prediction for one set of inputs.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Predictions {
    pub q: Exponent,
    pub gamma: f64,
    pub n: usize,
    pub solution_p: f64,
    pub energy_r: f64,
    pub sharpness: f64,
    /// Energy exponent from the solution exponent through the energy relation
    /// `p / (np + 1)`.
    pub energy_from_solution: f64,
}

pub fn predict(q: Exponent, gamma: f64, n: usize) -> Result<Predictions> {
    let p = solution_exponent(q, gamma)?;
    Ok(Predictions {
        q,
        gamma,
        n,
        solution_p: p,
        energy_r: energy_exponent(q, gamma, n)?,
        sharpness: sharpness_threshold(q, gamma)?,
        energy_from_solution: p / (n as f64 * p + 1.0),
    })
}
