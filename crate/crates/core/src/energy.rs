//! Heat energy `H_m(t) = (∫_Ω u(x, t)^m dx)^{1/m}` and its power concavity
//! in time.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::concavity::{build_report, ConcavityReport, Triple, LAMBDA_SWEEP};
use crate::domain::SpaceGrid;
use crate::means::{mean2, Exponent};
use crate::solver::SpaceTimeField;
use crate::{Error, Result};

/// Snapshot pairs examined by the curve checks, at most.
const MAX_PAIRS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub m: f64,
    pub quadrature: String,
}

/// Quadrature weight per node. In 1D the exact integral of the piecewise
/// linear hat over `Ω`; in 2D `h²` for interior nodes whose stencil stays
/// inside and `h²/2` for interior nodes next to the boundary.
pub fn quadrature_weights(grid: &SpaceGrid) -> Vec<f64> {
    let h = grid.spacing();
    let (lo, hi) = grid.domain().bounding_box();
    (0..grid.len())
        .map(|n| {
            if !grid.is_interior(n) {
                return 0.0;
            }
            if grid.dim() == 1 {
                let x = grid.coords()[n][0];
                let hat = |a: f64, b: f64| -> f64 {
                    // ∫_a^b (1 - |y - x|/h) dy for [a, b] ⊂ [x - h, x + h]
                    let prim = |y: f64| {
                        let s = y - x;
                        s - s * s.abs() / (2.0 * h)
                    };
                    prim(b) - prim(a)
                };
                hat((x - h).max(lo[0]), (x + h).min(hi[0]))
            } else {
                let full = grid.neighbours(n).filter(|&m| grid.is_interior(m)).count() == 4;
                if full {
                    h * h
                } else {
                    0.5 * h * h
                }
            }
        })
        .collect()
}

/// `H_m` at every stored time.
pub fn heat_energy(u: &SpaceTimeField, m: f64) -> Result<EnergyCurve> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("energy power m = {m} must be positive")));
    }
    let w = quadrature_weights(u.grid());
    let values = (0..u.times().len())
        .map(|k| {
            let s: f64 = u.slice(k).iter().zip(&w).map(|(v, w)| w * v.powf(m)).sum();
            if m == 1.0 {
                s
            } else {
                s.powf(1.0 / m)
            }
        })
        .collect();
    Ok(EnergyCurve {
        times: u.times().to_vec(),
        values,
        m,
        quadrature: if u.grid().dim() == 1 {
            "trapezoid"
        } else {
            "masked-cell"
        }
        .to_string(),
    })
}

/// `q = p/(np + m)`, with `1/n` for `p = +∞` and `-∞` for `p = -m/n`.
pub fn energy_concavity_exponent(p: Exponent, n: usize, m: f64) -> Result<Exponent> {
    if n == 0 || !(m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need n ≥ 1 and m > 0, got n = {n}, m = {m}"
        )));
    }
    let nf = n as f64;
    match p {
        Exponent::PosInf => Ok(Exponent::Finite(1.0 / nf)),
        Exponent::NegInf => Err(Error::InvalidArgument("p = -∞ is below -m/n".to_string())),
        Exponent::Finite(p) => {
            let edge = -m / nf;
            if (p - edge).abs() <= 1e-12 * edge.abs() {
                Ok(Exponent::NegInf)
            } else if p > edge {
                Ok(Exponent::Finite(p / (nf * p + m)))
            } else {
                Err(Error::InvalidArgument(format!("p = {p} is below -m/n = {edge}")))
            }
        }
    }
}

/// Index triples `(i, k, j)` with `i < k < j` over stored times in the
/// window, spread evenly; the middle time is a stored time so no
/// interpolation enters the test.
fn curve_triples(times: &[f64], keys: &[f64], t_min: f64) -> Vec<(usize, usize, usize)> {
    let idx: Vec<usize> = (0..times.len())
        .filter(|&k| times[k] >= t_min * (1.0 - 1e-12))
        .collect();
    if idx.len() < 3 {
        return Vec::new();
    }
    // ~20 anchors give 190 pairs
    let anchors: Vec<usize> = if idx.len() <= 20 {
        idx.clone()
    } else {
        (0..20).map(|a| idx[a * (idx.len() - 1) / 19]).collect()
    };
    let mut out = Vec::new();
    for (a, &i) in anchors.iter().enumerate() {
        for &j in &anchors[a + 1..] {
            if j <= i + 1 || out.len() >= MAX_PAIRS * LAMBDA_SWEEP.len() {
                continue;
            }
            for l in LAMBDA_SWEEP {
                let target = (1.0 - l) * keys[i] + l * keys[j];
                let k = (i + 1..j)
                    .min_by(|&a, &b| (keys[a] - target).abs().total_cmp(&(keys[b] - target).abs()))
                    .expect("j > i + 1");
                out.push((i, k, j));
            }
        }
    }
    out.dedup();
    out
}

fn curve_check(
    c: &EnergyCurve,
    keys: &[f64],
    alpha: Option<f64>,
    q: Exponent,
    t_min: f64,
    tolerance: Option<f64>,
) -> Result<ConcavityReport> {
    if c.times.len() != c.values.len() {
        return Err(Error::DimensionMismatch {
            expected: c.times.len(),
            got: c.values.len(),
        });
    }
    let triples = curve_triples(&c.times, keys, t_min);
    let max_h = c.values.iter().copied().fold(0.0, f64::max);
    let mut records = Vec::with_capacity(triples.len());
    let mut defects = Vec::with_capacity(triples.len());
    for (i, k, j) in triples {
        if !(c.values[i] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "curve vanishes at t = {} ≥ t_min",
                c.times[i]
            )));
        }
        let l = (keys[k] - keys[i]) / (keys[j] - keys[i]);
        defects.push(mean2(c.values[i], c.values[j], l, q) - c.values[k]);
        records.push(Triple::new_curve(c.times[i], c.times[j], l));
    }
    build_report(&records, &defects, tolerance.unwrap_or(1e-8 * max_h), 0, q, alpha)
}

/// Midpoint test of q-concavity of `t ↦ H(t)` on `[t_min, T]`. The default
/// tolerance is `1e-8 · max H`.
pub fn check_curve_concavity(
    c: &EnergyCurve,
    q: Exponent,
    t_min: f64,
    tolerance: Option<f64>,
) -> Result<ConcavityReport> {
    curve_check(c, &c.times, None, q, t_min, tolerance)
}

/// Midpoint test of q-concavity of `τ ↦ H(τ^{1/α})`: the curve sampled at
/// the stored times, with the middle point's weight computed in `τ = t^α`.
pub fn check_time_reparametrized(
    c: &EnergyCurve,
    alpha: f64,
    q: Exponent,
    t_min: f64,
    tolerance: Option<f64>,
) -> Result<ConcavityReport> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must be a positive real")));
    }
    let keys: Vec<f64> = c.times.iter().map(|t| t.powf(alpha)).collect();
    curve_check(c, &keys, Some(alpha), q, t_min, tolerance)
}
