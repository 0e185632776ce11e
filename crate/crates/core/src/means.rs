//! Weighted power means.
//!
//! For `a ∈ [0, ∞)^m`, weights `λ` on the open simplex and `p ∈ [-∞, +∞]`,
//!
//! ```text
//! M_p(a; λ) = (Σ λ_i a_i^p)^(1/p)    p ∉ {-∞, 0, +∞}
//!           = Π a_i^λ_i              p = 0
//!           = max a_i / min a_i      p = +∞ / -∞
//! ```
//!
//! with `M_p = 0` whenever `p < 0` and some `a_i = 0`.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Below this magnitude a finite exponent is evaluated as the geometric mean.
const GEOMETRIC_CUTOFF: f64 = 1e-8;
const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// An exponent on the extended real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Exponent {
    pub const ZERO: Exponent = Exponent::Finite(0.0);
    pub const ONE: Exponent = Exponent::Finite(1.0);

    /// Maps `±f64::INFINITY` to the symbolic variants.
    pub fn new(value: f64) -> Self {
        if value == f64::INFINITY {
            Exponent::PosInf
        } else if value == f64::NEG_INFINITY {
            Exponent::NegInf
        } else {
            Exponent::Finite(value)
        }
    }

    /// The exponent as an `f64`, with the symbolic values mapped to `±∞`.
    pub fn value(self) -> f64 {
        match self {
            Exponent::NegInf => f64::NEG_INFINITY,
            Exponent::Finite(v) => v,
            Exponent::PosInf => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Exponent::Finite(_))
    }
}

impl From<f64> for Exponent {
    fn from(value: f64) -> Self {
        Exponent::new(value)
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::NegInf => f.write_str("-inf"),
            Exponent::PosInf => f.write_str("inf"),
            Exponent::Finite(v) => write!(f, "{v}"),
        }
    }
}

#[cfg(feature = "serde")]
mod serde_impl {
    use super::Exponent;
    use serde::de::{self, Visitor};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    impl Serialize for Exponent {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            match self {
                Exponent::Finite(v) => s.serialize_f64(*v),
                Exponent::PosInf => s.serialize_str("inf"),
                Exponent::NegInf => s.serialize_str("-inf"),
            }
        }
    }

    struct ExponentVisitor;

    impl Visitor<'_> for ExponentVisitor {
        type Value = Exponent;

        fn expecting(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exponent, E> {
            Ok(Exponent::new(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exponent, E> {
            Ok(Exponent::Finite(v as f64))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exponent, E> {
            Ok(Exponent::Finite(v as f64))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Exponent, E> {
            match v.trim() {
                "inf" | "+inf" | "infinity" | "+infinity" => Ok(Exponent::PosInf),
                "-inf" | "-infinity" => Ok(Exponent::NegInf),
                other => other
                    .parse::<f64>()
                    .map(Exponent::new)
                    .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    impl<'de> Deserialize<'de> for Exponent {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Exponent, D::Error> {
            d.deserialize_any(ExponentVisitor)
        }
    }
}

/// A point of the open simplex `Λ_m`, `m ≥ 2`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Validates and renormalizes. Each weight must lie in `(0, 1)` and the
    /// sum must be within `1e-12` of one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidWeights(format!(
                "need at least two weights, got {}",
                weights.len()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && **w < 1.0)) {
            return Err(Error::InvalidWeights(format!("weight {i} = {w} is not in (0, 1)")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(Weights(weights.into_iter().map(|w| w / sum).collect()))
    }

    /// `(1 - λ, λ)`.
    pub fn pair(lambda: f64) -> Result<Self> {
        Self::new(alloc::vec![1.0 - lambda, lambda])
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Weights::new(value)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

/// The λ-weighted p-mean of `a`.
pub fn p_mean(a: &[f64], weights: &Weights, p: Exponent) -> Result<f64> {
    if a.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: a.len(),
        });
    }
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeInput { index, value });
    }
    Ok(mean_unchecked(a, weights.as_slice(), p))
}

/// `(M_p at p = 1e6, M_p at p = -1e6)`, approximating `(max a, min a)`.
pub fn p_mean_limit_check(a: &[f64], weights: &Weights) -> Result<(f64, f64)> {
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NegativeInput { index, value });
    }
    Ok((
        p_mean(a, weights, Exponent::Finite(1e6))?,
        p_mean(a, weights, Exponent::Finite(-1e6))?,
    ))
}

/// Two-point mean `M_p(a, b; λ)` with weights `(1 - λ, λ)`.
///
/// No validation: callers guarantee `a, b ≥ 0` and `λ ∈ (0, 1)`.
#[inline]
pub fn mean2(a: f64, b: f64, lambda: f64, p: Exponent) -> f64 {
    mean_unchecked(&[a, b], &[1.0 - lambda, lambda], p)
}

pub(crate) fn mean_unchecked(a: &[f64], w: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::PosInf => a.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Exponent::NegInf => a.iter().copied().fold(f64::INFINITY, f64::min),
        Exponent::Finite(p) => finite_mean(a, w, p),
    }
}

fn finite_mean(a: &[f64], w: &[f64], p: f64) -> f64 {
    let has_zero = a.contains(&0.0);
    if has_zero && p <= 0.0 {
        return 0.0;
    }
    if p.abs() < GEOMETRIC_CUTOFF {
        let log_mean: f64 = a.iter().zip(w).map(|(&x, &l)| l * x.ln()).sum();
        return log_mean.exp();
    }
    // Factor out the dominant entry (max for p > 0, min for p < 0) so that
    // every term p·ln(a_i / a_ref) is ≤ 0 and the sum cannot cancel:
    // M = a_ref · (1 + Σ λ_i expm1(p ln(a_i / a_ref)))^{1/p}.
    let reference = if p > 0.0 {
        a.iter().copied().fold(0.0, f64::max)
    } else {
        a.iter().copied().fold(f64::INFINITY, f64::min)
    };
    if reference == 0.0 {
        return 0.0;
    }
    let shifted: f64 = a
        .iter()
        .zip(w)
        .map(|(&x, &l)| {
            if x == 0.0 {
                -l
            } else {
                l * (p * (x / reference).ln()).exp_m1()
            }
        })
        .sum();
    reference * (shifted.max(-1.0).ln_1p() / p).exp()
}
