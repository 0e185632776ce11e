//! Randomized quasi-Monte Carlo points: the additive R_d sequence with a
//! seeded Cranley–Patterson shift.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Uniform `[0, 1)` from 53 random bits.
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points `frac(s + k·a)` in `[0, 1)^d`, where `a_i = φ_d^{-i}` and `φ_d`
/// is the positive root of `x^{d+1} = x + 1`.
pub(crate) struct Rd {
    step: Vec<f64>,
    state: Vec<f64>,
}

impl Rd {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut phi: f64 = 2.0;
        for _ in 0..60 {
            let f = phi.powi(dim as i32 + 1) - phi - 1.0;
            let df = (dim as f64 + 1.0) * phi.powi(dim as i32) - 1.0;
            phi -= f / df;
        }
        let step = (1..=dim).map(|i| phi.powi(-(i as i32)).fract()).collect();
        let mut r = rng(seed);
        let state = (0..dim).map(|_| unit_f64(&mut r)).collect();
        Rd { step, state }
    }

    pub fn next_into(&mut self, out: &mut [f64]) {
        for ((s, a), o) in self.state.iter_mut().zip(&self.step).zip(out.iter_mut()) {
            *o = *s;
            *s += a;
            if *s >= 1.0 {
                *s -= 1.0;
            }
        }
    }
}
