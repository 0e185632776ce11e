//! Banded symmetric positive definite factorization.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Lower-banded symmetric matrix; `band[i * (bw + 1) + (bw - (i - j))]` holds
/// entry `(i, j)` for `i - bw ≤ j ≤ i`.
#[derive(Clone, Debug)]
pub(crate) struct BandedSym {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.band[k] += v;
    }

    #[cfg(test)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[self.idx(i, j)]
        }
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let a = self.band[self.idx(i, j)];
                if a != 0.0 {
                    y[i] += a * x[j];
                    if j != i {
                        y[j] += a * x[i];
                    }
                }
            }
        }
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<Cholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = self.band[self.idx(i, j)];
                for k in k0..j {
                    sum -= self.band[self.idx(i, k)] * self.band[self.idx(j, k)];
                }
                let at = self.idx(i, j);
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::LinearSolve { row: i, pivot: sum });
                    }
                    self.band[at] = sum.sqrt();
                } else {
                    self.band[at] = sum / self.band[self.idx(j, j)];
                }
            }
        }
        Ok(Cholesky { l: self })
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Cholesky {
    l: BandedSym,
}

impl Cholesky {
    /// Solves `A x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.band[l.idx(i, k)] * x[k];
            }
            x[i] = s / l.band[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= l.band[l.idx(k, i)] * x[k];
            }
            x[i] = s / l.band[l.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_against_dense_product() {
        let n = 7;
        let mut a = BandedSym::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.5);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 1.0).collect();
        let mut b = vec![0.0; n];
        a.mul(&x_true, &mut b);
        let chol = a.clone().cholesky().unwrap();
        chol.solve(&mut b);
        for (x, y) in b.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn wide_band() {
        let n = 12;
        let bw = 4;
        let mut a = BandedSym::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 10.0);
            for d in 1..=bw {
                if i >= d {
                    a.add(i, i - d, -1.0 / d as f64);
                }
            }
        }
        assert_eq!(a.get(3, 8), 0.0);
        assert_eq!(a.get(5, 3), -0.5);
        let x_true: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut b = vec![0.0; n];
        a.mul(&x_true, &mut b);
        a.cholesky().unwrap().solve(&mut b);
        for (x, y) in b.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = BandedSym::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(matches!(a.cholesky(), Err(Error::LinearSolve { row: 1, .. })));
    }
}
