//! Numerical laboratory for power concavity of solutions to parabolic
//! Dirichlet problems on bounded convex domains.
//!
//! The crate is `no_std` with `alloc`. IO, configuration files and the
//! command line live in the companion `parconc` crate.
//!
//! Layout:
//! - [`means`]: weighted power means `M_p` for `p ∈ [-∞, +∞]`.
//! - [`domain`]: convex domains in one and two dimensions and their lattices.
//! - [`solver`]: IMEX finite-difference solver for `∂t u = Δu + f` with zero
//!   Dirichlet data, steady solves and the ε-regularized maximal solution.
//! - [`concavity`]: sampled certification of α-parabolic p-concavity,
//!   concave envelopes and the structure-function test.
//! - [`energy`]: heat energy `H(t)` and its power concavity in time.
//! - [`exponents`]: closed-form exponent relations.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod concavity;
pub mod domain;
pub mod energy;
mod error;
pub mod exponents;
pub mod hull;
mod linalg;
pub mod means;
mod sampling;
pub mod solver;

pub use error::{Error, Result};
pub use means::{Exponent, Weights};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
