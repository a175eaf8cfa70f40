//! Numerical kernels for studying the spatial regularity of parabolic SPDE
//! solutions on polygonal domains.
//!
//! The crate bundles five loosely coupled tool sets:
//!
//! * [`wavelet`] — biorthogonal spline filter banks and the 2-D separable
//!   wavelet transform on dyadic grids, with symmetric boundary handling;
//! * [`domain`] — polygon geometry (membership, boundary distance, corner
//!   angles) and the dyadic boundary-layer index sets driving the
//!   approximation-theoretic cardinality estimates;
//! * [`besov`] / [`wsobolev`] — Besov quasi-norms by two independent routes
//!   (modulus of smoothness and wavelet coefficients) and integer-order
//!   weighted Sobolev functionals with boundary-distance weights;
//! * [`noise`] / [`spde`] — wavelet-diagonal Q-Wiener and sparse stochastic
//!   wavelet noise generators, and a semi-implicit Euler solver for
//!   `du = a:D²u dt + dM_t` with zero Dirichlet data;
//! * [`approx`] — uniform and best-N-term wavelet approximation with decay
//!   rate fitting.
//!
//! Everything is deterministic: randomness comes from a counter-based
//! generator ([`rng::Philox4x64`]) keyed by `(seed, path, role, index, step)`,
//! so results do not depend on evaluation order or thread count.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the experiment
//! CLI live in the companion `besovlab` crate.

#![cfg_attr(not(test), no_std)]
// Guards like `!(x > 0.0)` are NaN-rejecting on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod approx;
pub mod besov;
pub mod domain;
mod error;
pub mod field;
pub mod gallery;
pub mod noise;
pub mod num;
pub mod rng;
pub mod spde;
pub mod wavelet;
pub mod wsobolev;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
