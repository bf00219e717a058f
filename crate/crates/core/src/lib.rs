//! Augmented average gate fidelities for noisy qubit channels.
//!
//! The uniform (Haar) average gate fidelity of a single-qubit channel only sees
//! the `χ00` entry of its process matrix. Averaging the single-state fidelity
//! over a non-uniform distribution of initial states (a polar cap of opening
//! angle `Θ`, or a von Mises-Fisher distribution of concentration `κ`) exposes
//! further entries of `χ` and can tell apart channels that share `χ00`.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numerics:
//!
//! - [`linalg`]: small dense complex matrices, Pauli bases, Hermitian eigenvalues.
//! - [`channels`]: process matrices, CPTP validation, extremal and random channels.
//! - [`distributions`]: Bloch-sphere state distributions and their sampling.
//! - [`fidelity`]: closed-form averages and variances plus a quadrature oracle.
//! - [`montecarlo`]: seeded Monte-Carlo estimates, envelopes, bias curves, heatmaps.
//!
//! File formats, the command line and parallel drivers live in the `augfid` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channels;
pub mod distributions;
mod error;
pub mod fidelity;
pub mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Absolute tolerance used by validation checks unless a caller supplies its own.
pub const DEFAULT_TOL: f64 = 1e-10;
