//! Ribosome flow model (RFM) analysis of linear store-and-forward networks.
//!
//! A chain of `n` buffers is fed by a source with capacity `λ₀`, relays
//! packets over links `λ₁…λₙ₋₁` and drains through `λₙ`. Buffer `i` holds a
//! normalized occupancy `xᵢ ∈ [0,1]` and the flow into a buffer shrinks as it
//! fills, which gives a decentralized backpressure rule.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! * [`rfm`]: the RFM vector field, an adaptive Dormand–Prince integrator and
//!   a steady-state solver,
//! * [`thrfm`]: closed forms for the totally homogeneous chain,
//! * [`spectral`]: throughput of arbitrary chains from the largest eigenvalue
//!   of a zero-diagonal tridiagonal matrix,
//! * [`tasep`]: a stochastic exclusion-process simulator used to validate the
//!   mean-field predictions,
//! * [`multihop`]: hop-length and contention-probability design rules,
//! * [`capacity`]: throughput maximization under a weighted capacity budget.
#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

mod error;
mod math;

pub mod capacity;
pub mod multihop;
pub mod rfm;
pub mod spectral;
pub mod tasep;
pub mod thrfm;

pub use error::{Error, ErrorKind, Result};
pub use rfm::{OccupancyState, RateProfile, SteadyState};
