//! Decay laws of unstable quantum states and their modification by
//! repeated, band-limited projective measurements.
//!
//! * [`qm_model`]: the flat-window Lee-Hamiltonian toy model (self-energy,
//!   propagator, renormalized mass, Breit-Wigner width, survival law).
//! * [`qft_model`]: the one-loop scalar counterpart with a sharp momentum
//!   cutoff.
//! * [`bang_bang`]: exponential decay observed by a detector that only sees
//!   decay products inside an energy band, measured at equal intervals.
//! * [`collapse_oracle`]: a state-vector simulation with explicit collapses
//!   used to cross-check the closed forms of [`bang_bang`].
//! * [`numerics`]: quadrature and root finding shared by all of the above.

pub mod bang_bang;
pub mod collapse_oracle;
mod error;
pub mod numerics;
pub mod qft_model;
pub mod qm_model;

pub use error::{Error, Result};
pub use num_complex::Complex64;
