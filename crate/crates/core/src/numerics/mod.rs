//! Numerical primitives used by the physics modules: adaptive
//! Gauss-Kronrod quadrature for complex-valued integrands (with period
//! splitting for oscillatory kernels and variable maps for infinite
//! ranges) and a bracketing bisection root finder.
//!
//! Everything here is a pure function of its arguments.

mod quadrature;
mod root;

pub use quadrature::{integrate, integrate_points, integrate_real, Estimate, QuadratureSpec};
pub use root::{find_root, RootSpec};
