//! One-loop scalar decay `S → φφ` with a sharp momentum cutoff.
//!
//! With the interaction `g S φ²` the dressed propagator is
//! `G_S(x²) = 1/(x² − M0² + Π(x²))` where `Π = (√2 g)² Σ` and
//!
//! `Σ(x²) = (1/2π²) ∫_0^Λ q² dq / (ω (4ω² − x² − iε))`, `ω = √(q² + m²)`.
//!
//! The vertex function is the sharp cutoff `θ(Λ² − q²)`. The decay channel
//! is open for `2m < x < 2√(Λ² + m²)`, where `Im Σ = q0/(8πx)` with
//! `q0 = √(x²/4 − m²)`, so `Im Π(x²) = x Γ^tl(x)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::numerics::{find_root, integrate_points, QuadratureSpec, RootSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QftModel {
    bare_mass: f64,
    product_mass: f64,
    coupling: f64,
    cutoff: f64,
}

/// Real and imaginary part of `Σ` (or of `Π`, see [`QftModel::polarization`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSelfEnergy {
    pub re: f64,
    pub im: f64,
}

impl LoopSelfEnergy {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn scaled(self, factor: f64) -> Self {
        Self {
            re: factor * self.re,
            im: factor * self.im,
        }
    }
}

impl QftModel {
    pub fn new(bare_mass: f64, product_mass: f64, coupling: f64, cutoff: f64) -> Result<Self> {
        require(
            bare_mass.is_finite() && bare_mass > 0.0,
            "M0",
            "must be positive and finite",
        )?;
        require(
            product_mass.is_finite() && product_mass >= 0.0,
            "m",
            "must be non-negative and finite",
        )?;
        require(
            coupling.is_finite() && coupling > 0.0,
            "g",
            "must be positive and finite",
        )?;
        require(
            cutoff.is_finite() && cutoff > 0.0,
            "Lambda",
            "must be positive and finite",
        )?;
        Ok(Self {
            bare_mass,
            product_mass,
            coupling,
            cutoff,
        })
    }

    pub fn bare_mass(&self) -> f64 {
        self.bare_mass
    }

    pub fn product_mass(&self) -> f64 {
        self.product_mass
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Two-particle threshold `2m`.
    pub fn threshold(&self) -> f64 {
        2.0 * self.product_mass
    }

    /// Largest mass that can still decay, `2√(Λ² + m²)`.
    pub fn cutoff_edge(&self) -> f64 {
        2.0 * self.cutoff.hypot(self.product_mass)
    }

    pub fn is_open(&self, x: f64) -> bool {
        x > self.threshold() && x < self.cutoff_edge()
    }

    /// `Σ(x²)` for a real mass `x ≥ 0`.
    ///
    /// The real part is a principal value, computed by subtracting the pole
    /// at `q0`; the imaginary part is the residue `q0/(8πx)`.
    pub fn loop_self_energy(&self, x: f64, spec: &QuadratureSpec) -> Result<LoopSelfEnergy> {
        require(
            x.is_finite() && x >= 0.0,
            "x",
            "must be finite and non-negative",
        )?;
        if x == self.threshold() || x == self.cutoff_edge() {
            return Err(Error::ThresholdPoint(x));
        }
        let (m, cutoff) = (self.product_mass, self.cutoff);
        let omega = |q: f64| q.hypot(m);
        let norm = 1.0 / (2.0 * PI * PI);
        let re = if !self.is_open(x) {
            let est = integrate_points(
                |q| Complex64::new(q * q / (omega(q) * (4.0 * (q * q + m * m) - x * x)), 0.0),
                &[0.0, cutoff],
                spec,
            )?;
            est.value.re
        } else {
            let q0 = self.decay_momentum(x);
            let h = |q: f64| q * q / (4.0 * omega(q) * (q + q0));
            let h0 = h(q0);
            let est = integrate_points(
                |q| Complex64::new((h(q) - h0) / (q - q0), 0.0),
                &[0.0, q0, cutoff],
                spec,
            )?;
            est.value.re + h0 * ((cutoff - q0) / q0).ln()
        };
        let im = if self.is_open(x) {
            self.decay_momentum(x) / (8.0 * PI * x)
        } else {
            0.0
        };
        Ok(LoopSelfEnergy { re: norm * re, im })
    }

    /// `Π(x²) = (√2 g)² Σ(x²)`.
    pub fn polarization(&self, x: f64, spec: &QuadratureSpec) -> Result<LoopSelfEnergy> {
        Ok(self
            .loop_self_energy(x, spec)?
            .scaled(2.0 * self.coupling * self.coupling))
    }

    /// `Γ^tl(x) = √(x²/4 − m²) (√2 g)² / (8π x²)` above threshold, else 0.
    /// The cutoff does not enter.
    pub fn tree_level_width(&self, x: f64) -> f64 {
        if x <= self.threshold() {
            return 0.0;
        }
        self.decay_momentum(x) * 2.0 * self.coupling * self.coupling / (8.0 * PI * x * x)
    }

    /// Full one-loop propagator `1/(x² − M0² + Π(x²))`.
    pub fn propagator(&self, x: f64, spec: &QuadratureSpec) -> Result<Complex64> {
        let pi = self.polarization(x, spec)?;
        Ok(Complex64::new(x * x - self.bare_mass * self.bare_mass + pi.re, pi.im).inv())
    }

    /// `−(1/π) Im G_S(x²)`.
    pub fn spectral_function(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        Ok(-self.propagator(x, spec)?.im / PI)
    }

    /// Zero of `s − M0² + Re Π(s)` for `s = M²` on `(0, 2M0²]`, kept below
    /// the cutoff edge where `Re Π` is logarithmically singular.
    pub fn renormalized_mass_sq(&self, spec: &QuadratureSpec) -> Result<f64> {
        let m0_sq = self.bare_mass * self.bare_mass;
        let edge = self.cutoff_edge();
        let hi = (2.0 * m0_sq).min(edge * edge * (1.0 - 1e-9));
        let lo = if self.product_mass > 0.0 {
            f64::MIN_POSITIVE
        } else {
            1e-12 * m0_sq
        };
        let failed = std::cell::Cell::new(None);
        let gap = |s: f64| match self.polarization(s.sqrt(), spec) {
            Ok(pi) => s - m0_sq + pi.re,
            Err(Error::ThresholdPoint(_)) => {
                let s = s * (1.0 + 4.0 * f64::EPSILON);
                s - m0_sq + self.polarization(s.sqrt(), spec).map_or(f64::NAN, |p| p.re)
            }
            Err(e) => {
                failed.set(Some(e));
                f64::NAN
            }
        };
        let root = find_root(gap, &RootSpec::new(lo, hi, 1e-14 * m0_sq));
        match failed.take() {
            Some(e) => Err(e),
            None => root,
        }
    }

    pub fn renormalized_mass(&self, spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.renormalized_mass_sq(spec)?.sqrt())
    }

    /// Breit-Wigner parameters `M` and `Γ = Γ^tl(M)`.
    pub fn breit_wigner(&self, spec: &QuadratureSpec) -> Result<BreitWigner> {
        let mass = self.renormalized_mass(spec)?;
        BreitWigner::new(mass, self.tree_level_width(mass))
    }

    fn decay_momentum(&self, x: f64) -> f64 {
        (0.25 * x * x - self.product_mass * self.product_mass)
            .max(0.0)
            .sqrt()
    }
}

/// Resonance with mass `M` and width `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreitWigner {
    pub mass: f64,
    pub width: f64,
}

/// Relativistic and nonrelativistic Breit-Wigner propagators at one mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwPropagators {
    pub relativistic: Complex64,
    pub nonrelativistic: Complex64,
}

/// One row of the comparison between the two Breit-Wigner forms, each
/// normalized to modulus 1 at `x = M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BwComparisonRow {
    pub x: f64,
    pub relativistic: f64,
    pub nonrelativistic: f64,
    pub relative_gap: f64,
}

impl BreitWigner {
    pub fn new(mass: f64, width: f64) -> Result<Self> {
        require(
            mass.is_finite() && mass > 0.0,
            "M",
            "must be positive and finite",
        )?;
        require(
            width.is_finite() && width >= 0.0,
            "Gamma",
            "must be non-negative and finite",
        )?;
        Ok(Self { mass, width })
    }

    /// `1/(x² − M² + iMΓ)` and `1/(x − M + iΓ/2)`.
    pub fn propagators(&self, x: f64) -> BwPropagators {
        let (m, g) = (self.mass, self.width);
        BwPropagators {
            relativistic: Complex64::new(x * x - m * m, m * g).inv(),
            nonrelativistic: Complex64::new(x - m, 0.5 * g).inv(),
        }
    }

    pub fn compare(&self, x: f64) -> BwComparisonRow {
        let at = self.propagators(x);
        let peak = self.propagators(self.mass);
        let relativistic = at.relativistic.norm() / peak.relativistic.norm();
        let nonrelativistic = at.nonrelativistic.norm() / peak.nonrelativistic.norm();
        BwComparisonRow {
            x,
            relativistic,
            nonrelativistic,
            relative_gap: (relativistic - nonrelativistic).abs() / nonrelativistic,
        }
    }

    /// Comparison at `M + jΓ/steps` for `j = −steps..=steps`.
    pub fn comparison_table(&self, steps: usize) -> Vec<BwComparisonRow> {
        let s = steps.max(1) as i64;
        (-s..=s)
            .map(|j| self.compare(self.mass + self.width * j as f64 / s as f64))
            .filter(|row| row.x > 0.0)
            .collect()
    }
}
