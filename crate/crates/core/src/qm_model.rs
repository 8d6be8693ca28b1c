//! Lee Hamiltonian with linear dispersion `ω(k) = k` and a flat form
//! factor that couples the unstable state `|S⟩` to the continuum only
//! inside the window `[c − Λ, c + Λ]`.
//!
//! The self-energy `Σ(E) = −∫dk/(2π) f²(k)/(E − k + iε)` evaluates to
//! `Σ(E) = (1/2π) ln((E − c − Λ)/(E − c + Λ))` on the retarded side, so
//! `Im Σ = 1/2` inside the window and `0` outside. The propagator is
//! `G_S(E) = 1/(E − M0 + g² Σ(E))`.
//!
//! Because `Re Σ` diverges logarithmically at both window edges, the
//! propagator always has two (usually exponentially light) bound-state
//! poles just outside the window, and `Re G_S⁻¹` has two extra zeros just
//! inside it. The physical resonance is the zero on the central interval
//! where `Re G_S⁻¹` increases. Spectral sums and the survival amplitude
//! include the bound states as discrete terms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::numerics::{find_root, integrate_points, Estimate, QuadratureSpec, RootSpec};

/// Relative distance from a window edge inside which an energy counts as
/// sitting on the branch point.
pub const EDGE_GUARD: f64 = 1e-12;

/// Real and imaginary part of the dimensionless self-energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexSelfEnergy {
    pub re: f64,
    pub im: f64,
}

impl ComplexSelfEnergy {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub energy: f64,
    pub density: f64,
}

/// Real pole of the propagator outside the window with its residue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub energy: f64,
    pub weight: f64,
}

/// Solves a monotone `f(δ) = 0` for `δ ∈ (0, delta_max]` in `ln δ`, which
/// reaches offsets down to the smallest positive double.
fn solve_edge_offset<F: Fn(f64) -> f64>(f: F, delta_max: f64) -> Option<f64> {
    let g = |u: f64| f(u.exp());
    let spec = RootSpec::new(f64::MIN_POSITIVE.ln(), delta_max.ln(), 1e-14);
    find_root(g, &spec).ok().map(f64::exp)
}

/// The cutoff toy model. Immutable once built; the renormalized mass, the
/// Breit-Wigner width and the pole structure are solved for at
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffLeeModel {
    bare_mass: f64,
    cutoff: f64,
    coupling: f64,
    window_center: f64,
    mass: f64,
    bw_width: f64,
    bound_states: [Option<BoundState>; 2],
    edge_zeros: [Option<f64>; 2],
}

impl CutoffLeeModel {
    /// Window centred on the bare mass, as in the original toy model.
    pub fn new(bare_mass: f64, cutoff: f64, coupling: f64) -> Result<Self> {
        Self::with_window_center(bare_mass, cutoff, coupling, bare_mass)
    }

    /// Coupling window centred on `window_center` instead of the bare mass.
    ///
    /// Fails with [`Error::NoSignChange`] when `Re G_S⁻¹` has no zero on its
    /// increasing branch, i.e. when there is no resonance to speak of.
    pub fn with_window_center(
        bare_mass: f64,
        cutoff: f64,
        coupling: f64,
        window_center: f64,
    ) -> Result<Self> {
        require(bare_mass.is_finite(), "bare_mass", "must be finite")?;
        require(window_center.is_finite(), "window_center", "must be finite")?;
        require(
            cutoff.is_finite() && cutoff > 0.0,
            "cutoff",
            "must be positive and finite",
        )?;
        require(
            coupling.is_finite() && coupling > 0.0,
            "coupling",
            "must be positive and finite",
        )?;
        let mut model = Self {
            bare_mass,
            cutoff,
            coupling,
            window_center,
            mass: f64::NAN,
            bw_width: f64::NAN,
            bound_states: [None, None],
            edge_zeros: [None, None],
        };
        model.mass = model.solve_renormalized_mass()?;
        model.bw_width = model.golden_rule_width(model.mass);
        model.bound_states = [model.bound_state_below(), model.bound_state_above()];
        model.edge_zeros = model.inner_edge_zeros();
        Ok(model)
    }

    pub fn bare_mass(&self) -> f64 {
        self.bare_mass
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn window_center(&self) -> f64 {
        self.window_center
    }

    /// Open coupling window `(c − Λ, c + Λ)`.
    pub fn window(&self) -> (f64, f64) {
        (
            self.window_center - self.cutoff,
            self.window_center + self.cutoff,
        )
    }

    fn g2(&self) -> f64 {
        self.coupling * self.coupling
    }

    fn guard(&self) -> f64 {
        EDGE_GUARD * self.cutoff
    }

    fn on_edge(&self, energy: f64) -> bool {
        let (lo, hi) = self.window();
        (energy - lo).abs() <= self.guard() || (energy - hi).abs() <= self.guard()
    }

    fn inside(&self, energy: f64) -> bool {
        (energy - self.window_center).abs() < self.cutoff
    }

    fn re_sigma_unchecked(&self, energy: f64) -> f64 {
        let x = energy - self.window_center;
        ((x - self.cutoff) / (x + self.cutoff)).abs().ln() / (2.0 * PI)
    }

    /// `Re G_S⁻¹(E) = E − M0 + g² Re Σ(E)`.
    fn inverse_real(&self, energy: f64) -> f64 {
        energy - self.bare_mass + self.g2() * self.re_sigma_unchecked(energy)
    }

    pub fn self_energy(&self, energy: f64) -> Result<ComplexSelfEnergy> {
        if self.on_edge(energy) {
            return Err(Error::BranchPoint(energy));
        }
        let im = if self.inside(energy) { 0.5 } else { 0.0 };
        Ok(ComplexSelfEnergy {
            re: self.re_sigma_unchecked(energy),
            im,
        })
    }

    /// Analytic `∂ Re Σ / ∂E = Λ / (π ((E − c)² − Λ²))`.
    pub fn self_energy_slope(&self, energy: f64) -> Result<f64> {
        if self.on_edge(energy) {
            return Err(Error::BranchPoint(energy));
        }
        let x = energy - self.window_center;
        Ok(self.cutoff / (PI * (x - self.cutoff) * (x + self.cutoff)))
    }

    pub fn propagator(&self, energy: f64) -> Result<Complex64> {
        let sigma = self.self_energy(energy)?.to_complex();
        Ok((Complex64::new(energy - self.bare_mass, 0.0) + sigma * self.g2()).inv())
    }

    /// Continuous part of `−Im G_S(E)/π`: zero outside the window and on its
    /// edges, where it vanishes logarithmically.
    pub fn spectral_density(&self, energy: f64) -> f64 {
        if !self.inside(energy) || self.on_edge(energy) {
            return 0.0;
        }
        let real = self.inverse_real(energy);
        let half_width = 0.5 * self.g2();
        (half_width / PI) / (real * real + half_width * half_width)
    }

    /// Uniform samples of the continuous spectral density on the open window.
    pub fn spectral_samples(&self, count: usize) -> Vec<SpectralSample> {
        let (lo, hi) = self.window();
        let step = (hi - lo) / (count + 1) as f64;
        (1..=count)
            .map(|j| {
                let energy = lo + j as f64 * step;
                SpectralSample {
                    energy,
                    density: self.spectral_density(energy),
                }
            })
            .collect()
    }

    /// Bound-state poles below and above the window (absent when their
    /// distance to the edge underflows).
    pub fn bound_states(&self) -> impl Iterator<Item = BoundState> + '_ {
        self.bound_states.iter().flatten().copied()
    }

    fn pole_weight(&self, offset: f64) -> f64 {
        // 1/∂E Re G⁻¹ with (E − c)² − Λ² = δ(2Λ + δ) outside the window
        1.0 / (1.0 + self.g2() * self.cutoff / (PI * offset * (2.0 * self.cutoff + offset)))
    }

    fn offset_scale(&self) -> f64 {
        self.cutoff + (self.bare_mass - self.window_center).abs() + self.g2() + 1.0
    }

    fn bound_state_above(&self) -> Option<BoundState> {
        let (_, hi) = self.window();
        let (lam, k) = (self.cutoff, self.g2() / (2.0 * PI));
        let f = |d: f64| hi + d - self.bare_mass + k * (d / (2.0 * lam + d)).ln();
        let mut top = self.offset_scale();
        while f(top) <= 0.0 {
            top *= 2.0;
        }
        solve_edge_offset(f, top).map(|d| BoundState {
            energy: hi + d,
            weight: self.pole_weight(d),
        })
    }

    fn bound_state_below(&self) -> Option<BoundState> {
        let (lo, _) = self.window();
        let (lam, k) = (self.cutoff, self.g2() / (2.0 * PI));
        let f = |d: f64| lo - d - self.bare_mass + k * ((2.0 * lam + d) / d).ln();
        let mut top = self.offset_scale();
        while f(top) >= 0.0 {
            top *= 2.0;
        }
        solve_edge_offset(f, top).map(|d| BoundState {
            energy: lo - d,
            weight: self.pole_weight(d),
        })
    }

    /// Half-width of the central interval on which `Re G_S⁻¹` increases.
    fn rising_half_width(&self) -> Option<f64> {
        let ratio = self.g2() / (PI * self.cutoff);
        (ratio < 1.0).then(|| self.cutoff * (1.0 - ratio).sqrt())
    }

    /// Zeros of `Re G_S⁻¹` between the window edges and the rising branch.
    fn inner_edge_zeros(&self) -> [Option<f64>; 2] {
        let Some(half) = self.rising_half_width() else {
            return [None, None];
        };
        let (lo, hi) = self.window();
        let (lam, k) = (self.cutoff, self.g2() / (2.0 * PI));
        let reach = lam - half;
        if reach <= 0.0 {
            return [None, None];
        }
        let below = solve_edge_offset(
            |d| lo + d - self.bare_mass + k * ((2.0 * lam - d) / d).ln(),
            reach,
        )
        .map(|d| lo + d);
        let above = solve_edge_offset(
            |d| hi - d - self.bare_mass + k * (d / (2.0 * lam - d)).ln(),
            reach,
        )
        .map(|d| hi - d);
        [below, above]
    }

    fn break_points(&self) -> Vec<f64> {
        let (lo, hi) = self.window();
        let mut points = vec![lo];
        points.extend(self.edge_zeros[0]);
        points.push(self.mass);
        points.extend(self.edge_zeros[1]);
        points.push(hi);
        points.dedup_by(|b, a| *b <= *a);
        points
    }

    /// Total spectral weight: the window integral of the continuous density
    /// plus the bound-state residues. Analytically one.
    pub fn spectral_norm(&self, spec: &QuadratureSpec) -> Result<Estimate<f64>> {
        let spec = QuadratureSpec {
            oscillatory_hint: None,
            ..*spec
        };
        let est = integrate_points(
            |e| Complex64::new(self.spectral_density(e), 0.0),
            &self.break_points(),
            &spec,
        )?;
        let discrete: f64 = self.bound_states().map(|b| b.weight).sum();
        Ok(Estimate {
            value: est.value.re + discrete,
            error: est.error,
        })
    }

    fn solve_renormalized_mass(&self) -> Result<f64> {
        let half = self.rising_half_width().ok_or(Error::NoSignChange {
            lo: self.window_center,
            hi: self.window_center,
        })?;
        let c = self.window_center;
        let spec = RootSpec::new(c - half, c + half, 1e-15 * self.cutoff.max(1.0));
        find_root(|m| self.inverse_real(m), &spec)
    }

    /// Solution of `M − M0 + g² Re Σ(M) = 0` on the rising branch of
    /// `Re G_S⁻¹`.
    pub fn renormalized_mass(&self) -> f64 {
        self.mass
    }

    /// Generalized golden rule `g² f²(k_E) / (1 + g² ∂Re Σ(E))` with
    /// `dω/dk = 1`; zero when `energy` is outside the window.
    pub fn golden_rule_width(&self, energy: f64) -> f64 {
        if !self.inside(energy) || self.on_edge(energy) {
            return 0.0;
        }
        let slope = self
            .self_energy_slope(energy)
            .expect("energy checked to be off the window edges");
        self.g2() / (1.0 + self.g2() * slope)
    }

    /// Breit-Wigner width at the renormalized mass.
    pub fn bw_width(&self) -> f64 {
        self.bw_width
    }

    /// Short-time scale `τ_Z = (⟨H²⟩ − ⟨H⟩²)^{-1/2} = sqrt(π/(g² Λ))`.
    pub fn zeno_time(&self) -> f64 {
        (PI / (self.g2() * self.cutoff)).sqrt()
    }

    /// `a(t) = ∫ d_S(E) e^{−iEt} dE`, bound states included.
    pub fn survival_amplitude(&self, t: f64, spec: &QuadratureSpec) -> Result<Complex64> {
        require(
            t.is_finite() && t >= 0.0,
            "t",
            "must be finite and non-negative",
        )?;
        let m0 = self.bare_mass;
        let spec = QuadratureSpec {
            oscillatory_hint: (t > 0.0).then_some(t),
            ..*spec
        };
        // integrate in E − M0 and restore the global phase afterwards
        let shifted: Vec<f64> = self.break_points().iter().map(|e| e - m0).collect();
        let est = integrate_points(
            |x| Complex64::new(0.0, -x * t).exp() * self.spectral_density(m0 + x),
            &shifted,
            &spec,
        )?;
        let discrete: Complex64 = self
            .bound_states()
            .map(|b| Complex64::new(0.0, -(b.energy - m0) * t).exp() * b.weight)
            .sum();
        Ok((est.value + discrete) * Complex64::new(0.0, -m0 * t).exp())
    }

    /// `p(t) = |a(t)|²`.
    pub fn survival_probability(&self, t: f64, spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.survival_amplitude(t, spec)?.norm_sqr())
    }

    /// `1 − p(t)` without the cancellation of `1 − |a|²` at short times.
    ///
    /// With `x = E − M0`, `N = ∫d_S`, `C = ∫d_S · 2 sin²(xt/2)` and
    /// `S = ∫d_S sin(xt)`, one has `|a|² = (N − C)² + S²`.
    pub fn decay_probability(&self, t: f64, spec: &QuadratureSpec) -> Result<f64> {
        require(
            t.is_finite() && t >= 0.0,
            "t",
            "must be finite and non-negative",
        )?;
        let m0 = self.bare_mass;
        let points: Vec<f64> = self.break_points().iter().map(|e| e - m0).collect();
        let spec = QuadratureSpec {
            oscillatory_hint: (t > 0.0).then_some(t),
            ..*spec
        };
        let norm = self.spectral_norm(&spec)?.value;
        let kernel = |x: f64| {
            let s = (0.5 * x * t).sin();
            Complex64::new(2.0 * s * s, (x * t).sin())
        };
        let est = integrate_points(
            |x| kernel(x) * self.spectral_density(m0 + x),
            &points,
            &spec,
        )?;
        let discrete: Complex64 = self
            .bound_states()
            .map(|b| kernel(b.energy - m0) * b.weight)
            .sum();
        let total = est.value + discrete;
        let (c, s) = (total.re, total.im);
        Ok((1.0 - norm * norm) + 2.0 * norm * c - c * c - s * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_real;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn model(m0: f64, cutoff: f64, g: f64) -> CutoffLeeModel {
        CutoffLeeModel::new(m0, cutoff, g).unwrap()
    }

    // Re Σ(E) = −PV∫ dk/(2π) f²(k)/(E − k): off the window the integrand
    // is regular, so plain quadrature is an independent oracle.
    fn re_sigma_by_quadrature(m: &CutoffLeeModel, energy: f64) -> f64 {
        let (lo, hi) = m.window();
        let spec = QuadratureSpec::with_tolerances(1e-14, 1e-12);
        -integrate_real(|k| 1.0 / (energy - k), lo, hi, &spec)
            .unwrap()
            .value
            / (2.0 * PI)
    }

    #[test]
    fn self_energy_at_bare_mass() {
        let m = model(0.7, 2.0, 1.0);
        let s = m.self_energy(0.7).unwrap();
        assert_abs_diff_eq!(s.re, 0.0, epsilon = 1e-15);
        assert_eq!(s.im, 0.5);
    }

    #[test]
    fn self_energy_outside_window() {
        let m = model(0.0, 1.5, 0.4);
        let above = m.self_energy(3.0).unwrap();
        let below = m.self_energy(-3.0).unwrap();
        assert_abs_diff_eq!(above.re, -3f64.ln() / (2.0 * PI), epsilon = 1e-14);
        assert_abs_diff_eq!(above.re, -0.174_849_576_283_029_9, epsilon = 1e-12);
        assert_eq!(above.im, 0.0);
        assert_abs_diff_eq!(below.re, 3f64.ln() / (2.0 * PI), epsilon = 1e-14);
        assert_eq!(below.im, 0.0);
        assert_abs_diff_eq!(above.re, re_sigma_by_quadrature(&m, 3.0), epsilon = 1e-10);
        assert_abs_diff_eq!(below.re, re_sigma_by_quadrature(&m, -3.0), epsilon = 1e-10);
    }

    #[test]
    fn branch_points_rejected() {
        let m = model(1.0, 2.0, 0.5);
        assert!(matches!(m.self_energy(3.0), Err(Error::BranchPoint(_))));
        assert!(matches!(m.self_energy(-1.0), Err(Error::BranchPoint(_))));
        assert!(matches!(m.propagator(3.0), Err(Error::BranchPoint(_))));
    }

    #[test]
    fn imaginary_part_only_on_open_window() {
        let m = CutoffLeeModel::with_window_center(0.0, 1.0, 0.3, 0.2).unwrap();
        for j in 0..400 {
            let e = -3.0 + j as f64 * 0.015 + 0.0007;
            let s = m.self_energy(e).unwrap();
            let inside = e > -0.8 && e < 1.2;
            assert_eq!(s.im > 0.0, inside, "E = {e}");
        }
    }

    #[test]
    fn real_part_antisymmetric_about_center() {
        let m = CutoffLeeModel::with_window_center(0.1, 2.0, 0.3, 0.5).unwrap();
        for j in 1..200 {
            let d = j as f64 * 0.037;
            let plus = m.self_energy(0.5 + d);
            let minus = m.self_energy(0.5 - d);
            if let (Ok(p), Ok(q)) = (plus, minus) {
                assert_abs_diff_eq!(p.re, -q.re, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn propagator_at_bare_mass() {
        let m = model(0.0, 5.0, 1.0);
        let g = m.propagator(0.0).unwrap();
        assert_abs_diff_eq!(g.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.im, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn propagator_wide_window_is_breit_wigner() {
        let g = 0.8;
        let g2 = g * g;
        let m = model(0.0, 1e6 * g2, g);
        let e = g2;
        let exact = Complex64::new(g2, g2 / 2.0).inv();
        let got = m.propagator(e).unwrap();
        assert!((got - exact).norm() / exact.norm() < 1e-4);
    }

    #[test]
    fn propagator_far_outside_window_is_free() {
        let m = model(0.0, 1.0, 1e-4);
        let e = 10.0;
        let got = m.propagator(e).unwrap();
        assert_relative_eq!(got.re, 1.0 / e, max_relative = 1e-8);
        assert_eq!(got.im, 0.0);
    }

    #[test]
    fn symmetric_window_keeps_bare_mass() {
        for &(cutoff, g) in &[(1.0, 0.3), (10.0, 2.0), (0.2, 0.05)] {
            let m = model(0.0, cutoff, g);
            assert_eq!(m.renormalized_mass(), 0.0);
            let shifted = model(1.25, cutoff, g);
            assert_abs_diff_eq!(shifted.renormalized_mass(), 1.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn wide_window_mass_and_width() {
        let g = 0.5;
        let m = model(0.0, 1e8, g);
        assert_abs_diff_eq!(m.renormalized_mass(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.bw_width(), g * g, max_relative = 1e-8);
    }

    #[test]
    fn shifted_window_mass_matches_grid_scan() {
        let m = CutoffLeeModel::with_window_center(0.0, 1.0, 0.5, 0.3).unwrap();
        let g2 = 0.25;
        let condition =
            |e: f64| e + g2 * (((e - 0.3) - 1.0) / ((e - 0.3) + 1.0)).abs().ln() / (2.0 * PI);
        // 1e4-point scan of the open window; the resonance is the upward
        // crossing, refined by linear interpolation in the bracketing cell
        let (lo, hi) = (-0.7, 1.3);
        let n = 10_000;
        let h = (hi - lo) / n as f64;
        let mut upward = Vec::new();
        for j in 1..n - 1 {
            let (a, b) = (lo + j as f64 * h, lo + (j + 1) as f64 * h);
            let (fa, fb) = (condition(a), condition(b));
            if fa <= 0.0 && fb > 0.0 {
                upward.push(a - fa * (b - a) / (fb - fa));
            }
        }
        assert_eq!(upward.len(), 1);
        assert_abs_diff_eq!(m.renormalized_mass(), upward[0], epsilon = 1e-7);
        // window centred above M0 pulls Re Σ(M0) positive, so M < M0
        assert!(m.renormalized_mass() < 0.0);
    }

    #[test]
    fn width_matches_finite_difference_slope() {
        let g = 0.3;
        let m = model(0.0, 1.0, g);
        let h = 1e-5;
        let re = |e: f64| m.self_energy(e).unwrap().re;
        let slope = (re(h) - re(-h)) / (2.0 * h);
        assert_relative_eq!(slope, -1.0 / PI, max_relative = 1e-8);
        assert_relative_eq!(
            slope,
            m.self_energy_slope(0.0).unwrap(),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            m.bw_width(),
            g * g / (1.0 + g * g * slope),
            max_relative = 1e-9
        );
    }

    #[test]
    fn spectral_density_is_non_negative_and_normalized() {
        let spec = QuadratureSpec::default();
        for &(m0, cutoff, g, c) in &[
            (0.0, 1.0, 0.3, 0.0),
            (0.0, 10.0, 0.1, 0.0),
            (2.0, 3.0, 1.0, 2.0),
            (0.0, 1.0, 0.5, 0.3),
            (0.0, 100.0, 1.0, 0.0),
        ] {
            let m = CutoffLeeModel::with_window_center(m0, cutoff, g, c).unwrap();
            assert!(m.spectral_samples(1000).iter().all(|s| s.density >= 0.0));
            let norm = m.spectral_norm(&spec).unwrap();
            assert_abs_diff_eq!(norm.value, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn amplitude_at_zero_time() {
        let m = model(0.0, 10.0, 1.0);
        let a = m
            .survival_amplitude(0.0, &QuadratureSpec::default())
            .unwrap();
        assert_abs_diff_eq!(a.re, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wide_window_decays_exponentially() {
        let g = 1.0;
        let m = model(0.0, 1e3, g);
        let spec = QuadratureSpec::default();
        for j in 0..=20 {
            let t = 0.25 * j as f64;
            let p = m.survival_probability(t, &spec).unwrap();
            let reference = (-t).exp();
            assert!(
                (p - reference).abs() <= 0.01 * reference,
                "t = {t}: {p} vs {reference}"
            );
        }
    }

    #[test]
    fn survival_bounded_by_one() {
        let m = model(0.0, 2.0, 0.7);
        let spec = QuadratureSpec::default();
        for j in 0..60 {
            let t = 0.1 * j as f64;
            assert!(m.survival_probability(t, &spec).unwrap() <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn decay_probability_agrees_with_modulus() {
        let m = model(0.3, 4.0, 0.6);
        let spec = QuadratureSpec::with_tolerances(1e-13, 1e-12);
        for &t in &[0.1, 1.0, 3.0] {
            let p = m.survival_probability(t, &spec).unwrap();
            let q = m.decay_probability(t, &spec).unwrap();
            assert_abs_diff_eq!(p + q, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn short_time_quadratic_law() {
        let (g, cutoff) = (0.1, 10.0);
        let m = model(0.0, cutoff, g);
        let spec = QuadratureSpec::with_tolerances(1e-15, 1e-13);
        let tz = m.zeno_time();
        let t = 1e-3 * tz;
        let q = m.decay_probability(t, &spec).unwrap();
        // variance oracle: ⟨S|H₁²|S⟩ = ∫ dk g² f²(k)/(2π)
        let variance = integrate_real(|_| g * g / (2.0 * PI), -cutoff, cutoff, &spec)
            .unwrap()
            .value;
        assert_relative_eq!(q / (t * t), variance, max_relative = 1e-3);
    }

    #[test]
    fn zeno_time_values() {
        let m = model(0.0, 10.0, 0.1);
        assert_abs_diff_eq!(m.zeno_time(), (PI / 0.1).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.zeno_time(), 5.604_991_216_397_928, epsilon = 1e-9);
        let doubled = model(0.0, 20.0, 0.1);
        assert_relative_eq!(
            m.zeno_time() / doubled.zeno_time(),
            2f64.sqrt(),
            max_relative = 1e-12
        );
        assert!(model(0.0, 10.0, 1e-9).zeno_time() > 1e8);
    }

    #[test]
    fn construction_validates() {
        assert!(CutoffLeeModel::new(0.0, -1.0, 0.2).is_err());
        assert!(CutoffLeeModel::new(0.0, 1.0, 0.0).is_err());
        // g² ≥ πΛ: Re G⁻¹ never rises, no resonance
        assert!(matches!(
            CutoffLeeModel::new(0.0, 1.0, 2.0),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn width_vanishes_outside_window() {
        let m = model(0.0, 1.0, 0.3);
        assert_eq!(m.golden_rule_width(1.5), 0.0);
        assert_eq!(m.golden_rule_width(-7.0), 0.0);
        assert!(m.golden_rule_width(0.2) > 0.0);
    }

    #[test]
    fn bound_states_are_poles_with_residues() {
        let m = CutoffLeeModel::with_window_center(0.0, 1.0, 0.5, 0.3).unwrap();
        let (lo, hi) = m.window();
        // the upper pole sits ~1e-14 above the edge; check the resolvable one
        let states: Vec<_> = m
            .bound_states()
            .filter(|b| b.energy < lo - 1e-9 || b.energy > hi + 1e-9)
            .collect();
        assert_eq!(states.len(), 1);
        for b in states {
            assert!(b.energy < lo || b.energy > hi);
            assert!(b.weight > 0.0 && b.weight < 1e-3);
            // Re G⁻¹ vanishes at the pole, up to the steep slope times one ulp
            let inv = b.energy + 0.25 * m.self_energy(b.energy).unwrap().re;
            assert!(inv.abs() * b.weight < 1e-14, "Re G⁻¹ = {inv}");
            // residue against a centred difference of Re G⁻¹
            let d = 1e-3 * (b.energy - if b.energy > hi { hi } else { lo }).abs();
            let f = |e: f64| e + 0.25 * m.self_energy(e).unwrap().re;
            let slope = (f(b.energy + d) - f(b.energy - d)) / (2.0 * d);
            assert_relative_eq!(b.weight, 1.0 / slope, max_relative = 1e-4);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn spectral_density_non_negative_and_supported(
                cutoff in 0.5f64..20.0,
                frac in 0.01f64..0.9,
                center in -1.0f64..1.0,
                e in -30.0f64..30.0,
            ) {
                let g = (frac * PI * cutoff).sqrt();
                let m = CutoffLeeModel::with_window_center(0.0, cutoff, g, center);
                // off-centre windows may have no resonance at all
                prop_assume!(m.is_ok());
                let m = m.unwrap();
                let d = m.spectral_density(e);
                prop_assert!(d >= 0.0);
                if (e - center).abs() > cutoff {
                    prop_assert_eq!(d, 0.0);
                }
            }

            #[test]
            fn self_energy_imaginary_part_is_half_or_zero(
                cutoff in 0.5f64..20.0,
                e in -30.0f64..30.0,
            ) {
                let m = CutoffLeeModel::new(0.0, cutoff, 0.3).unwrap();
                if let Ok(sigma) = m.self_energy(e) {
                    let expected = if e.abs() < cutoff { 0.5 } else { 0.0 };
                    prop_assert_eq!(sigma.im, expected);
                }
            }

            #[test]
            fn survival_is_a_probability(
                cutoff in 1.0f64..50.0,
                t in 0.0f64..5.0,
            ) {
                let m = CutoffLeeModel::new(0.0, cutoff, 0.5).unwrap();
                let p = m.survival_probability(t, &QuadratureSpec::default()).unwrap();
                prop_assert!((-1e-8..=1.0 + 1e-8).contains(&p), "p = {}", p);
            }
        }
    }
}
