//! State-vector simulation of pulsed band measurements.
//!
//! The continuum `∫dk c(k)|k⟩` is represented on a cell-centred momentum
//! lattice. Between pulses each mode picks up `e^{−ik dt}` and the discrete
//! state feeds it with `amp_S · b(k, dt)`, the exact exponential-limit
//! kernel; a measurement removes the band amplitudes (no click) or keeps
//! only them (click).
//!
//! Modes beyond `k_max` are never measured, and there the emissions of
//! successive segments telescope into
//! `c(k) = sqrt(Γ/2π) (σ e^{−ikT} − amp_S) / (k − M0 + iΓ/2)`, where `T` is
//! the elapsed time and `σ` the accumulated collapse scaling. Their weight
//! is therefore tracked exactly without storing them
//! ([`StateVector::escaped`]).
//!
//! Nothing here uses the closed-form no-click law, so the module serves as
//! an independent check of it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bang_bang::{
    band_click_probability, DetectorBand, ExponentialDecay, MeasurementSchedule,
};
use crate::error::{require, Error, Result};
use crate::numerics::{integrate, QuadratureSpec};

/// Largest accepted gap between the lattice sum and the continuum integral
/// of one emitted packet.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Ratio `k_max / max(Γ, λ)` below which truncation is likely to matter.
pub const COVERAGE_RATIO: f64 = 20.0;

/// Below this the no-click branch is treated as impossible.
const DEGENERATE_LIMIT: f64 = 1e-14;

/// Uniform grid of `n_points` cells on `[−k_max, k_max]`, nodes at the
/// cell midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KLattice {
    k_max: f64,
    n_points: usize,
}

impl KLattice {
    pub fn new(k_max: f64, n_points: usize) -> Result<Self> {
        require(
            k_max.is_finite() && k_max > 0.0,
            "k_max",
            "must be positive and finite",
        )?;
        require(n_points >= 2, "n_points", "must be at least 2")?;
        Ok(Self { k_max, n_points })
    }

    /// Default resolution: `k_max = 200 Γ` with 2¹⁶ cells.
    pub fn reference(width: f64) -> Self {
        Self {
            k_max: 200.0 * width,
            n_points: 1 << 16,
        }
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.k_max / self.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.k_max + (j as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.node(j))
    }

    /// Moves the band edges to the nearest cell boundaries.
    pub fn snap(&self, band: &DetectorBand) -> SnappedBand {
        let dk = self.spacing();
        let edge = |e: f64| {
            ((e + self.k_max) / dk)
                .round()
                .clamp(0.0, self.n_points as f64) as usize
        };
        let (lo, hi) = if band.half_width().is_infinite() {
            (0, self.n_points)
        } else {
            (
                edge(band.center() - band.half_width()),
                edge(band.center() + band.half_width()),
            )
        };
        let lo_k = -self.k_max + lo as f64 * dk;
        let hi_k = -self.k_max + hi as f64 * dk;
        SnappedBand {
            first: lo,
            end: hi,
            half_width: 0.5 * (hi_k - lo_k),
            center: if hi > lo {
                0.5 * (lo_k + hi_k)
            } else {
                band.center()
            },
        }
    }

    /// Explains why the grid is probably too narrow for `sys` and `band`.
    pub fn coverage_warning(&self, sys: &ExponentialDecay, band: &DetectorBand) -> Option<String> {
        let scale = if band.half_width().is_finite() {
            sys.width().max(band.half_width() + band.center().abs())
        } else {
            sys.width()
        };
        (self.k_max < COVERAGE_RATIO * scale).then(|| {
            format!(
                "k_max = {} is below {COVERAGE_RATIO} x {scale}; truncation may bias results",
                self.k_max
            )
        })
    }
}

/// Band whose edges lie on lattice cell boundaries: cells `first..end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnappedBand {
    pub first: usize,
    pub end: usize,
    pub half_width: f64,
    pub center: f64,
}

impl SnappedBand {
    pub fn cells(&self) -> std::ops::Range<usize> {
        self.first..self.end
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.first
    }

    /// Continuum band with the snapped edges.
    pub fn as_band(&self) -> DetectorBand {
        DetectorBand::centered(self.half_width, self.center).expect("snapped band is valid")
    }
}

/// `amp_S |S⟩ + Σ_j amp_k[j] |k_j⟩` plus the modes beyond the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    lattice: KLattice,
    pub amp_s: Complex64,
    pub amp_k: Vec<Complex64>,
    /// `σ` of the far-mode amplitude.
    tail_source: Complex64,
    elapsed: f64,
    escaped: f64,
}

impl StateVector {
    /// The undecayed state `|S⟩`.
    pub fn undecayed(lattice: KLattice) -> Self {
        Self {
            lattice,
            amp_s: Complex64::new(1.0, 0.0),
            amp_k: vec![Complex64::new(0.0, 0.0); lattice.n_points],
            tail_source: Complex64::new(1.0, 0.0),
            elapsed: 0.0,
            escaped: 0.0,
        }
    }

    pub fn lattice(&self) -> &KLattice {
        &self.lattice
    }

    /// Weight carried by modes with `|k| > k_max`.
    pub fn escaped(&self) -> f64 {
        self.escaped
    }

    pub fn continuum_weight(&self) -> f64 {
        self.amp_k.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.lattice.spacing()
    }

    pub fn band_weight(&self, band: &SnappedBand) -> f64 {
        self.amp_k[band.cells()]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            * self.lattice.spacing()
    }

    pub fn norm(&self) -> f64 {
        self.amp_s.norm_sqr() + self.continuum_weight() + self.escaped
    }

    fn scale(&mut self, factor: f64) {
        self.amp_s *= factor;
        self.tail_source *= factor;
        self.amp_k.iter_mut().for_each(|c| *c *= factor);
        self.escaped *= factor * factor;
    }
}

/// Free-evolution kernel for one step `dt`, tabulated once on a lattice.
#[derive(Debug, Clone)]
pub struct FreeKernel {
    lattice: KLattice,
    discrete: Complex64,
    phases: Vec<Complex64>,
    emission: Vec<Complex64>,
    sys: ExponentialDecay,
    spec: QuadratureSpec,
    dt: f64,
}

impl FreeKernel {
    /// Tabulates the kernel and checks that the lattice resolves the
    /// emitted packet, as a whole and inside `band`, to [`NORM_DRIFT_LIMIT`].
    pub fn new(
        sys: &ExponentialDecay,
        lattice: &KLattice,
        band: &SnappedBand,
        dt: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        require(
            dt.is_finite() && dt >= 0.0,
            "dt",
            "must be finite and non-negative",
        )?;
        let phases = lattice
            .nodes()
            .map(|k| Complex64::new(0.0, -k * dt).exp())
            .collect();
        let emission: Vec<Complex64> = lattice.nodes().map(|k| sys.mode_amplitude(k, dt)).collect();
        let dk = lattice.spacing();
        let lattice_sum = |cells: std::ops::Range<usize>| {
            emission[cells].iter().map(|b| b.norm_sqr()).sum::<f64>() * dk
        };
        let inside = band_click_probability(sys, &DetectorBand::new(lattice.k_max)?, dt, spec)?;
        let mut drift = (lattice_sum(0..lattice.n_points) - inside).abs();
        if !band.is_empty() {
            let in_band = band_click_probability(sys, &band.as_band(), dt, spec)?;
            drift = drift.max((lattice_sum(band.cells()) - in_band).abs());
        }
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormLoss {
                drift,
                limit: NORM_DRIFT_LIMIT,
            });
        }
        Ok(Self {
            lattice: *lattice,
            discrete: Complex64::new(-0.5 * sys.width() * dt, -sys.bare_mass() * dt).exp(),
            phases,
            emission,
            sys: *sys,
            spec: *spec,
            dt,
        })
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        assert_eq!(
            state.lattice, self.lattice,
            "state and kernel lattices differ"
        );
        let source = state.amp_s;
        for ((c, phase), b) in state.amp_k.iter_mut().zip(&self.phases).zip(&self.emission) {
            *c = *c * phase + source * b;
        }
        state.amp_s = source * self.discrete;
        state.elapsed += self.dt;
        state.escaped = far_weight(&self.sys, &self.lattice, state, &self.spec)?;
        Ok(())
    }
}

/// `∫_{|k|>k_max} |c(k)|² dk` for the telescoped far-mode amplitude.
///
/// With `x = k − M0` and `h = Γ/2` the two Lorentzian moments over the
/// outer region follow from their full-line values `π/h` and
/// `(π/h) e^{−hT}` minus a finite integral over the lattice range.
fn far_weight(
    sys: &ExponentialDecay,
    lattice: &KLattice,
    state: &StateVector,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (sigma, amp) = (state.tail_source, state.amp_s);
    if sigma.norm_sqr() == 0.0 && amp.norm_sqr() == 0.0 {
        return Ok(0.0);
    }
    let h = 0.5 * sys.width();
    let (lo, hi) = (
        -lattice.k_max - sys.bare_mass(),
        lattice.k_max - sys.bare_mass(),
    );
    let lorentz_out = std::f64::consts::PI / h - ((hi / h).atan() - (lo / h).atan()) / h;
    let t = state.elapsed;
    let tight = QuadratureSpec {
        abs_tol: spec.abs_tol.min(1e-13),
        rel_tol: spec.rel_tol.min(1e-12),
        max_subdivisions: spec.max_subdivisions,
        oscillatory_hint: (t > 0.0).then_some(t),
    };
    let inner = integrate(
        |x| Complex64::new(0.0, -x * t).exp() / (x * x + h * h),
        lo,
        hi,
        &tight,
    )?;
    let wave_out = Complex64::new(std::f64::consts::PI / h * (-h * t).exp(), 0.0) - inner.value;
    let phase = Complex64::new(0.0, -sys.bare_mass() * t).exp();
    let cross = (sigma * amp.conj() * phase * wave_out).re;
    let weight = (sys.width() / (2.0 * std::f64::consts::PI))
        * ((sigma.norm_sqr() + amp.norm_sqr()) * lorentz_out - 2.0 * cross);
    Ok(weight.max(0.0))
}

/// Evolves `state` freely for `dt`.
///
/// Fails with [`Error::NormLoss`] when the lattice cannot resolve the
/// packet emitted during `dt`.
pub fn evolve_free(
    state: &StateVector,
    sys: &ExponentialDecay,
    dt: f64,
    spec: &QuadratureSpec,
) -> Result<StateVector> {
    let mut next = state.clone();
    if dt == 0.0 {
        return Ok(next);
    }
    let empty = SnappedBand {
        first: 0,
        end: 0,
        half_width: 0.0,
        center: 0.0,
    };
    FreeKernel::new(sys, &state.lattice, &empty, dt, spec)?.apply(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Click,
    NoClick,
}

/// Result of one projective band measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Collapse {
    pub outcome: Outcome,
    pub posterior: StateVector,
    pub p_click: f64,
}

/// Click probability `Σ_band |amp_k|² dk` of a normalized state.
pub fn click_probability(state: &StateVector, band: &SnappedBand) -> f64 {
    state.band_weight(band)
}

/// Posterior for a prescribed outcome.
///
/// No click zeroes the band and rescales by `1/√(1 − p_click)`; a click
/// keeps only the band, rescaled by `1/√p_click`.
pub fn project(state: &StateVector, band: &SnappedBand, outcome: Outcome) -> Result<Collapse> {
    let p_click = click_probability(state, band);
    let mut posterior = state.clone();
    match outcome {
        Outcome::NoClick => {
            let keep = 1.0 - p_click;
            if keep <= DEGENERATE_LIMIT {
                return Err(Error::DegenerateCollapse(p_click));
            }
            posterior.amp_k[band.cells()]
                .iter_mut()
                .for_each(|c| *c = Complex64::new(0.0, 0.0));
            posterior.scale(keep.sqrt().recip());
        }
        Outcome::Click => {
            if p_click <= DEGENERATE_LIMIT {
                return Err(Error::DegenerateCollapse(p_click));
            }
            let cells = band.cells();
            for (j, c) in posterior.amp_k.iter_mut().enumerate() {
                if !cells.contains(&j) {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
            posterior.amp_s = Complex64::new(0.0, 0.0);
            posterior.tail_source = Complex64::new(0.0, 0.0);
            posterior.escaped = 0.0;
            posterior.scale(p_click.sqrt().recip());
        }
    }
    Ok(Collapse {
        outcome,
        posterior,
        p_click,
    })
}

/// Samples the outcome with probability `p_click` and collapses.
pub fn measure_collapse<R: Rng + ?Sized>(
    state: &StateVector,
    band: &SnappedBand,
    rng: &mut R,
) -> Result<Collapse> {
    let p_click = click_probability(state, band);
    let outcome = if rng.gen::<f64>() < p_click {
        Outcome::Click
    } else {
        Outcome::NoClick
    };
    project(state, band, outcome)
}

/// No-click branch of a pulsed run, followed through every pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicRun {
    pub band: SnappedBand,
    /// Click probability at pulse `m` given no earlier click.
    pub conditional_click: Vec<f64>,
    /// Probability of no click up to and including pulse `m`.
    pub no_click: Vec<f64>,
}

/// Propagates the conditional no-click state through `sched` and records
/// the branch probability after every pulse.
pub fn run_deterministic(
    sys: &ExponentialDecay,
    band: &DetectorBand,
    sched: &MeasurementSchedule,
    lattice: &KLattice,
    spec: &QuadratureSpec,
) -> Result<DeterministicRun> {
    let snapped = lattice.snap(band);
    let kernel = FreeKernel::new(sys, lattice, &snapped, sched.interval(), spec)?;
    let mut state = StateVector::undecayed(*lattice);
    let mut conditional_click = Vec::with_capacity(sched.pulses());
    let mut no_click = Vec::with_capacity(sched.pulses());
    let mut survived = 1.0;
    for _ in 0..sched.pulses() {
        kernel.apply(&mut state)?;
        let collapse = project(&state, &snapped, Outcome::NoClick)?;
        survived *= 1.0 - collapse.p_click;
        conditional_click.push(collapse.p_click);
        no_click.push(survived);
        state = collapse.posterior;
    }
    Ok(DeterministicRun {
        band: snapped,
        conditional_click,
        no_click,
    })
}

/// Norm of the state a time `t_prime` after a first no-click collapse at
/// `tau`, i.e. `|N|²[p(τ)p(t′) + p(τ)w_λ(t′) + X(t′)]` evaluated on the
/// lattice, far modes included.
pub fn post_collapse_norm(
    sys: &ExponentialDecay,
    band: &DetectorBand,
    tau: f64,
    t_prime: f64,
    lattice: &KLattice,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let snapped = lattice.snap(band);
    let mut state = StateVector::undecayed(*lattice);
    FreeKernel::new(sys, lattice, &snapped, tau, spec)?.apply(&mut state)?;
    let state = project(&state, &snapped, Outcome::NoClick)?.posterior;
    Ok(evolve_free(&state, sys, t_prime, spec)?.norm())
}

/// Inputs that fully determine a sampled run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub generator: String,
    pub trials: u64,
    pub width: f64,
    pub bare_mass: f64,
    pub band: SnappedBand,
    pub lattice: KLattice,
    pub schedule: MeasurementSchedule,
}

/// Monte Carlo record of when the first click happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub manifest: RunManifest,
    /// Entry `m − 1` counts first clicks at pulse `m`; the last entry counts
    /// trials without any click.
    pub histogram: Vec<u64>,
    /// Fraction of trials without a click up to each pulse.
    pub no_click: Vec<f64>,
}

impl TrajectoryStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Domain(e.to_string()))
    }
}

/// Samples `trials` measurement records with a seeded ChaCha8 generator.
///
/// Every trial follows the no-click branch until its first click, so the
/// conditional click probabilities are taken from [`run_deterministic`]
/// and each trial draws one uniform number per pulse.
pub fn run_sampled(
    sys: &ExponentialDecay,
    band: &DetectorBand,
    sched: &MeasurementSchedule,
    lattice: &KLattice,
    trials: u64,
    seed: u64,
    spec: &QuadratureSpec,
) -> Result<TrajectoryStats> {
    require(trials >= 1, "trials", "must be at least 1")?;
    let run = run_deterministic(sys, band, sched, lattice, spec)?;
    let n = sched.pulses();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut histogram = vec![0u64; n + 1];
    for _ in 0..trials {
        let step = run
            .conditional_click
            .iter()
            .position(|&p| rng.gen::<f64>() < p)
            .unwrap_or(n);
        histogram[step] += 1;
    }
    let mut clicked = 0;
    let no_click = histogram[..n]
        .iter()
        .map(|&h| {
            clicked += h;
            (trials - clicked) as f64 / trials as f64
        })
        .collect();
    Ok(TrajectoryStats {
        manifest: RunManifest {
            seed,
            generator: "ChaCha8Rng".into(),
            trials,
            width: sys.width(),
            bare_mass: sys.bare_mass(),
            band: run.band,
            lattice: *lattice,
            schedule: *sched,
        },
        histogram,
        no_click,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bang_bang::PulsedDetection;
    use approx::assert_abs_diff_eq;

    fn unit() -> ExponentialDecay {
        ExponentialDecay::new(1.0).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn lattice() -> KLattice {
        KLattice::reference(1.0)
    }

    #[test]
    fn lattice_geometry() {
        let l = KLattice::new(2.0, 4).unwrap();
        assert_eq!(l.spacing(), 1.0);
        assert_eq!(l.nodes().collect::<Vec<_>>(), vec![-1.5, -0.5, 0.5, 1.5]);
        assert!(KLattice::new(1.0, 1).is_err());
        assert!(KLattice::new(0.0, 8).is_err());
    }

    #[test]
    fn snapping_puts_edges_on_boundaries() {
        let l = lattice();
        let s = l.snap(&DetectorBand::new(1.0).unwrap());
        let dk = l.spacing();
        assert!((s.half_width - 1.0).abs() <= 0.5 * dk);
        assert_abs_diff_eq!(s.center, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            (s.end - s.first) as f64 * dk,
            2.0 * s.half_width,
            epsilon = 1e-9
        );
        assert!(l.snap(&DetectorBand::new(0.0).unwrap()).is_empty());
        let all = l.snap(&DetectorBand::perfect());
        assert_eq!(all.cells(), 0..l.n_points());
    }

    #[test]
    fn coverage_warning_for_narrow_grid() {
        let band = DetectorBand::new(1.0).unwrap();
        assert!(lattice().coverage_warning(&unit(), &band).is_none());
        let narrow = KLattice::new(10.0, 1 << 12).unwrap();
        assert!(narrow.coverage_warning(&unit(), &band).is_some());
    }

    #[test]
    fn zero_step_is_identity() {
        let s = StateVector::undecayed(lattice());
        assert_eq!(evolve_free(&s, &unit(), 0.0, &spec()).unwrap(), s);
    }

    #[test]
    fn emitted_band_weight_matches_closed_form() {
        let sys = unit();
        let l = lattice();
        let band = l.snap(&DetectorBand::new(1.0).unwrap());
        let s = evolve_free(&StateVector::undecayed(l), &sys, 0.5, &spec()).unwrap();
        let w = band_click_probability(&sys, &band.as_band(), 0.5, &spec()).unwrap();
        assert_abs_diff_eq!(s.band_weight(&band), w, epsilon = 1e-7);
    }

    #[test]
    fn norm_preserved_from_pure_state() {
        let s = evolve_free(&StateVector::undecayed(lattice()), &unit(), 1.0, &spec()).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-8);
        assert!(s.escaped() > 1e-4 && s.escaped() < 1e-2);
    }

    #[test]
    fn coarse_lattice_flags_norm_loss() {
        let coarse = KLattice::new(200.0, 1 << 8).unwrap();
        let r = evolve_free(&StateVector::undecayed(coarse), &unit(), 5.0, &spec());
        assert!(matches!(r, Err(Error::NormLoss { .. })));
    }

    #[test]
    fn blind_band_leaves_state_alone() {
        let l = lattice();
        let s = evolve_free(&StateVector::undecayed(l), &unit(), 0.5, &spec()).unwrap();
        let c = project(
            &s,
            &l.snap(&DetectorBand::new(0.0).unwrap()),
            Outcome::NoClick,
        )
        .unwrap();
        assert_eq!(c.p_click, 0.0);
        assert_eq!(c.posterior, s);
    }

    #[test]
    fn pure_state_never_clicks() {
        let l = lattice();
        let s = StateVector::undecayed(l);
        let band = l.snap(&DetectorBand::new(3.0).unwrap());
        assert_eq!(click_probability(&s, &band), 0.0);
        assert!(matches!(
            project(&s, &band, Outcome::Click),
            Err(Error::DegenerateCollapse(_))
        ));
    }

    #[test]
    fn first_collapse_posterior() {
        let sys = unit();
        let l = lattice();
        let band = l.snap(&DetectorBand::new(1.0).unwrap());
        let s = evolve_free(&StateVector::undecayed(l), &sys, 0.5, &spec()).unwrap();
        let c = project(&s, &band, Outcome::NoClick).unwrap();
        let w = band_click_probability(&sys, &band.as_band(), 0.5, &spec()).unwrap();
        assert_abs_diff_eq!(
            c.posterior.amp_s.norm(),
            (-0.25f64).exp() / (1.0 - w).sqrt(),
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(c.posterior.norm(), 1.0, epsilon = 1e-10);
        assert_eq!(c.posterior.band_weight(&band), 0.0);
    }

    #[test]
    fn click_posterior_lives_in_band() {
        let l = lattice();
        let band = l.snap(&DetectorBand::new(1.0).unwrap());
        let s = evolve_free(&StateVector::undecayed(l), &unit(), 0.5, &spec()).unwrap();
        let c = project(&s, &band, Outcome::Click).unwrap();
        assert_eq!(c.posterior.amp_s, Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!(c.posterior.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.posterior.band_weight(&band), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn repeated_measurement_is_idempotent() {
        let l = lattice();
        let band = l.snap(&DetectorBand::new(1.0).unwrap());
        let s = evolve_free(&StateVector::undecayed(l), &unit(), 0.5, &spec()).unwrap();
        let once = project(&s, &band, Outcome::NoClick).unwrap().posterior;
        let twice = project(&once, &band, Outcome::NoClick).unwrap();
        assert_eq!(twice.p_click, 0.0);
    }

    #[test]
    fn sampled_collapse_uses_click_probability() {
        let l = lattice();
        let band = l.snap(&DetectorBand::new(1.0).unwrap());
        let s = evolve_free(&StateVector::undecayed(l), &unit(), 0.5, &spec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = measure_collapse(&s, &band, &mut rng).unwrap();
        assert_eq!(c.p_click, click_probability(&s, &band));
    }

    #[test]
    fn deterministic_first_two_pulses() {
        let sys = unit();
        let sched = MeasurementSchedule::new(0.5, 2).unwrap();
        let run = run_deterministic(
            &sys,
            &DetectorBand::new(1.0).unwrap(),
            &sched,
            &lattice(),
            &spec(),
        )
        .unwrap();
        let w = band_click_probability(&sys, &run.band.as_band(), 0.5, &spec()).unwrap();
        assert_abs_diff_eq!(run.no_click[0], 1.0 - w, epsilon = 1e-7);
        assert_abs_diff_eq!(
            run.no_click[1],
            1.0 - w - (-0.5f64).exp() * w,
            epsilon = 1e-7
        );
    }

    #[test]
    fn deterministic_matches_closed_form_at_ten_pulses() {
        let sys = unit();
        let sched = MeasurementSchedule::new(0.5, 10).unwrap();
        let run = run_deterministic(
            &sys,
            &DetectorBand::new(1.0).unwrap(),
            &sched,
            &lattice(),
            &spec(),
        )
        .unwrap();
        let closed = PulsedDetection::new(&sys, &run.band.as_band(), 0.5, &spec()).unwrap();
        for (j, &p) in run.no_click.iter().enumerate() {
            assert_abs_diff_eq!(p, closed.no_click_after(j + 1), epsilon = 1e-6);
        }
    }

    #[test]
    fn first_collapse_norm_is_one() {
        let n = post_collapse_norm(
            &unit(),
            &DetectorBand::new(1.0).unwrap(),
            0.5,
            0.0,
            &lattice(),
            &spec(),
        )
        .unwrap();
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn post_collapse_norm_matches_continuum() {
        // continuum quadrature of |N|²[p(τ)p(t′) + p(τ)w_λ(t′) + ∫_R |…|²]
        // with the band edge at its snapped position 1.0009765625
        let expected = [
            (0.125, 0.972_229_699_558_099_5),
            (0.25, 0.946_560_635_849_663_9),
            (0.5, 0.901_387_427_872_607_1),
        ];
        for (t_prime, want) in expected {
            let n = post_collapse_norm(
                &unit(),
                &DetectorBand::new(1.0).unwrap(),
                0.5,
                t_prime,
                &lattice(),
                &spec(),
            )
            .unwrap();
            assert_abs_diff_eq!(n, want, epsilon = 1e-7);
        }
    }

    #[test]
    fn far_weight_tracks_unitarity_without_collapse() {
        let sys = ExponentialDecay::with_bare_mass(1.0, 0.3).unwrap();
        let mut s = StateVector::undecayed(KLattice::new(50.0, 1 << 15).unwrap());
        for _ in 0..6 {
            s = evolve_free(&s, &sys, 0.4, &spec()).unwrap();
            assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn blind_detector_never_clicks() {
        let sched = MeasurementSchedule::new(0.5, 5).unwrap();
        let stats = run_sampled(
            &unit(),
            &DetectorBand::new(0.0).unwrap(),
            &sched,
            &lattice(),
            1000,
            1,
            &spec(),
        )
        .unwrap();
        assert_eq!(stats.histogram, vec![0, 0, 0, 0, 0, 1000]);
        assert!(stats.no_click.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn sampled_histogram_bookkeeping_and_determinism() {
        let sched = MeasurementSchedule::new(0.5, 5).unwrap();
        let band = DetectorBand::new(1.0).unwrap();
        let a = run_sampled(&unit(), &band, &sched, &lattice(), 5000, 42, &spec()).unwrap();
        let b = run_sampled(&unit(), &band, &sched, &lattice(), 5000, 42, &spec()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.histogram.iter().sum::<u64>(), 5000);
        assert!(a.no_click.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(TrajectoryStats::from_json(&a.to_json()).unwrap(), a);
        let c = run_sampled(&unit(), &band, &sched, &lattice(), 5000, 43, &spec()).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn sampled_geometric_ratio_for_wide_band() {
        let sys = unit();
        let tau = 0.5;
        let l = KLattice::new(200.0, 1 << 16).unwrap();
        let sched = MeasurementSchedule::new(tau, 2).unwrap();
        let trials = 200_000u64;
        let stats = run_sampled(
            &sys,
            &DetectorBand::new(150.0).unwrap(),
            &sched,
            &l,
            trials,
            9,
            &spec(),
        )
        .unwrap();
        let (h1, h2) = (stats.histogram[0] as f64, stats.histogram[1] as f64);
        let ratio = h2 / h1;
        // delta-method standard error of a ratio of multinomial counts
        let sigma = ratio * (1.0 / h1 + 1.0 / h2).sqrt();
        assert!(
            (ratio - (-tau).exp()).abs() < 3.0 * sigma,
            "ratio {ratio} ± {sigma}"
        );
    }
}
