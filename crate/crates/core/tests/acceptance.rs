//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every verdict is printed; the
//! process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use zeno_core::bang_bang::{
    band_click_probability, presets, zeno_freeze_curve, DetectorBand, ExponentialDecay,
    MeasurementSchedule, PulsedDetection,
};
use zeno_core::collapse_oracle::{post_collapse_norm, run_deterministic, KLattice};
use zeno_core::numerics::QuadratureSpec;
use zeno_core::qft_model::QftModel;
use zeno_core::qm_model::CutoffLeeModel;
use zeno_core::Result;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn unit() -> ExponentialDecay {
    ExponentialDecay::new(1.0).expect("unit width")
}

fn perfect_detector_identity() -> Result<Verdict> {
    let sys = unit();
    let band = DetectorBand::new(1e4)?;
    let mut worst: f64 = 0.0;
    for tau in [0.1, 0.5, 1.0] {
        let d = PulsedDetection::new(&sys, &band, tau, &spec())?;
        for n in 1..=50 {
            worst = worst.max((d.no_click_after(n) - sys.survival(n as f64 * tau)).abs());
        }
    }
    verdict(
        worst <= 1e-3,
        format!("max |p_nc - e^(-Γnτ)| = {worst:.3e} (limit 1e-3)"),
    )
}

fn mode_norm_identity() -> Result<Verdict> {
    let sys = unit();
    // [−10⁹, 10⁹] leaves out less than 1e-9 of the weight
    let band = DetectorBand::new(1e9)?;
    let mut worst: f64 = 0.0;
    for tau in [0.1, 1.0, 5.0] {
        let w = band_click_probability(&sys, &band, tau, &spec())?;
        worst = worst.max((w - (1.0 - (-tau).exp())).abs());
    }
    verdict(
        worst <= 1e-6,
        format!("max |∫|b|² - (1 - e^(-Γτ))| = {worst:.3e} (limit 1e-6)"),
    )
}

fn oracle_deviation(points: usize) -> Result<f64> {
    let sys = unit();
    let sched = MeasurementSchedule::new(0.5, 20)?;
    let lattice = KLattice::new(200.0, points)?;
    let run = run_deterministic(&sys, &DetectorBand::new(1.0)?, &sched, &lattice, &spec())?;
    let closed = PulsedDetection::new(&sys, &run.band.as_band(), 0.5, &spec())?;
    Ok(run
        .no_click
        .iter()
        .enumerate()
        .map(|(j, p)| (p - closed.no_click_after(j + 1)).abs())
        .fold(0.0, f64::max))
}

fn oracle_equivalence() -> Result<Verdict> {
    let coarse = oracle_deviation(1 << 16)?;
    let fine = oracle_deviation(1 << 17)?;
    verdict(
        coarse <= 1e-3 && fine <= 0.5 * coarse,
        format!(
            "max dev 2^16: {coarse:.3e} (limit 1e-3), 2^17: {fine:.3e} (ratio {:.2}, need ≥ 2)",
            coarse / fine
        ),
    )
}

fn post_collapse_norm_unity() -> Result<Verdict> {
    let sys = unit();
    let band = DetectorBand::new(1.0)?;
    let lattice = KLattice::reference(1.0);
    let tau = 0.5;
    let mut norms = Vec::new();
    for t_prime in [0.25 * tau, 0.5 * tau, tau] {
        norms.push(post_collapse_norm(
            &sys,
            &band,
            tau,
            t_prime,
            &lattice,
            &spec(),
        )?);
    }
    let worst = norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    verdict(
        worst <= 1e-6,
        format!(
            "norms at t' = τ/4, τ/2, τ: {:.6}, {:.6}, {:.6} (limit 1 ± 1e-6)",
            norms[0], norms[1], norms[2]
        ),
    )
}

fn zeno_freeze() -> Result<Verdict> {
    let taus = [0.01, 0.05, 0.1, 0.5, 1.0];
    let curve = zeno_freeze_curve(&unit(), &DetectorBand::new(1.0)?, 5.0, &taus, &spec())?;
    let monotone = curve.windows(2).all(|w| w[1].no_click <= w[0].no_click);
    let first = curve[0].no_click;
    let values: Vec<String> = curve.iter().map(|p| format!("{:.4}", p.no_click)).collect();
    verdict(
        monotone && first > 0.95,
        format!(
            "p_nc(t=5) over τ = {taus:?}: [{}], monotone: {monotone}",
            values.join(", ")
        ),
    )
}

fn figure_presets() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (preset, target) in [(presets::FIG1_LEFT, 0.90), (presets::FIG1_RIGHT, 0.20)] {
        let sys = ExponentialDecay::new(preset.width)?;
        let band = DetectorBand::new(preset.band_half_width)?;
        let curve = zeno_freeze_curve(&sys, &band, preset.total_time, &[preset.interval], &spec())?;
        let value = curve[0].no_click;
        pass &= (value - target).abs() <= 0.02;
        parts.push(format!(
            "{}: {value:.4} (target {target} ± 0.02)",
            preset.name
        ));
    }
    verdict(pass, parts.join(", "))
}

fn exponential_limit() -> Result<Verdict> {
    let g: f64 = 1.0;
    let times: Vec<f64> = (0..=100).map(|j| 0.05 * j as f64).collect();
    let mut sups = Vec::new();
    for ratio in [1e2, 1e3, 1e4] {
        let model = CutoffLeeModel::new(0.0, ratio * g * g, g)?;
        let mut sup: f64 = 0.0;
        for &t in &times {
            let p = model.survival_probability(t, &spec())?;
            sup = sup.max((p - (-g * g * t).exp()).abs());
        }
        sups.push(sup);
    }
    let monotone = sups[0] > sups[1] && sups[1] > sups[2];
    verdict(
        sups[1] < 1e-2 && monotone,
        format!(
            "sup |p - e^(-g²t)| at Λ/g² = 1e2, 1e3, 1e4: {:.3e}, {:.3e}, {:.3e} (limit 1e-2 at 1e3, decreasing)",
            sups[0], sups[1], sups[2]
        ),
    )
}

fn short_time_law() -> Result<Verdict> {
    let (cutoff, g) = (10.0, 1.0);
    let model = CutoffLeeModel::new(0.0, cutoff, g)?;
    let tight = QuadratureSpec::with_tolerances(1e-15, 1e-13);
    let t = 0.01 * model.zeno_time();
    let ratio = |t: f64| -> Result<f64> { Ok(model.decay_probability(t, &tight)? / (t * t)) };
    let extrapolated = (4.0 * ratio(0.5 * t)? - ratio(t)?) / 3.0;
    let expected = g * g * cutoff / std::f64::consts::PI;
    let rel = (extrapolated / expected - 1.0).abs();
    verdict(
        rel <= 0.02,
        format!("Richardson (1-p)/t² = {extrapolated:.6}, g²Λ/π = {expected:.6}, rel dev {rel:.2e} (limit 2e-2)"),
    )
}

fn optical_theorem() -> Result<Verdict> {
    let spec = QuadratureSpec::with_tolerances(1e-14, 1e-12);
    let model = QftModel::new(1.0, 0.2, 0.3, 3.0)?;
    let (lo, hi) = (model.threshold(), model.cutoff_edge());
    let mut worst: f64 = 0.0;
    for j in 1..=20 {
        let x = lo + (hi - lo) * j as f64 / 21.0;
        let im = model.polarization(x, &spec)?.im;
        worst = worst.max((im / (x * model.tree_level_width(x)) - 1.0).abs());
    }
    let mut below = true;
    for (m, g, cutoff) in [
        (0.2, 0.3, 3.0),
        (0.0, 0.5, 2.0),
        (0.1, 0.2, 5.0),
        (0.3, 0.5, 5.0),
    ] {
        let model = QftModel::new(1.0, m, g, cutoff)?;
        below &= model.renormalized_mass(&spec)? < model.bare_mass();
    }
    verdict(
        worst <= 1e-6 && below,
        format!("max rel |2g²Im Σ - xΓ^tl| = {worst:.2e} (limit 1e-6), M < M0 on grid: {below}"),
    )
}

fn spectral_normalization() -> Result<Verdict> {
    let grid = [
        (0.0, 1.0, 0.3, 0.0),
        (0.0, 1.0, 0.5, 0.3),
        (0.2, 2.0, 0.8, 0.0),
        (0.0, 10.0, 1.0, 0.0),
        (0.0, 100.0, 1.0, 0.0),
    ];
    let mut worst: f64 = 0.0;
    for (m0, cutoff, g, center) in grid {
        let model = CutoffLeeModel::with_window_center(m0, cutoff, g, center)?;
        worst = worst.max((model.spectral_norm(&spec())?.value - 1.0).abs());
    }
    verdict(
        worst <= 1e-6,
        format!(
            "max |∫d_S - 1| over {} models = {worst:.2e} (limit 1e-6)",
            grid.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Result<Verdict>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("perfect-detector identity", perfect_detector_identity),
        ("mode-norm identity", mode_norm_identity),
        ("oracle equivalence", oracle_equivalence),
        ("post-collapse norm unity", post_collapse_norm_unity),
        ("zeno freeze", zeno_freeze),
        ("figure presets", figure_presets),
        ("exponential limit of the cutoff model", exponential_limit),
        ("short-time law", short_time_law),
        ("optical theorem and mass shift", optical_theorem),
        ("spectral normalization", spectral_normalization),
    ];
    let mut failures = 0;
    for (j, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.1}s]",
            j + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
