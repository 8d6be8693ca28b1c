//! The four subcommands. Each returns the files it wants written; the
//! binary writes them atomically.

use rayon::prelude::*;
use serde_json::json;

use zeno_core::bang_bang::{
    presets::{self, ZenoPreset},
    schulman_sigma, zeno_freeze_curve, DetectorBand, ExponentialDecay, MeasurementSchedule,
    PulsedDetection,
};
use zeno_core::collapse_oracle::{
    evolve_free, project, run_deterministic, run_sampled, KLattice, Outcome, StateVector,
};
use zeno_core::numerics::QuadratureSpec;
use zeno_core::qft_model::{BreitWigner, QftModel};
use zeno_core::qm_model::CutoffLeeModel;

use crate::config::{format_f64, ModelConfig, RunConfig};
use crate::curve::CurveFile;
use crate::error::CliError;

/// A file produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

/// Options that come from the command line rather than the config file.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub preset: Option<ZenoPreset>,
    pub seed: Option<u64>,
}

pub fn find_preset(name: &str) -> Result<ZenoPreset, CliError> {
    presets::by_name(name).ok_or_else(|| {
        let known: Vec<&str> = presets::ALL.iter().map(|p| p.name).collect();
        CliError::config(
            "preset",
            format!("unknown preset `{name}` (known: {})", known.join(", ")),
        )
    })
}

/// Config text equivalent to a preset, used as the base under a user config.
pub fn preset_config(preset: &ZenoPreset) -> String {
    format!(
        "exponential.width = {}\ndetector.lambda = {}\nschedule.tau = {}\nschedule.t_total = {}\n",
        format_f64(preset.width),
        format_f64(preset.band_half_width),
        format_f64(preset.interval),
        format_f64(preset.total_time),
    )
}

fn quadrature(cfg: &RunConfig) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: cfg.numerics.abs_tol,
        rel_tol: cfg.numerics.rel_tol,
        max_subdivisions: cfg.numerics.max_subdivisions,
        oscillatory_hint: None,
    }
}

fn header(command: &str, cfg: &RunConfig, ctx: &Context) -> CurveFile {
    let mut c = CurveFile::new(&[]);
    c.meta(
        "generator",
        format!("zeno-lab {}", env!("CARGO_PKG_VERSION")),
    );
    c.meta("command", command);
    match &ctx.preset {
        Some(p) => {
            c.meta("preset", p.name).meta("provenance", p.provenance);
            if p.target.is_finite() {
                c.meta_f64("preset_target", p.target);
            }
        }
        None => {
            c.meta("provenance", "user-config");
        }
    }
    for line in cfg.physics.to_lines() {
        let (k, v) = line
            .split_once(" = ")
            .expect("physics lines are key = value");
        c.meta(k, v);
    }
    c
}

fn with_columns(mut c: CurveFile, columns: &[&str]) -> CurveFile {
    c.columns = columns.iter().map(|s| s.to_string()).collect();
    c
}

fn finish(c: CurveFile, name: &str, probability_columns: &[&str]) -> Result<Artifact, CliError> {
    c.check(probability_columns).map_err(CliError::Validation)?;
    Ok(Artifact {
        name: name.to_string(),
        contents: c.render(),
    })
}

fn exponential(cfg: &RunConfig, command: &str) -> Result<ExponentialDecay, CliError> {
    match cfg.physics.model {
        ModelConfig::Exponential { width, bare_mass } => {
            Ok(ExponentialDecay::with_bare_mass(width, bare_mass)?)
        }
        other => Err(CliError::config(
            "model",
            format!(
                "`{command}` needs the exponential model, got {}",
                other.kind()
            ),
        )),
    }
}

fn detector(cfg: &RunConfig) -> Result<DetectorBand, CliError> {
    let d = cfg
        .physics
        .detector
        .ok_or_else(|| CliError::config("detector.lambda", "missing required key"))?;
    Ok(DetectorBand::centered(d.lambda, d.center)?)
}

/// `(τ, n)` from `schedule.n` or, failing that, `round(t_total/τ)`.
fn schedule(cfg: &RunConfig) -> Result<MeasurementSchedule, CliError> {
    let s = cfg
        .physics
        .schedule
        .as_ref()
        .ok_or_else(|| CliError::config("schedule.tau", "missing required key"))?;
    let tau = s
        .tau
        .ok_or_else(|| CliError::config("schedule.tau", "missing required key"))?;
    let n = match (s.n, s.t_total) {
        (Some(n), _) => n,
        (None, Some(t)) => (t / tau).round().max(1.0) as usize,
        (None, None) => {
            return Err(CliError::config(
                "schedule.n",
                "set schedule.n or schedule.t_total",
            ))
        }
    };
    Ok(MeasurementSchedule::new(tau, n)?)
}

pub fn cmd_survival(cfg: &RunConfig, ctx: &Context) -> Result<CommandOutput, CliError> {
    let times = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::config("grid", "a time grid is required"))?;
    if times.is_empty() {
        return Err(CliError::config(
            "grid",
            "EmptyGrid: the time grid has no points",
        ));
    }
    if times[0] < 0.0 {
        return Err(CliError::config("grid", "times must be non-negative"));
    }
    let spec = quadrature(cfg);
    let base = header("survival", cfg, ctx);
    let curve = match cfg.physics.model {
        ModelConfig::Exponential { width, bare_mass } => {
            let sys = ExponentialDecay::with_bare_mass(width, bare_mass)?;
            let mut c = with_columns(base, &["time", "survival"]);
            for &t in times {
                c.push(vec![t, sys.survival(t)]);
            }
            finish(c, "survival.csv", &["survival"])?
        }
        ModelConfig::Qm {
            bare_mass,
            cutoff,
            coupling,
            window_center,
        } => {
            let model =
                CutoffLeeModel::with_window_center(bare_mass, cutoff, coupling, window_center)?;
            let gamma = model.bw_width();
            let survival = times
                .par_iter()
                .map(|&t| model.survival_probability(t, &spec))
                .collect::<Result<Vec<_>, _>>()?;
            let mut c = with_columns(base, &["time", "survival", "bw_reference"]);
            let mut worst: f64 = 0.0;
            for (&t, &p) in times.iter().zip(&survival) {
                let reference = (-gamma * t).exp();
                worst = worst.max((p - reference).abs());
                c.push(vec![t, p, reference]);
            }
            c.meta_f64("renormalized_mass", model.renormalized_mass())
                .meta_f64("bw_width", gamma)
                .meta_f64("zeno_time", model.zeno_time())
                .meta_f64("max_deviation_from_bw", worst);
            finish(c, "survival.csv", &["survival", "bw_reference"])?
        }
        ModelConfig::Qft { .. } => {
            return Err(CliError::config(
                "model",
                "`survival` needs the qm or exponential model, got qft",
            ))
        }
    };
    Ok(CommandOutput {
        artifacts: vec![curve],
        warnings: Vec::new(),
    })
}

pub fn cmd_zeno(cfg: &RunConfig, ctx: &Context) -> Result<CommandOutput, CliError> {
    let sys = exponential(cfg, "zeno")?;
    let band = detector(cfg)?;
    let sched = schedule(cfg)?;
    let spec = quadrature(cfg);
    let pulsed = PulsedDetection::new(&sys, &band, sched.interval(), &spec)?;

    let mut c = with_columns(header("zeno", cfg, ctx), &["time", "no_click", "survival"]);
    c.meta("pulses", sched.pulses())
        .meta_f64("band_click_probability", pulsed.band_click())
        .meta_f64("saturation_value", pulsed.saturation())
        .meta_f64("schulman_sigma", schulman_sigma(sched.interval())?);
    c.push(vec![0.0, 1.0, 1.0]);
    for n in 1..=sched.pulses() {
        let t = n as f64 * sched.interval();
        c.push(vec![t, pulsed.no_click_after(n), sys.survival(t)]);
    }
    let mut artifacts = vec![finish(c, "zeno.csv", &["no_click", "survival"])?];

    let taus = cfg
        .physics
        .schedule
        .as_ref()
        .map(|s| s.taus.clone())
        .unwrap_or_default();
    if !taus.is_empty() {
        let t_total = cfg
            .physics
            .schedule
            .as_ref()
            .and_then(|s| s.t_total)
            .ok_or_else(|| CliError::config("schedule.t_total", "required with schedule.taus"))?;
        let points = taus
            .par_iter()
            .map(|&tau| zeno_freeze_curve(&sys, &band, t_total, &[tau], &spec).map(|v| v[0]))
            .collect::<Result<Vec<_>, _>>()?;
        let mut f = with_columns(
            header("zeno", cfg, ctx),
            &["tau", "pulses", "time", "no_click", "schulman_sigma"],
        );
        for p in points {
            f.push(vec![
                p.interval,
                p.pulses as f64,
                p.time,
                p.no_click,
                schulman_sigma(p.interval)?,
            ]);
        }
        artifacts.push(finish(f, "zeno_freeze.csv", &["no_click"])?);
    }
    Ok(CommandOutput {
        artifacts,
        warnings: Vec::new(),
    })
}

struct Check {
    name: &'static str,
    deviation: f64,
    limit: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.deviation <= self.limit
    }
}

/// Runs the state-vector oracle against the closed forms. Returns the
/// report and, when any check fails, a [`CliError::Validation`] naming it.
pub fn cmd_validate(
    cfg: &RunConfig,
    ctx: &Context,
) -> Result<(CommandOutput, Option<CliError>), CliError> {
    let sys = exponential(cfg, "validate")?;
    let band = detector(cfg)?;
    let sched = schedule(cfg)?;
    let spec = quadrature(cfg);
    let lattice = KLattice::new(
        cfg.numerics.k_max.unwrap_or(200.0 * sys.width()),
        cfg.numerics.n_points,
    )?;
    let seed = ctx.seed.unwrap_or(cfg.numerics.seed);
    let trials = cfg.numerics.trials;
    let snapped = lattice.snap(&band);
    let mut warnings: Vec<String> = lattice.coverage_warning(&sys, &band).into_iter().collect();
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();

    match run_deterministic(&sys, &band, &sched, &lattice, &spec) {
        Err(zeno_core::Error::NormLoss { drift, limit }) => checks.push(Check {
            name: "lattice_resolution",
            deviation: drift,
            limit,
        }),
        Err(e) => return Err(e.into()),
        Ok(run) => {
            let closed = PulsedDetection::new(&sys, &snapped.as_band(), sched.interval(), &spec)?;
            let oracle = run
                .no_click
                .iter()
                .enumerate()
                .map(|(j, p)| (p - closed.no_click_after(j + 1)).abs())
                .fold(0.0, f64::max);
            checks.push(Check {
                name: "oracle_equivalence",
                deviation: oracle,
                limit: 1e-3,
            });

            let evolved = evolve_free(
                &StateVector::undecayed(lattice),
                &sys,
                sched.interval(),
                &spec,
            )?;
            checks.push(Check {
                name: "pure_state_norm",
                deviation: (evolved.norm() - 1.0).abs(),
                limit: 1e-8,
            });

            let once = project(&evolved, &snapped, Outcome::NoClick)?.posterior;
            checks.push(Check {
                name: "collapse_idempotence",
                deviation: project(&once, &snapped, Outcome::NoClick)?.p_click,
                limit: 0.0,
            });

            if trials > 0 {
                let stats = run_sampled(&sys, &band, &sched, &lattice, trials, seed, &spec)?;
                let p = closed.no_click_after(sched.pulses());
                let empirical = *stats.no_click.last().expect("at least one pulse");
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                checks.push(Check {
                    name: "sampled_no_click",
                    deviation: (empirical - p).abs(),
                    limit: 3.0 * sigma,
                });
                artifacts.push(Artifact {
                    name: "trajectories.json".into(),
                    contents: stats.to_json() + "\n",
                });
            }
        }
    }

    if snapped.half_width != band.half_width() && band.half_width().is_finite() {
        warnings.push(format!(
            "band half-width snapped from {} to {} to match the lattice",
            band.half_width(),
            snapped.half_width
        ));
    }
    let passed = checks.iter().all(Check::passed);
    let report = json!({
        "generator": format!("zeno-lab {}", env!("CARGO_PKG_VERSION")),
        "command": "validate",
        "physics": cfg.physics.to_lines(),
        "lattice": { "k_max": lattice.k_max(), "n_points": lattice.n_points() },
        "snapped_lambda": snapped.half_width,
        "seed": seed,
        "trials": trials,
        "warnings": warnings,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "passed": c.passed(),
            "deviation": c.deviation,
            "limit": c.limit,
        })).collect::<Vec<_>>(),
        "max_deviation": checks.iter().filter(|c| c.name == "oracle_equivalence").map(|c| c.deviation).fold(0.0, f64::max),
        "passed": passed,
    });
    artifacts.insert(
        0,
        Artifact {
            name: "validate.json".into(),
            contents: serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        },
    );
    let failure = checks.iter().find(|c| !c.passed()).map(|c| {
        CliError::Validation(format!(
            "{}: deviation {:e} exceeds {:e}",
            c.name, c.deviation, c.limit
        ))
    });
    Ok((
        CommandOutput {
            artifacts,
            warnings,
        },
        failure,
    ))
}

pub fn cmd_qft(cfg: &RunConfig, ctx: &Context) -> Result<CommandOutput, CliError> {
    let ModelConfig::Qft {
        bare_mass,
        product_mass,
        coupling,
        cutoff,
    } = cfg.physics.model
    else {
        return Err(CliError::config(
            "model",
            format!(
                "`qft` needs the qft model, got {}",
                cfg.physics.model.kind()
            ),
        ));
    };
    let model = QftModel::new(bare_mass, product_mass, coupling, cutoff)?;
    let masses = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::config("grid", "a mass grid is required"))?;
    if masses.is_empty() {
        return Err(CliError::config(
            "grid",
            "EmptyGrid: the mass grid has no points",
        ));
    }
    if masses[0] <= 0.0 {
        return Err(CliError::config("grid", "masses must be positive"));
    }
    let spec = quadrature(cfg);
    let (edges, usable): (Vec<f64>, Vec<f64>) = masses
        .iter()
        .partition(|&&x| x == model.threshold() || x == model.cutoff_edge());
    let rows = usable
        .par_iter()
        .map(|&x| -> Result<Vec<f64>, zeno_core::Error> {
            let pi = model.polarization(x, &spec)?;
            Ok(vec![
                x,
                model.tree_level_width(x),
                pi.re,
                pi.im,
                model.spectral_function(x, &spec)?,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let optical = rows
        .iter()
        .filter(|r| model.is_open(r[0]))
        .map(|r| (r[3] / (r[0] * r[1]) - 1.0).abs())
        .fold(0.0, f64::max);
    let bw = model.breit_wigner(&spec)?;

    let mut c = with_columns(
        header("qft", cfg, ctx),
        &["x", "gamma_tl", "re_pi", "im_pi", "spectral"],
    );
    c.meta_f64("renormalized_mass", bw.mass)
        .meta_f64("width", bw.width)
        .meta_f64("optical_max_rel_dev", optical);
    if !edges.is_empty() {
        let list: Vec<String> = edges.iter().map(|&x| format_f64(x)).collect();
        c.meta("skipped_edge_points", list.join(" "));
    }
    for row in rows {
        c.push(row);
    }
    if c.rows.iter().any(|r| r[4] < 0.0) {
        return Err(CliError::Validation("negative spectral function".into()));
    }
    let main = finish(c, "qft.csv", &[])?;

    let table = |bw: BreitWigner, name: &str| -> Result<Artifact, CliError> {
        let mut t = with_columns(
            header("qft", cfg, ctx),
            &["x", "relativistic", "nonrelativistic", "relative_gap"],
        );
        t.meta_f64("bw_mass", bw.mass)
            .meta_f64("bw_width", bw.width);
        for row in bw.comparison_table(10) {
            t.push(vec![
                row.x,
                row.relativistic,
                row.nonrelativistic,
                row.relative_gap,
            ]);
        }
        finish(t, name, &[])
    };
    let broad = BreitWigner::new(bw.mass, 0.3 * bw.mass)?;
    Ok(CommandOutput {
        artifacts: vec![
            main,
            table(bw, "bw_comparison.csv")?,
            table(broad, "bw_broad.csv")?,
        ],
        warnings: Vec::new(),
    })
}
