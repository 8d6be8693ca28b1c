use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{require, Error, Result};

/// Panel cap when an oscillatory hint asks for period splitting.
const MAX_PERIOD_PANELS: usize = 1 << 20;

// 21-point Kronrod abscissae and weights with the embedded 10-point Gauss
// rule (odd Kronrod nodes). Kept at published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_931_996_785,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and hints for [`integrate`].
///
/// Convergence means the summed error estimate is at most
/// `max(abs_tol, rel_tol * |result|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Bisections allowed beyond the initial panels.
    pub max_subdivisions: usize,
    /// Angular frequency of the dominant oscillation. When set, finite
    /// ranges are pre-split into panels one period long.
    pub oscillatory_hint: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 20_000,
            oscillatory_hint: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn oscillating(mut self, omega: f64) -> Self {
        self.oscillatory_hint = Some(omega);
        self
    }

    pub fn validate(&self) -> Result<()> {
        require(self.abs_tol > 0.0, "abs_tol", "must be positive")?;
        require(self.rel_tol > 0.0, "rel_tol", "must be positive")?;
        require(
            self.max_subdivisions >= 1,
            "max_subdivisions",
            "must be at least 1",
        )?;
        if let Some(w) = self.oscillatory_hint {
            require(
                w.is_finite() && w >= 0.0,
                "oscillatory_hint",
                "must be finite and non-negative",
            )?;
        }
        Ok(())
    }
}

/// A quadrature result together with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut scaled = err.abs();
    if resasc != 0.0 && scaled != 0.0 {
        scaled = resasc * (200.0 * scaled / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * resabs);
    }
    scaled
}

fn gauss_kronrod<F>(f: &F, a: f64, b: f64) -> Result<Segment>
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut resabs = fc.norm() * WGK[10];
    let mut samples = [(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); 10];

    for (j, sample) in samples.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let lo = f(center - dx);
        let hi = f(center + dx);
        *sample = (lo, hi);
        kronrod += (lo + hi) * WGK[j];
        resabs += (lo.norm() + hi.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (lo + hi) * WG[j / 2];
        }
    }

    let mean = kronrod * 0.5;
    let mut resasc = WGK[10] * (fc - mean).norm();
    for (j, (lo, hi)) in samples.iter().enumerate() {
        resasc += WGK[j] * ((lo - mean).norm() + (hi - mean).norm());
    }

    let scale = half.abs();
    let value = kronrod * half;
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Domain(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    let error = rescale_error(
        ((kronrod - gauss) * half).norm(),
        resabs * scale,
        resasc * scale,
    );
    Ok(Segment { a, b, value, error })
}

fn adaptive<F>(f: &F, panels: &[(f64, f64)], spec: &QuadratureSpec) -> Result<Estimate<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    let mut heap = BinaryHeap::with_capacity(panels.len() + spec.max_subdivisions.min(1 << 16));
    for &(a, b) in panels {
        heap.push(gauss_kronrod(f, a, b)?);
    }
    let sum = |heap: &BinaryHeap<Segment>| {
        heap.iter()
            .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), s| {
                (v + s.value, e + s.error)
            })
    };

    let (mut total, mut total_err) = sum(&heap);
    let mut splits = 0usize;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.norm());
        if total_err <= tol {
            // incremental bookkeeping drifts; confirm with a fresh sum
            let (exact, exact_err) = sum(&heap);
            total = exact;
            total_err = exact_err;
            if total_err <= spec.abs_tol.max(spec.rel_tol * total.norm()) {
                return Ok(Estimate {
                    value: total,
                    error: total_err,
                });
            }
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                subdivisions: splits,
                estimate: total.norm(),
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel at floating-point resolution; nothing left to refine
            return Err(Error::NonConvergence {
                subdivisions: splits,
                estimate: total.norm(),
                error: total_err,
            });
        }
        let left = gauss_kronrod(f, worst.a, mid)?;
        let right = gauss_kronrod(f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
    }
}

fn period_panels(a: f64, b: f64, omega: Option<f64>) -> Result<Vec<(f64, f64)>> {
    let count = match omega {
        Some(w) if w > 0.0 => {
            let periods = ((b - a) * w / (2.0 * PI)).ceil();
            if periods > MAX_PERIOD_PANELS as f64 {
                return Err(Error::Domain(format!(
                    "oscillatory range needs {periods} period panels (cap {MAX_PERIOD_PANELS})"
                )));
            }
            (periods as usize).max(1)
        }
        _ => 1,
    };
    let width = (b - a) / count as f64;
    Ok((0..count)
        .map(|j| {
            let lo = a + j as f64 * width;
            let hi = if j + 1 == count {
                b
            } else {
                a + (j + 1) as f64 * width
            };
            (lo, hi)
        })
        .collect())
}

/// Integrates `f` over `[a, b]`.
///
/// Infinite endpoints are mapped onto `[0, 1)` with `x = a + t/(1-t)`
/// (mirrored for a lower infinite limit; doubly infinite ranges are split
/// at zero). The oscillatory hint only applies to finite ranges.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    spec.validate()?;
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::Domain(format!(
            "integration range [{a}, {b}] is empty"
        )));
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, &period_panels(a, b, spec.oscillatory_hint)?, spec),
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            };
            adaptive(&g, &[(0.0, 1.0)], spec)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            };
            adaptive(&g, &[(0.0, 1.0)], spec)
        }
        (false, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                let x = t / s;
                (f(x) + f(-x)) / (s * s)
            };
            adaptive(&g, &[(0.0, 1.0)], spec)
        }
    }
}

/// Integrates over `points[0]..points[last]` with the interior points used
/// as forced panel boundaries (peaks, kinks, integrable singularities).
pub fn integrate_points<F>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::Domain("need at least two break points".into()));
    }
    let mut panels = Vec::new();
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::Domain(format!(
                "break points must be finite and strictly increasing, got {a} then {b}"
            )));
        }
        panels.extend(period_panels(a, b, spec.oscillatory_hint)?);
    }
    adaptive(&f, &panels, spec)
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate<f64>>
where
    F: Fn(f64) -> f64,
{
    let est = integrate(|x| Complex64::new(f(x), 0.0), a, b, spec)?;
    Ok(Estimate {
        value: est.value.re,
        error: est.error,
    })
}
