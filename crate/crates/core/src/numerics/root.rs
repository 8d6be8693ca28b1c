use crate::error::{require, Error, Result};

const MAX_BISECTIONS: usize = 2_000;

/// Bracket and width tolerance for [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSpec {
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub tol: f64,
}

impl RootSpec {
    pub fn new(bracket_lo: f64, bracket_hi: f64, tol: f64) -> Self {
        Self {
            bracket_lo,
            bracket_hi,
            tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.bracket_lo.is_finite() && self.bracket_hi.is_finite(),
            "bracket",
            "endpoints must be finite",
        )?;
        require(
            self.bracket_lo < self.bracket_hi,
            "bracket",
            format!(
                "lo {} must be below hi {}",
                self.bracket_lo, self.bracket_hi
            ),
        )?;
        require(self.tol > 0.0, "tol", "must be positive")
    }
}

/// Bisection on a sign-changing bracket.
///
/// Stops when the bracket is no wider than `spec.tol`, when the midpoint
/// can no longer be represented between the endpoints, or on an exact zero.
/// The midpoint of the final bracket is returned.
pub fn find_root<F>(f: F, spec: &RootSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let (mut lo, mut hi) = (spec.bracket_lo, spec.bracket_hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= spec.tol || !(mid > lo && mid < hi) {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootNonConvergence {
        iterations: MAX_BISECTIONS,
    })
}
