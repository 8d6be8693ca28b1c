use thiserror::Error;

/// Failure modes shared by every computation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("root finder did not converge within {iterations} iterations")]
    RootNonConvergence { iterations: usize },

    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("energy {0} sits on a branch point of the self-energy")]
    BranchPoint(f64),

    #[error("mass {0} sits on a threshold or cutoff edge of the loop")]
    ThresholdPoint(f64),

    #[error("band click probability {click} exceeds the decayed weight {decayed}")]
    BandTooEffective { click: f64, decayed: f64 },

    #[error("lattice norm drift {drift:e} exceeds {limit:e}")]
    NormLoss { drift: f64, limit: f64 },

    #[error("no-click branch has vanishing probability (p_click = {0})")]
    DegenerateCollapse(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require(cond: bool, name: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.into(),
        })
    }
}
