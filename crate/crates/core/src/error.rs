use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the decay engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("Newton iteration for pole {index} did not converge (last iterate {last})")]
    NonConvergence { index: i64, last: Complex64 },

    #[error("argument principle found {found} poles, expected {expected}")]
    MissedPole { expected: usize, found: i64 },

    #[error("normalization integral of pole {index} is numerically zero")]
    DegenerateNorm { index: i64 },

    #[error("quadrature for {what} did not converge (last change {change:e})")]
    QuadratureNotConverged { what: &'static str, change: f64 },

    #[error("truncation cap {cap} reached with strength deficit {deficit:e}")]
    TruncationCapReached { cap: usize, deficit: f64 },

    #[error("degenerate two-particle state: {0}")]
    DegenerateState(String),

    #[error("fit window spans {decades:.3} decades, at least 1 is required")]
    WindowTooShort { decades: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_domain(
    what: &'static str,
    value: f64,
    ok: bool,
    domain: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain,
        })
    }
}
