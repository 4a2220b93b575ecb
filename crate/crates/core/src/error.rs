use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("non-finite mass at index {index}")]
    NonFiniteMass { index: usize },
    #[error("masses sum to {sum}, more than 1e-9 away from 1")]
    MassSumOutOfTolerance { sum: f64 },
    #[error("offspring mean {mean} is not supercritical (need m > 1)")]
    Subcritical { mean: f64 },
    #[error("all offspring mass sits at zero")]
    Degenerate,
    #[error("argument {modulus} lies outside the closed unit disc")]
    OutsideUnitDisc { modulus: f64 },
    #[error("transform size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("index {v} is beyond the truncation cap {cap}")]
    VBeyondCap { v: usize, cap: usize },
    #[error("conditioning event has probability zero")]
    EmptyConditioningEvent,
    #[error("operation needs a Schroeder law (gamma > 0) but the law is Boettcher")]
    BoettcherLaw,
    #[error("operation needs a Boettcher law (gamma = 0) but the law is Schroeder")]
    SchroederLaw,
    #[error("argument {0} must lie in [0, 1)")]
    SAtOrBeyondOne(f64),
    #[error("argument {0} is out of range")]
    SOutOfRange(f64),
    #[error("v = {v} exceeds m^n = {bound}")]
    VTooLarge { v: f64, bound: f64 },
    #[error("v must be at least 1, got {0}")]
    VTooSmall(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("generation size exceeded the population cap {cap}")]
    CapExceeded { cap: u64 },
    #[error("truncation cap too small: tail mass {tail_mass:e}")]
    CapTooSmall { tail_mass: f64 },
    #[error("every simulated trajectory went extinct")]
    NoSurvivors,
    #[error("acceptance rate {rate:e} is below 1e-4; lower v")]
    AcceptanceTooLow { rate: f64 },
    #[error("no trajectory hit the target event")]
    NoHits,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Errors caused by the caller's input rather than by a numerical failure.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Consistency(_)
                | Error::CapExceeded { .. }
                | Error::CapTooSmall { .. }
                | Error::NoSurvivors
                | Error::AcceptanceTooLow { .. }
                | Error::NoHits
                | Error::EmptyConditioningEvent
        )
    }
}
