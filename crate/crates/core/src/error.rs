use thiserror::Error;

/// Errors raised by the numerical engine.
///
/// Economics failures (no bracketed equilibrium) are kept apart from
/// numerical-integrity failures (identities or tolerances not met) so that
/// callers can map them to different exit paths.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("correlation {rho} is too close to ±1; use the univariate reduction")]
    NearSingularCorrelation { rho: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("no sign change for {what} within [{lo}, {hi}]")]
    BracketFailure {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("{what}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTolerance {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("welfare formulas disagree (relative gap {gap:e})")]
    InconsistentEquilibrium { gap: f64 },

    #[error("rho = {rho} lies within {h} of a schedule breakpoint at {kink}")]
    Kink { rho: f64, h: f64, kink: f64 },

    #[error("{what} did not terminate after {cap} iterations")]
    IterationCap { what: &'static str, cap: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error(
        "quadrature tolerance not met: estimated error {error:e} after {intervals} subintervals"
    )]
    ToleranceNotMet { error: f64, intervals: usize },

    #[error("planner cutoff {planner} differs from market cutoff {market}")]
    CutoffMismatch { planner: f64, market: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
