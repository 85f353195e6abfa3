use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the toolkit.
///
/// [`Error::is_validation`] splits them into input/configuration problems and
/// failures of a numerical procedure; the CLI maps the two groups to distinct
/// exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integrand is not finite at t = {t} (value {value})")]
    Integrand { t: f64, value: f64 },

    #[error("derivative undefined at t = {t}: {reason}")]
    DerivativeUndefined { t: f64, reason: String },

    #[error("no derivative at t = {t}: left estimate {left}, right estimate {right}")]
    NoDerivative { t: f64, left: f64, right: f64 },

    #[error("right limit at t = {t} does not settle (spread {spread:e})")]
    RightLimit { t: f64, spread: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("bound inapplicable: Omega(kappa) + h(b) - h(a) = {value} is not below beta ~ {beta}")]
    BoundInapplicable { value: f64, beta: f64 },

    #[error("no certified horizon: inequality fails for every tested sigma (best slack {best_slack:e})")]
    NoCertifiedHorizon { best_slack: f64 },

    #[error("iterate left the ball of radius {radius} at t = {t} (distance {distance}); try a shorter horizon")]
    DomainExit { t: f64, radius: f64, distance: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("evaluation error in `{expr}` (bytes {start}..{end}): {message}")]
    Eval {
        expr: String,
        start: usize,
        end: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    /// True for errors caused by invalid input rather than by a numerical
    /// procedure failing on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Parse { .. } | Error::Schema(_)
        )
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
