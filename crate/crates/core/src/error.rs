use thiserror::Error;

pub type Result<T> = std::result::Result<T, PsgeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsgeError {
    /// A constructor or operation received a value outside its admissible set.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Evaluation requested at a point where the function is not defined
    /// (branch point, pole, singular locus of a wave).
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of budget before meeting its tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// The integrand at an exponential-tail cut point was not negligible.
    #[error("tail truncation failed: integrand {value:e} at cut point {cut}")]
    Truncation { value: f64, cut: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Fixed-point iteration failed to contract.
    #[error("Picard iteration diverged after {iterations} iterations (last ratios {ratios:?})")]
    Diverged { iterations: usize, ratios: Vec<f64> },

    /// A NaN or infinity appeared in an iterate or time step.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Finite-difference run grew beyond the instability threshold.
    #[error("unstable time stepping at t = {t}: sup |u| = {sup:e}")]
    Unstable { t: f64, sup: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("horizon not reached: {0}")]
    Horizon(String),
}

impl PsgeError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        PsgeError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
