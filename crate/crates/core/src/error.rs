use thiserror::Error;

/// Errors raised by model construction and numerical evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter violates a model invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument lies outside the domain of an operation. `constraint`
    /// names the violated condition.
    #[error("{op}: domain violation, requires {constraint}")]
    Domain { op: &'static str, constraint: String },

    /// The operation needs a model capability the model does not have.
    #[error("{op}: unsupported for this model ({reason})")]
    Unsupported { op: &'static str, reason: String },

    #[error("root finder did not converge after {iterations} iterations (last bracket [{lo}, {hi}])")]
    RootNotConverged { iterations: usize, lo: f64, hi: f64 },

    #[error("closed-form scale function unavailable: {0}")]
    ClosedForm(String),

    /// Transform inversion produced a non-finite or inconsistent value.
    #[error("transform inversion failed at x = {x} (estimated error {error_estimate:e})")]
    Inversion { x: f64, error_estimate: f64 },

    #[error("quadrature did not reach tolerance: value {value}, error estimate {error_estimate:e}")]
    Quadrature { value: f64, error_estimate: f64 },

    #[error("simulation: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, constraint: impl Into<String>) -> Error {
    Error::Domain {
        op,
        constraint: constraint.into(),
    }
}
