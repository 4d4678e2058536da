use thiserror::Error;

/// Errors raised by the model, stability and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The closed forms divide by a rate that is zero for this instance.
    #[error("degenerate parameters: {0}")]
    DegenerateParameter(String),

    #[error("no endemic equilibrium (R0 = {r0})")]
    NoEndemicEquilibrium { r0: f64 },

    /// A Lyapunov evaluator was called outside the parameter family it certifies.
    #[error("wrong model: {0}")]
    WrongModel(String),

    #[error("outside the function domain: {0}")]
    Domain(String),

    #[error("certificate parameter c = {c} outside the admissible interval ({lower}, {upper})")]
    InvalidCertificateParameter { c: f64, lower: f64, upper: f64 },

    #[error("step size underflow at t = {t} (h = {h:e}); the problem looks stiff")]
    Stiffness { t: f64, h: f64 },

    #[error("state left the simplex beyond tolerance {tol:e}: {detail}")]
    InvarianceViolation { tol: f64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
