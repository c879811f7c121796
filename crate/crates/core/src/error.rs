use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the physical domain of the model.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Momentum outside the domain of the dispersion relation.
    #[error("momentum {p} is outside the dispersion domain ({reason})")]
    Domain { p: f64, reason: &'static str },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Quadrature error estimate exceeded the configured tolerance.
    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}{}", tau_suffix(*tau))]
    Accuracy {
        estimate: f64,
        tolerance: f64,
        tau: Option<f64>,
    },

    /// Sum of the initial overlaps vanished: the modes interfere destructively.
    #[error("degenerate normalisation: sum of initial overlaps is {0:.3e}")]
    DegenerateNormalization(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

fn tau_suffix(tau: Option<f64>) -> String {
    match tau {
        Some(t) => format!(" at tau = {t}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Attach the offending delay to an accuracy error; other variants pass through.
    pub fn at_tau(self, t: f64) -> Self {
        match self {
            Error::Accuracy {
                estimate,
                tolerance,
                tau: None,
            } => Error::Accuracy {
                estimate,
                tolerance,
                tau: Some(t),
            },
            other => other,
        }
    }

    pub fn is_accuracy(&self) -> bool {
        matches!(self, Error::Accuracy { .. })
    }
}
