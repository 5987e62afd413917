use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular parameters: {0}")]
    Singular(String),
    #[error("numerical failure: {msg} (bracket [{lo}, {hi}])")]
    Bracket { msg: String, lo: f64, hi: f64 },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("order {requested} not supported (maximum {max})")]
    UnsupportedOrder { requested: usize, max: usize },
    #[error("inconsistent inputs: {0}")]
    Contract(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("integrator failure at tau={tau}: {msg}")]
    Integrator { tau: f64, msg: String },
    #[error("amplitude fell to {rho:e} at tau={tau}; rerun in cartesian mode")]
    AmplitudeFloor { tau: f64, rho: f64 },
}

impl Error {
    /// Numerical failures map to exit code 2 in the CLI, everything else is a usage problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Bracket { .. } | Error::NoSolution(_) | Error::Integrator { .. } | Error::AmplitudeFloor { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
