use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid market parameters: {0}")]
    InvalidParams(String),

    #[error("invalid shift window: {0}")]
    InvalidWindow(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("functional is not differentiable: {0}")]
    NonDifferentiable(String),

    #[error("monotonicity check failed: {0}")]
    NotMonotone(String),

    #[error("the Itô interpretation requires a deterministic initial condition")]
    AnticipatingIto,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: relative change {rel_change:e} at {nodes} nodes")]
    QuadratureNonConvergence { nodes: usize, rel_change: f64 },

    #[error("{count} non-finite samples produced")]
    NonFiniteSamples { count: usize },
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonConvergence { .. } | Error::NonFiniteSamples { .. }
        )
    }
}
