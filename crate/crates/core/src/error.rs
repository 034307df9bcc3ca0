use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the library.
///
/// `Unphysical`, `Dimension`, `Structure` and `Input` describe bad inputs;
/// the rest describe conditions discovered while computing (a method asked
/// for outside its domain, missing derivative data, loss of convergence).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("structural check failed: {0}")]
    Structure(String),

    #[error("unphysical state: minimum symplectic eigenvalue {lambda_min} is below 1 - {tol:.1e}")]
    Unphysical { lambda_min: f64, tol: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("method not applicable: {0}")]
    NotApplicable(String),

    #[error("pure or nearly pure mode present (lambda_min = {lambda_min}); use the regularized route")]
    PurePoint { lambda_min: f64 },

    #[error("derivative data unavailable: {0}")]
    Derivatives(String),

    #[error("degenerate symplectic spectrum: the factor gauge is not unique")]
    DegenerateGauge,

    #[error("series not converged at order {order}: remainder bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    SeriesTruncation { order: usize, bound: f64, tol: f64 },

    #[error("Fock-space cutoff insufficient: {0}")]
    Cutoff(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("no computation route succeeded:\n{0}")]
    NoRoute(String),
}
