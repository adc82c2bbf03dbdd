//! Crate-wide error type.

/// Errors reported by numerical kernels, geometry construction, and studies.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed caller input: dimension mismatches, non-finite data,
    /// out-of-range parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative solver hit its iteration cap; carries the last residual.
    #[error("solver did not converge: {message} (final residual {residual:.3e})")]
    Solver { message: String, residual: f64 },

    /// Subspace iteration left the listed mode indices unconverged.
    #[error("eigensolver left modes {0:?} unconverged")]
    Convergence(Vec<usize>),

    /// A Gram matrix that must be positive definite is numerically singular.
    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    /// The perturbed domain is invalid (e.g. the perturbation swallows it).
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    /// A computed spectrum does not isolate the requested cluster.
    #[error("cluster not isolated: {0}")]
    ClusterResolution(String),

    /// A study cannot support its conclusion at the configured resolution.
    #[error("study inconclusive: {0}")]
    Inconclusive(String),

    /// Config-file syntax or schema violation.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
