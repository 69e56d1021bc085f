use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("channel is not completely positive (min eigenvalue {min_eig:.3e})")]
    InvalidChannel { min_eig: f64 },

    /// The covariance term needs the inverse on a (near-)pure direction.
    #[error("state is too close to pure for the covariance term (min symplectic eigenvalue - 1 = {excess:.3e})")]
    PureState { excess: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("degenerate pulse duration: {0}")]
    DegenerateDuration(String),

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A sweep point failed; `params` names the offending tuple.
    #[error("sweep point {params}: {source}")]
    Point {
        params: String,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
