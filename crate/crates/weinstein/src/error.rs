//! Error types shared across the crate.

/// Crate-wide error type.
///
/// `Domain` covers violated mathematical preconditions (negative radius,
/// out-of-range exponent, ...). `Config` covers bad run configurations and
/// is mapped to a distinct process exit code by the CLI. Internal contract
/// violations (mismatched grids, empty spectral grids) are programming
/// errors and panic via `assert!` instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error ({path}): {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
