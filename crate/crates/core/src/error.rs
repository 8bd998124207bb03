use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to converge or to bracket a root.
    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        /// Best point found before giving up, when one exists.
        best: Option<f64>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical { message: msg.into(), best: None }
    }

    pub(crate) fn numerical_with_best(msg: impl Into<String>, best: f64) -> Self {
        Error::Numerical { message: msg.into(), best: Some(best) }
    }

    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}
