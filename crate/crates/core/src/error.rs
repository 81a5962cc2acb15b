use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("frequency {freq} Hz aliases (Nyquist is {nyquist} Hz)")]
    Aliasing { freq: f64, nyquist: f64 },

    #[error("frequency {freq} Hz is not bin-centered for a {len}-sample window at {rate} Hz")]
    NotBinCentered { freq: f64, len: usize, rate: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty signal")]
    EmptySignal,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("discretized filter is unstable (pole magnitude {pole_magnitude})")]
    Unstable { pole_magnitude: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("message coefficient at {freq} Hz is too small to divide by")]
    DivisionBlowUp { freq: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
