use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {value} outside domain [{lo}, {hi}] of open axis `{axis}`")]
    Domain { axis: String, value: f64, lo: f64, hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("curvature blow-up: step rejected {retries} times at t = {time}")]
    BlowUp { time: f64, retries: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
