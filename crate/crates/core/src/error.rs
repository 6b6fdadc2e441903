use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite sample {value} at centroid {centroid:?}")]
    Sampling { centroid: Vec<f64>, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("potential pole {pole:?} coincides with a cell centroid")]
    PoleOnCentroid { pole: Vec<f64> },

    #[error("hypothesis violated: rho/(rho-1) = {ratio} must be < n-1 = {bound} (existence theorem hypothesis)")]
    Hypothesis { ratio: f64, bound: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("range error: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, Error>;
