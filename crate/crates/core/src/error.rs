use thiserror::Error;

/// Errors reported by the rotation math and the averaging estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("matrix is not a rotation: orthonormality error {orthonormality:e}, det {det}")]
    NotRotation { orthonormality: f64, det: f64 },
    #[error("matrix is not skew-symmetric (asymmetry {0:e})")]
    NotSkewSymmetric(f64),
    #[error("empty input")]
    Empty,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
