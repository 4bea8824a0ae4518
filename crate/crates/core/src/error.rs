use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point with norm {norm} is outside the unit ball guard (|x| < 1 - 1e-12 required)")]
    OutsideBall { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration budget exceeded: {count} elements > cap {cap}")]
    Budget { count: usize, cap: usize },

    #[error("point is within {margin} of the map's domain boundary")]
    DomainProximity { margin: f64 },

    #[error("defining disks {0} and {1} overlap")]
    OverlappingDisks(usize, usize),

    #[error("weight integrates to {integral} on the ring, expected at least 1")]
    Normalization { integral: f64 },

    #[error("no single chart covers the image neighbourhood: {0}")]
    ChartCoverage(String),

    #[error("optimizer did not converge after {iterations} iterations (best estimate {best})")]
    NotConverged { iterations: usize, best: f64 },

    #[error("points belong to different groups")]
    GroupMismatch,
}
