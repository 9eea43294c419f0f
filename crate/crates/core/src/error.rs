use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ball of radius {radius} carries no mass")]
    EmptyBall { radius: f64 },
    #[error("measure has no points")]
    EmptyMeasure,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ambient dimension must be positive")]
    ZeroDimension,
    #[error("weight {0} is negative or not finite")]
    InvalidWeight(f64),
    #[error("coordinate is not finite")]
    NonFiniteCoordinate,
    #[error("radius {0} must be positive and finite")]
    InvalidRadius(f64),
    #[error("matrix is not orthogonal within tolerance")]
    NotOrthogonal,
    #[error("restrictions to the unit ball are not probability measures (masses {mu}, {nu})")]
    NotNormalized { mu: f64, nu: f64 },
    #[error("a measure has no mass on B(0,{radius})")]
    InnerBallEmpty { radius: f64 },
    #[error("rotation search is not implemented in dimension {0}")]
    UnsupportedDim(usize),
    #[error("group window needs 1 < lambda1 < lambda2 < inf (got {lambda1}, {lambda2})")]
    InvalidWindow { lambda1: f64, lambda2: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("need at least 3 scales with positive mass, found {0}")]
    InsufficientData(usize),
    #[error("singular values {d} and {d_next} coincide; plane is not unique")]
    DegenerateSpectrum { d: f64, d_next: f64 },
    #[error("basis is not orthonormal")]
    BadBasis,
    #[error("IFS expansion needs {points} points, budget is {budget}")]
    DepthOverflow { points: u128, budget: usize },
    #[error("probe list is empty")]
    EmptyProbes,
    #[error("flat dimension {d} exceeds ambient dimension {n}")]
    BadFlatDimension { d: usize, n: usize },
    #[error("invalid specification: {0}")]
    InvalidSpec(&'static str),
    #[error("solver failed: {0}")]
    Solver(&'static str),
}
