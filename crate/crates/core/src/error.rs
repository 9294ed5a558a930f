use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subspace is not standard: [B | JB] has rank {rank} < {expected} (condition {cond:.3e})")]
    RankDeficient { rank: usize, expected: usize, cond: f64 },
    #[error("ambient complex space is inconsistent: {0}")]
    InvalidAmbient(String),
    #[error("modular operator has eigenvalue within {gap:.3e} of 1")]
    NearDegenerate { gap: f64 },
    #[error("subspace is not factorial (1 in spec of delta, gap {gap:.3e})")]
    NotFactorial { gap: f64 },
    #[error("subspace is not invariant under exp(isA): residual {residual:.3e}")]
    NotInvariant { residual: f64 },
    #[error("massless infrared content too large: DC ratio {ratio:.3e}")]
    MasslessInfrared { ratio: f64 },
    #[error("grids or masses differ")]
    GridMismatch,
    #[error("ball of radius {radius} at {center:?} does not fit in the grid")]
    BallOutsideGrid { radius: f64, center: Vec<f64> },
    #[error("dilated support {support:.4} exceeds usable extent {limit:.4}")]
    SupportOverflow { support: f64, limit: f64 },
    #[error("support violation: relative mass outside ball {leak:.3e}")]
    SupportViolation { leak: f64 },
    #[error("flow pole hit: |f| = {value:.3e}")]
    PoleHit { value: f64 },
    #[error("operation not supported in this grid mode: {0}")]
    UnsupportedMode(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("gram matrix ill conditioned: {cond:.3e}")]
    IllConditioned { cond: f64 },
    #[error("projection residual {residual:.3e} exceeds {limit:.3e}")]
    ProjectionResidualTooLarge { residual: f64, limit: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
