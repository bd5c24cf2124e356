use thiserror::Error;

/// Errors shared across the engine.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("point {point:?} lies outside every chart of the manifold")]
    OutsideDomain { point: Vec<f64> },

    #[error("operation undefined for the zero vector")]
    ZeroVector,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("distance oracle not available for this manifold: {0}")]
    UnsupportedOracle(String),

    #[error("multiple minimizing geodesics at chart scale between {p:?} and {q:?}")]
    AmbiguousMinimizer { p: Vec<f64>, q: Vec<f64> },

    #[error("boundary data incompatible: Lipschitz margin {margin} >= 1")]
    Compatibility { margin: f64 },

    #[error("no inward unit solution for the characteristic field at s = {s} (|dg| too large)")]
    CharacteristicUnsolvable { s: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("det dF vanishes identically on [{t0}, {t1}]; ray is degenerate")]
    DegenerateRay { t0: f64, t1: f64 },

    #[error("conjugate distribution degenerates: slack {slack} below threshold")]
    DegenerateDistribution { slack: f64 },

    #[error("no conjugate points on this ray; operation inapplicable")]
    NoConjugatePoints,

    #[error("retort continuation failed at s = {s}: {reason}")]
    RetortFailure { s: f64, reason: String },

    #[error("join refused: {0}")]
    JoinRefused(String),

    #[error("backward characteristics cross at depth {depth}; reduction impossible")]
    BackwardCrossing { depth: f64 },

    #[error("parameters outside the admissible chamber: {0}")]
    OutsideChamber(String),

    #[error("cleave component is not orientable: {0}")]
    UnorientedComponent(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
