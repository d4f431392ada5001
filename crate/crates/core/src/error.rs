use thiserror::Error;

/// Errors raised by surface construction, maps, engines and brane arithmetic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-manifold edge {edge}: {sides} face-sides")]
    NonManifoldEdge { edge: usize, sides: usize },

    #[error("circle is not an embedded cycle: {0}")]
    BadCircle(String),

    #[error("orientation mismatch: declared {declared}, computed {computed}")]
    OrientationMismatch { declared: String, computed: String },

    #[error("surface has boundary")]
    HasBoundary,

    #[error("surface is not closed and oriented")]
    NotClosedOriented,

    #[error("seam mismatch on edge {edge}: {gap:e}")]
    SeamMismatch { edge: usize, gap: f64 },

    #[error("face {face} spans a geodesic angle {angle:.4} > pi/2; subdivide first")]
    FaceTooLarge { face: usize, angle: f64 },

    #[error("non-finite form evaluation: {0}")]
    NonFinite(String),

    #[error("open loop: {0}")]
    OpenLoop(String),

    #[error("point on chart boundary: {0}")]
    ChartBoundary(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("cocycle validation failed at vertices {0:?}")]
    CocycleFailure(Vec<usize>),

    #[error("lift structure inconsistent: {0}")]
    BadLift(String),

    #[error("map is not equivariant at vertex {vertex}: residual {residual:e}")]
    NotEquivariant { vertex: usize, residual: f64 },

    #[error("unsupported circle structure: {0}")]
    UnsupportedCircles(String),

    #[error("boundary leaves world volume at vertex {vertex}: residual {residual:e}")]
    LeavesWorldVolume { vertex: usize, residual: f64 },

    #[error("module has rank 0")]
    ZeroRank,

    #[error("defect circle orientation mismatch: {0}")]
    CircleOrientation(String),

    #[error("point not on world volume: residual {0:e}")]
    NotOnWorldVolume(f64),

    #[error("empty sampling descriptor")]
    EmptySampling,

    #[error("empty fiber: triple ({0}, {1}, {2}) at level {3} is fusion-forbidden")]
    EmptyFiber(u32, u32, u32, u32),

    #[error("angle out of range: {0}")]
    AngleOutOfRange(f64),

    #[error("label out of range: {label} not in [0, {level}]")]
    LabelOutOfRange { label: u32, level: u32 },

    #[error("level must be positive, got {0}")]
    BadLevel(i64),

    #[error("unknown group or involution: {0}")]
    UnknownGroup(String),

    #[error("level {level} incompatible with group {group}")]
    IncompatibleLevel { group: String, level: u32 },

    #[error("radius mismatch: {0} vs {1}")]
    RadiusMismatch(f64, f64),

    #[error("unknown form {0:?}")]
    UnknownForm(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
