use thiserror::Error;

/// Errors produced by the geometry kernels and the scene layer.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("points are not collinear (rank residual {residual:.3e})")]
    NonCollinear { residual: f64 },

    #[error("degenerate cross-ratio configuration: {context}")]
    DegenerateConfiguration { context: &'static str },

    #[error("dense eigenvalue routine failed to converge")]
    EigenSolverFailure,

    #[error("coincident points where distinct points are required")]
    CoincidentPoints,

    #[error("point is not interior to the domain")]
    NotInterior,

    #[error("point lies outside the closed domain")]
    OutsideDomain,

    #[error("empty input: {context}")]
    EmptyInput { context: &'static str },

    #[error("empty subset: {context}")]
    EmptySubset { context: &'static str },

    #[error("coordinates are not strictly positive")]
    NonPositiveCoordinates,

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix is not invertible (|det| residual {residual:.3e})")]
    NotInvertible { residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain is not properly convex: {context}")]
    NotProperlyConvex { context: String },

    #[error("operation requires a polytope domain")]
    NotPolytope,

    #[error("face membership violated: {context}")]
    FaceMembershipViolated { context: &'static str },

    #[error("map is not an automorphism of the domain")]
    NotAutomorphism,

    #[error("generators are not commuting (relative commutator residual {residual:.3e})")]
    NotCommuting { residual: f64 },

    #[error("generators are not simultaneously diagonalizable over the reals: {context}")]
    NotSimultaneouslyDiagonalizable { context: String },

    #[error("no fixed-point subset spans a simplex meeting the domain")]
    NoSimplexFound,

    #[error("generator `{label}` does not fix vertex {vertex} (residual {residual:.3e})")]
    VertexNotFixed {
        label: String,
        vertex: usize,
        residual: f64,
    },

    #[error("minimal-set sample is empty at grid density {density}")]
    MinSetEmpty { density: usize },

    #[error("iteration did not converge: {context}")]
    NotConverged { context: String },

    #[error("orbit matrices exceeded conditioning bounds (entry magnitude {magnitude:.3e})")]
    OrbitBlowup { magnitude: f64 },

    #[error("limit sequence has interior accumulation point; face dynamics not applicable")]
    NonBoundaryLimit,

    #[error("scene parse error: {0}")]
    ParseError(String),

    #[error("scene validation error: {0}")]
    ValidationError(String),

    #[error("unknown command `{0}`")]
    UnknownCommand(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
