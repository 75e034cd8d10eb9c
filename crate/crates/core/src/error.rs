use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    #[error("grading violation: [e{i},e{j}] has a component on e{k} (degrees {di}+{dj} != {dk})")]
    GradingViolation {
        i: usize,
        j: usize,
        k: usize,
        di: usize,
        dj: usize,
        dk: usize,
    },

    #[error("antisymmetry violation on bracket [e{i},e{j}] component e{k}")]
    AntisymmetryViolation { i: usize, j: usize, k: usize },

    #[error("Jacobi identity fails on (e{i},e{j},e{k}) with residual {residual:e}")]
    JacobiViolation {
        i: usize,
        j: usize,
        k: usize,
        residual: f64,
    },

    #[error("step {0} exceeds the supported BCH order 6")]
    StepTooLarge(usize),

    #[error("dilation scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("subspace basis is degenerate (smallest normalized singular value {0:e})")]
    DegenerateSubspace(f64),

    #[error("wedge grade overflow: {0} + {1} exceeds dimension {2}")]
    GradeOverflow(usize, usize, usize),

    #[error("tangent vectors are degenerate (rank {rank} < {n})")]
    DegenerateTangent { rank: usize, n: usize },

    #[error("projected tangent vector is not simple: wedge kernel has dimension {kernel} instead of {n}")]
    NonSimpleProjection { kernel: usize, n: usize },

    #[error("echelon degree {echelon} disagrees with multivector degree {multivector}")]
    InconsistentDegree { echelon: usize, multivector: usize },

    #[error("metric ball section is empty")]
    EmptySection,

    #[error("box calibration failed: layer {layer} violates the triangle inequality even at the floor {floor}")]
    CalibrationFailed { layer: usize, floor: f64 },

    #[error("parse error at {position}: {message}")]
    ParseError { position: usize, message: String },

    #[error("arity error: {0}")]
    ArityError(String),

    #[error("parameter point outside domain: {0}")]
    DomainViolation(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid multiradial profile: {0}")]
    InvalidPhi(String),

    #[error("body is not known to be convex")]
    NotConvex,

    #[error("subspace is not a vertical subgroup")]
    NotVertical,

    #[error("too few Monte Carlo hits ({hits} < {floor}) at radius {radius:e}")]
    RadiusTooSmall { hits: usize, floor: usize, radius: f64 },

    #[error("parameter box around the probe leaves the domain at radius {0:e}")]
    BoundaryTooClose(f64),

    #[error("cloud spacing {spacing:e} exceeds delta/4 = {limit:e}")]
    CloudTooSparse { spacing: f64, limit: f64 },

    #[error("level sets are not graphs over coordinate hyperplanes: {0}")]
    LevelSetNotGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
