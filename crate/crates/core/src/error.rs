use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("hole exits domain: radius {radius} but distance from center to outer boundary is {distance}")]
    HoleExitsDomain { radius: f64, distance: f64 },

    #[error("outer polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersection(usize, usize),

    #[error("outer region is not {kappa}-symmetric about the hole center: {detail}")]
    NotSymmetric { kappa: u32, detail: String },

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("lambda = {lambda} is subcritical or critical (need lambda > 8*pi)")]
    Subcritical { lambda: f64 },

    #[error("lambda = {lambda} lies in 8*pi*N: a symmetry order kappa = {kappa} is required")]
    SymmetryRequired { lambda: f64, kappa: u32 },

    #[error("mesh has no symmetry map")]
    MissingSymmetry,

    #[error("broken mesh: {0}")]
    BrokenMesh(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    LinearSolverDiverged { iterations: usize, residual: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("root not bracketed: {0}")]
    NoBracket(String),

    #[error("degenerate rank-one denominator {denominator:.3e} (lambda = {lambda})")]
    DegenerateRankOne { denominator: f64, lambda: f64 },

    #[error("point ({0}, {1}) is outside the domain or too close to its boundary")]
    PointOutside(f64, f64),

    #[error("quadrature did not converge: error estimate {estimate:.3e} above target {target:.3e}")]
    QuadratureNotConverged { estimate: f64, target: f64 },

    #[error("iteration is not contracting: ratio {ratio:.3} for {consecutive} consecutive steps at iterate {iterate}")]
    NonContraction {
        iterate: usize,
        ratio: f64,
        consecutive: usize,
    },

    #[error("continuation failed at lambda = {failed_lambda} (last accepted lambda = {last_lambda})")]
    ContinuationFailed {
        last_lambda: f64,
        failed_lambda: f64,
    },

    #[error("empty node set: {0}")]
    EmptySet(String),

    #[error("mesh file parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }
}
