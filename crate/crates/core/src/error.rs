use thiserror::Error;

/// Every failure the toolkit can report.
///
/// Variants split into input problems (`Parse`, `InvalidArgument`) and
/// domain rejections; [`Error::is_input_error`] tells them apart for the
/// CLI exit-code policy.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // polytope validation
    #[error("polytope is unbounded (recession direction {direction})")]
    Unbounded { direction: String },
    #[error("polytope is not full-dimensional: {0}")]
    NotFullDimensional(String),
    #[error("facet {facet} has a non-primitive normal {normal}")]
    NonPrimitiveNormal { facet: usize, normal: String },
    #[error("facet {facet} is redundant (touches the polytope in dimension < n-1)")]
    RedundantFacet { facet: usize },
    #[error("vertex {vertex} is not simple: active facets {facets:?}")]
    NonSimpleVertex { vertex: String, facets: Vec<usize> },
    #[error("vertex {vertex} is not unimodular: |det| = {det}")]
    NonUnimodularVertex { vertex: String, det: String },

    // corner chops
    #[error("vertex index {0} does not exist")]
    NotAVertex(usize),
    #[error("chop size {t} reaches another vertex (edge limit {limit})")]
    ChopTooLarge { t: String, limit: String },

    // integration
    #[error("integrand degree {0} exceeds the supported bound")]
    DegreeTooHigh(u32),

    // lattice counts
    #[error("dilate {k} does not clear the offset denominator {denominator}")]
    NonIntegralDilate { k: i64, denominator: String },
    #[error("Ehrhart interpolation is inconsistent: {0}")]
    FitInconsistent(String),

    // invariants and expansions
    #[error("Gram matrix is singular")]
    SingularGram,
    #[error("stabiliser basis is linearly dependent")]
    DependentBasis,
    #[error("closed-form expansion disagrees with the corner-chop oracle: {0}")]
    OracleMismatch(String),
    #[error("inner product is not positive definite at eps = {0}")]
    NotPositiveDefinite(String),
    #[error("operation requires dimension >= {required}, got {got}")]
    UnsupportedDimension { required: usize, got: usize },

    // stability
    #[error("zero torus vector")]
    ZeroVector,
    #[error("eps = {0} is too large for the expansion regime")]
    EpsTooLarge(String),
    #[error("degenerate cone at vertex {0}")]
    DegenerateCone(usize),

    // moment-map solver
    #[error("hypothesis violated in h{index}: {message}")]
    StructureViolation { index: usize, message: String },
    #[error("approximate solution of order {order} leaves the ball")]
    OrderUnreachable { order: usize },
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("coordinate z{index} collapsed to zero (h{index} = {value:e} there)")]
    CoordinateCollapse { index: usize, value: f64 },
    #[error("kappa = {kappa} is not below min p_j/2 = {bound}")]
    KappaTooLarge { kappa: f64, bound: f64 },
    #[error("iterate with norm {norm:e} leaves the ball of radius {radius:e}")]
    BallViolation { norm: f64, radius: f64 },
    #[error("Kempf-Ness descent did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, last: Vec<f64>, trace: Vec<f64> },
}

impl Error {
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::InvalidArgument(_))
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, column, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
