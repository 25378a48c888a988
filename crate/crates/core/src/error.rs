use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown chart name `{0}`")]
    UnknownChart(String),

    #[error("chart parameter {t} outside range [{lo}, {hi}] of an open chart")]
    ParameterOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("boundary projection did not converge (best t = {best_t}, distance = {distance:.3e})")]
    ProjectionFailed { best_t: f64, distance: f64 },

    #[error("gmsh: {0}")]
    Gmsh(String),

    #[error(
        "boundary vertex {vertex} is {distance:.3e} away from the chart (allowed {allowed:.3e}); \
         wrong chart for this mesh?"
    )]
    ProjectionDistance {
        vertex: usize,
        distance: f64,
        allowed: f64,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh too large: {0} triangles requested")]
    MeshTooLarge(usize),

    #[error("element {element}: nonpositive Jacobian determinant {det:.3e}")]
    NonPositiveJacobian { element: usize, det: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element {element}: DOF Vandermonde is ill-conditioned (cond = {cond:.3e})")]
    SingularVandermonde { element: usize, cond: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("residual stagnated at {residual:.3e} after {iterations} refinement steps")]
    ResidualStagnation { residual: f64, iterations: usize },

    #[error("matrix `{0}` is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("local postprocessing system on element {element} is singular (cond = {cond:.3e})")]
    SingularLocalSystem { element: usize, cond: f64 },

    #[error("rate fit: {0}")]
    RateFit(String),

    #[error("problem too large: projected {0} degrees of freedom")]
    TooManyDofs(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
