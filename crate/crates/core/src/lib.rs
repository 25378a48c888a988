//! Curved Hu-Zhang mixed finite elements for planar linear elasticity.
//!
//! The stress is strongly symmetric and H(div)-conforming on curvilinear
//! triangulations whose boundary elements are polynomial maps of degree `m`;
//! the displacement is discontinuous. The crate covers every stage of a
//! manufactured-solution convergence study:
//!
//! * [`geometry`]: parametric boundary charts and projection onto them.
//! * [`mesh`]: straight triangulations, Gmsh import, refinement, validation.
//! * [`curving`]: element maps `F_K^m` and the exact-geometry map `Ψ^m`.
//! * [`quadrature`]: triangle and edge rules.
//! * [`spaces`]: Hu-Zhang stress space and discontinuous displacement space.
//! * [`assembly`]: the saddle-point system, L² projection, postprocessing.
//! * [`solver`]: sparse direct solve and discrete stability constants.
//! * [`verify`]: manufactured solutions, error norms, rates and studies.

// Index loops mirror the component formulas; negated float comparisons
// deliberately send NaN down the rejecting branch.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod curving;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod spaces;
pub mod verify;

pub use assembly::{MaterialLaw, SaddleSystem};
pub use curving::{CurvedElementMap, CurvedMesh, ExactMap};
pub use error::{Error, Result};
pub use geometry::{BoundaryChart, ChartPoint};
pub use mesh::{MeshReport, Triangulation};
pub use quadrature::QuadratureRule;
pub use solver::{NormKind, SolveResult, StabilityReport};
pub use spaces::{DisplacementSpace, StressSpace};
pub use verify::{ConvergenceReport, ErrorReport, ManufacturedSolution};

/// A point or vector in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;
/// A 2×2 matrix (Jacobians, tensors in full storage).
pub type Mat2 = nalgebra::Matrix2<f64>;
