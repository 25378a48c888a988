//! Finite element spaces: the symmetric-stress Hu–Zhang space with
//! H(div)-conforming normal traces and the discontinuous displacement space.
//!
//! Reference fields are carried to `K^m` by plain composition with
//! `(F_K^m)⁻¹`, which keeps tensors symmetric pointwise.

mod displacement;
mod scalar;
mod stress;

pub use displacement::{build_displacement_space, DisplacementSpace};
pub use scalar::{legendre01, poly_dim, ReferenceTab, ScalarBasis};
pub use stress::{
    build_stress_space, edge_frame, edge_reference_point, LocalLayout, StressElement, StressSpace,
    StressTab,
};
