use log::info;

use super::errors::Discretization;
use crate::assembly::{
    assemble_system, displacement_jump_gram, displacement_mass_gram, displacement_strain_gram,
    stress_div_gram, stress_edge_gram, stress_l2_gram, AssemblyRules, MaterialLaw, SaddleSystem,
};
use crate::error::Result;
use crate::linalg::{sparse_add, SparseMatrix};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::solver::{infsup_constant, NormKind, StabilityConstants, StabilityReport};
use crate::Vec2;

/// Saddle blocks of `disc` with zero data.
pub fn homogeneous_system(disc: &Discretization, law: &MaterialLaw) -> Result<SaddleSystem> {
    let zero = |_: Vec2| Vec2::zeros();
    assemble_system(
        &disc.cm,
        &disc.exact,
        &disc.stress,
        &disc.disp,
        law,
        &zero,
        &zero,
        &AssemblyRules::new(disc.assembly_degree()),
    )
}

/// Gram matrices `(X, M)` of the stress and displacement norms.
pub fn norm_grams(disc: &Discretization, kind: NormKind) -> Result<(SparseMatrix, SparseMatrix)> {
    let rule = triangle_rule(disc.assembly_degree());
    let erule = edge_rule(disc.assembly_degree());
    let l2 = stress_l2_gram(&disc.cm, &disc.stress, &rule)?;
    match kind {
        NormKind::HdivL2 => Ok((
            sparse_add(&l2, &stress_div_gram(&disc.cm, &disc.stress, &rule)?)?,
            displacement_mass_gram(&disc.cm, &disc.disp, &rule)?,
        )),
        NormKind::MeshDependent => Ok((
            sparse_add(&l2, &stress_edge_gram(&disc.cm, &disc.stress, &erule)?)?,
            sparse_add(
                &displacement_strain_gram(&disc.cm, &disc.disp, &rule)?,
                &displacement_jump_gram(&disc.cm, &disc.disp, &erule)?,
            )?,
        )),
    }
}

/// Stability constants of one discretization.
pub fn stability_constants(
    disc: &Discretization,
    law: &MaterialLaw,
    kind: NormKind,
    with_alpha: bool,
) -> Result<StabilityConstants> {
    let sys = homogeneous_system(disc, law)?;
    let (x, m) = norm_grams(disc, kind)?;
    infsup_constant(&x, &m, &sys.b_block, with_alpha.then_some(&sys.a_block))
}

/// One report row per discretization, levels numbered in order.
pub fn stability_study(
    discs: &[Discretization],
    law: &MaterialLaw,
    kind: NormKind,
    with_alpha: bool,
) -> Result<Vec<StabilityReport>> {
    discs
        .iter()
        .enumerate()
        .map(|(level, disc)| {
            let c = stability_constants(disc, law, kind, with_alpha)?;
            info!(
                "level {level}: {} stress and {} displacement dofs, beta_h {:.4}",
                disc.stress.n_dofs, disc.disp.n_dofs, c.beta_h
            );
            Ok(StabilityReport {
                level,
                h: disc.cm.base.h,
                m: disc.m,
                k: disc.k,
                norm_kind: kind,
                n_sigma: disc.stress.n_dofs,
                n_u: disc.disp.n_dofs,
                beta_h: c.beta_h,
                alpha_h: c.alpha_h,
            })
        })
        .collect()
}

/// `max/min − 1` of the positive values in `v`.
pub fn relative_variation(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(0.0, f64::max);
    hi / lo - 1.0
}
