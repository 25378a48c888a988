use rayon::prelude::*;

use super::manufactured::ManufacturedSolution;
use crate::assembly::{
    assemble_system, assembly_degree, element_points, l2_project, postprocess_displacement,
    AssemblyRules,
};
use crate::curving::{build_curved_mesh, build_exact_map, CurvedMesh, ExactMap};
use crate::error::{Error, Result};
use crate::geometry::BoundaryChart;
use crate::mesh::Triangulation;
use crate::quadrature::{triangle_rule, QuadratureRule};
use crate::solver::{solve_saddle, SolveResult};
use crate::spaces::{build_displacement_space, build_stress_space, DisplacementSpace, StressSpace};
use crate::Vec2;

/// Curved mesh, exact map and the three spaces of one level.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub k: usize,
    pub m: usize,
    pub enriched: bool,
    pub cm: CurvedMesh,
    pub exact: ExactMap,
    pub stress: StressSpace,
    pub disp: DisplacementSpace,
    pub star: DisplacementSpace,
}

impl Discretization {
    pub fn new(
        mesh: &Triangulation,
        chart: Option<&BoundaryChart>,
        k: usize,
        m: usize,
        enriched: bool,
    ) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidArgument(format!("k must be ≥ 3, got {k}")));
        }
        let cm = build_curved_mesh(mesh, chart, m)?;
        let exact = build_exact_map(&cm);
        let stress = build_stress_space(&cm, k, enriched)?;
        let disp = build_displacement_space(&cm, k, enriched, false)?;
        let star = build_displacement_space(&cm, k, enriched, true)?;
        Ok(Self { k, m, enriched, cm, exact, stress, disp, star })
    }

    pub fn n_dofs(&self) -> usize {
        self.stress.n_dofs + self.disp.n_dofs
    }

    pub fn assembly_degree(&self) -> usize {
        assembly_degree(self.k, self.enriched, self.m)
    }

    pub fn error_degree(&self) -> usize {
        self.assembly_degree() + 2
    }
}

/// The five error norms of one level, all on `Ω^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub n_triangles: usize,
    pub n_dofs: usize,
    /// `‖û − û_h‖`.
    pub err_u: f64,
    /// `‖û − û*_h‖`.
    pub err_u_star: f64,
    /// `‖σ̂ − σ̂_h‖`.
    pub err_sigma: f64,
    /// `‖div̂ σ̂ − div σ_h‖`.
    pub err_div: f64,
    /// `‖Q_h û − û_h‖`.
    pub err_superclose: f64,
}

impl ErrorReport {
    pub fn values(&self) -> [f64; 5] {
        [self.err_u, self.err_u_star, self.err_sigma, self.err_div, self.err_superclose]
    }
}

/// Solver tolerance and optional quadrature override.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub quadrature_degree: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, quadrature_degree: None }
    }
}

/// Solved coefficients of one level with their errors.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    pub solve: SolveResult,
    pub u_star: Vec<f64>,
    pub errors: ErrorReport,
}

/// Assembles, solves, postprocesses and measures one level.
pub fn solve_manufactured(
    disc: &Discretization,
    ms: &ManufacturedSolution,
    opts: &SolveOptions,
) -> Result<LevelSolution> {
    let degree = opts.quadrature_degree.unwrap_or_else(|| disc.assembly_degree());
    let rules = AssemblyRules::new(degree);
    let load = |x: Vec2| ms.load(x);
    let g = |x: Vec2| ms.displacement(x);
    let sys = assemble_system(
        &disc.cm, &disc.exact, &disc.stress, &disc.disp, &ms.law, &load, &g, &rules,
    )?;
    let solve = solve_saddle(&sys, opts.tolerance)?;
    let error_rule = triangle_rule(opts.quadrature_degree.map_or(disc.error_degree(), |d| d + 2));
    let u_star = postprocess_displacement(
        &disc.cm,
        &disc.stress,
        &disc.disp,
        &disc.star,
        &ms.law,
        &solve.sigma_coeffs,
        &solve.u_coeffs,
        &rules.element,
    )?;
    let errors = compute_errors(disc, ms, &solve.sigma_coeffs, &solve.u_coeffs, &u_star, &error_rule)?;
    Ok(LevelSolution { solve, u_star, errors })
}

/// Errors of given coefficient vectors against `ms` pulled back through `Ψ`.
pub fn compute_errors(
    disc: &Discretization,
    ms: &ManufacturedSolution,
    sigma: &[f64],
    u: &[f64],
    u_star: &[f64],
    rule: &QuadratureRule,
) -> Result<ErrorReport> {
    if sigma.len() != disc.stress.n_dofs || u.len() != disc.disp.n_dofs || u_star.len() != disc.star.n_dofs {
        return Err(Error::DimensionMismatch("coefficient vectors do not match the spaces".into()));
    }
    let cm = &disc.cm;
    let qhu = l2_project(cm, &disc.disp, rule, &|t, xi, _| {
        let p = disc.exact.eval(&cm.maps[t], xi).point;
        let v = ms.displacement(p);
        [v.x, v.y]
    })?;
    let tabs = disc.stress.reference_tabs(&rule.points);
    let per_element = (0..cm.n_triangles())
        .into_par_iter()
        .map(|t| -> Result<[f64; 5]> {
            let pts = element_points(cm, &disc.exact, t, rule)?;
            let el = &disc.stress.elements[t];
            let jinv: Vec<_> = pts.iter().map(|p| p.jinv).collect();
            let st = el.tabulate(tabs[el.degree].as_ref().expect("tabulated"), &jinv);
            let coeffs = nalgebra::DVector::from_vec(disc.stress.local_coefficients(t, sigma));
            let comps: Vec<_> = st.comps.iter().map(|c| c * &coeffs).collect();
            let divs: Vec<_> = st.div.iter().map(|d| d * &coeffs).collect();
            let uh = disc.disp.eval(t, u, &rule.points);
            let us = disc.star.eval(t, u_star, &rule.points);
            let qh = disc.disp.eval(t, &qhu, &rule.points);
            let mut acc = [0.0; 5];
            for (q, p) in pts.iter().enumerate() {
                let e = ms.eval(p.exact.point);
                let grad_psi = p.exact.gradient;
                let mut div_hat = Vec2::zeros();
                for i in 0..2 {
                    for j in 0..2 {
                        for l in 0..2 {
                            div_hat[i] += e.grad_sigma[i][j][l] * grad_psi[(l, j)];
                        }
                    }
                }
                let du = Vec2::new(e.u.x - uh[q][0], e.u.y - uh[q][1]);
                let dus = Vec2::new(e.u.x - us[q][0], e.u.y - us[q][1]);
                let ds = [
                    e.sigma[(0, 0)] - comps[0][q],
                    e.sigma[(0, 1)] - comps[1][q],
                    e.sigma[(1, 1)] - comps[2][q],
                ];
                let dd = Vec2::new(div_hat.x - divs[0][q], div_hat.y - divs[1][q]);
                let dq = Vec2::new(qh[q][0] - uh[q][0], qh[q][1] - uh[q][1]);
                acc[0] += p.weight * du.norm_squared();
                acc[1] += p.weight * dus.norm_squared();
                acc[2] += p.weight * (ds[0] * ds[0] + 2.0 * ds[1] * ds[1] + ds[2] * ds[2]);
                acc[3] += p.weight * dd.norm_squared();
                acc[4] += p.weight * dq.norm_squared();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = [0.0; 5];
    for e in &per_element {
        for (t, v) in total.iter_mut().zip(e) {
            *t += v;
        }
    }
    let [err_u, err_u_star, err_sigma, err_div, err_superclose] = total.map(f64::sqrt);
    Ok(ErrorReport {
        h: cm.base.h,
        n_triangles: cm.n_triangles(),
        n_dofs: disc.n_dofs(),
        err_u,
        err_u_star,
        err_sigma,
        err_div,
        err_superclose,
    })
}
