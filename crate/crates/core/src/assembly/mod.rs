//! Assembly of the curved mixed system, L² projection, local displacement
//! postprocessing and Gram matrices of the norms used for stability.

mod norms;
mod projection;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::curving::{CurvedMesh, ExactEval, ExactMap};
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletList};
use crate::quadrature::{edge_rule, triangle_rule, QuadratureRule};
use crate::spaces::{edge_reference_point, DisplacementSpace, StressSpace};
use crate::{Mat2, Vec2};

pub use norms::{
    displacement_jump_gram, displacement_mass_gram, displacement_strain_gram, stress_div_gram,
    stress_edge_gram, stress_l2_gram,
};
pub use projection::{l2_project, postprocess_displacement};

/// Isotropic linear elasticity with Lamé parameters `λ` and `μ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialLaw {
    pub lambda: f64,
    pub mu: f64,
}

impl MaterialLaw {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Lamé parameters must be positive, got λ={lambda}, μ={mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    fn trace_factor(&self) -> f64 {
        self.lambda / (2.0 * self.lambda + 2.0 * self.mu)
    }

    /// Compliance `Aσ = (σ − λ/(2λ+2μ) tr σ I) / 2μ`.
    pub fn apply_a(&self, s: Mat2) -> Mat2 {
        (s - Mat2::identity() * (self.trace_factor() * s.trace())) / (2.0 * self.mu)
    }

    /// Stiffness `Cε = 2με + λ tr ε I`.
    pub fn apply_c(&self, e: Mat2) -> Mat2 {
        e * (2.0 * self.mu) + Mat2::identity() * (self.lambda * e.trace())
    }

    /// `Aσ` in component storage `(11, 12, 22)`.
    pub fn apply_a_components(&self, s: [f64; 3]) -> [f64; 3] {
        let tr = self.trace_factor() * (s[0] + s[2]);
        let k = 1.0 / (2.0 * self.mu);
        [k * (s[0] - tr), k * s[1], k * (s[2] - tr)]
    }
}

/// `σ : τ` for symmetric tensors in component storage.
pub fn tensor_inner(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2]
}

/// Geometry at one element quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub xi: [f64; 2],
    /// Quadrature weight times `det ∇F`.
    pub weight: f64,
    /// `F(ξ)` on `K^m`.
    pub x: Vec2,
    /// `(∇F)⁻¹`.
    pub jinv: Mat2,
    pub exact: ExactEval,
}

/// Quadrature points of element `t` carried to `K^m`.
pub fn element_points(
    cm: &CurvedMesh,
    exact: &ExactMap,
    t: usize,
    rule: &QuadratureRule,
) -> Result<Vec<QuadPoint>> {
    let map = &cm.maps[t];
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&xi, &w)| {
            let f = map.eval(xi);
            if f.det <= 0.0 {
                return Err(Error::NonPositiveJacobian { element: t, det: f.det });
            }
            Ok(QuadPoint {
                xi,
                weight: w * f.det,
                x: f.point,
                jinv: f.jacobian.try_inverse().expect("positive determinant"),
                exact: exact.eval_with(map, xi, &f),
            })
        })
        .collect()
}

/// Geometry at one point of an element edge.
#[derive(Clone, Copy, Debug)]
pub struct EdgePoint {
    pub xi: [f64; 2],
    /// Edge parameter in global orientation (lower to higher vertex).
    pub s: f64,
    /// Quadrature weight times arclength factor `|g'(s)|`.
    pub weight: f64,
    pub x: Vec2,
    /// Unit outward normal of element `t`.
    pub normal: Vec2,
}

/// Quadrature points on local edge `e` of element `t` of `K^m`.
pub fn edge_points(cm: &CurvedMesh, t: usize, e: usize, rule: &QuadratureRule) -> Vec<EdgePoint> {
    let mesh = &cm.base;
    let map = &cm.maps[t];
    let p0 = edge_reference_point(mesh, t, e, 0.0);
    let p1 = edge_reference_point(mesh, t, e, 1.0);
    let dxi = Vec2::new(p1[0] - p0[0], p1[1] - p0[1]);
    let [a, b, c] = mesh.triangle_points(t);
    let centroid = (a + b + c) / 3.0;
    let tri = mesh.triangles[t];
    let mid = 0.5 * (mesh.vertices[tri[(e + 1) % 3]] + mesh.vertices[tri[(e + 2) % 3]]);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(s, &w)| {
            let xi = edge_reference_point(mesh, t, e, s[0]);
            let f = map.eval(xi);
            let tangent = f.jacobian * dxi;
            let speed = tangent.norm();
            let mut normal = Vec2::new(tangent.y, -tangent.x) / speed;
            if normal.dot(&(mid - centroid)) < 0.0 {
                normal = -normal;
            }
            EdgePoint {
                xi,
                s: s[0],
                weight: w * speed,
                x: f.point,
                normal,
            }
        })
        .collect()
}

/// Quadrature degrees used by assembly (`2p + 2m + 2`) and by error
/// evaluation (two more).
pub fn assembly_degree(k: usize, enriched: bool, m: usize) -> usize {
    2 * (k + usize::from(enriched)) + 2 * m + 2
}

/// Per-element quadrature for assembly.
#[derive(Clone, Debug)]
pub struct AssemblyRules {
    pub element: QuadratureRule,
    pub edge: QuadratureRule,
}

impl AssemblyRules {
    pub fn new(degree: usize) -> Self {
        Self {
            element: triangle_rule(degree),
            edge: edge_rule(degree),
        }
    }
}

/// The discrete saddle-point problem
/// `a(σ, τ) + b(τ, u) = ⟨τν, g⟩`, `b(σ, v) = −(f̃, v)`.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub a_block: SparseMatrix,
    /// `n_u × n_sigma`.
    pub b_block: SparseMatrix,
    pub rhs_stress: Vec<f64>,
    pub rhs_disp: Vec<f64>,
    pub n_sigma: usize,
    pub n_u: usize,
}

impl SaddleSystem {
    /// `[A Bᵀ; B 0]`.
    pub fn full_matrix(&self) -> Result<SparseMatrix> {
        let n = self.n_sigma + self.n_u;
        let mut t = TripletList::new(n, n);
        t.add_sparse(&self.a_block, 0, 0, false, 1.0);
        t.add_sparse(&self.b_block, self.n_sigma, 0, false, 1.0);
        t.add_sparse(&self.b_block, 0, self.n_sigma, true, 1.0);
        t.build()
    }

    pub fn full_rhs(&self) -> Vec<f64> {
        let mut r = self.rhs_stress.clone();
        r.extend_from_slice(&self.rhs_disp);
        r
    }
}

struct LocalSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    rhs_disp: DVector<f64>,
}

/// Assembles the curved mixed system with body force `load_f` and boundary
/// displacement `boundary_g`, both evaluated on the exact domain through
/// `Ψ`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_system(
    cm: &CurvedMesh,
    exact: &ExactMap,
    stress: &StressSpace,
    disp: &DisplacementSpace,
    law: &MaterialLaw,
    load_f: &(dyn Fn(Vec2) -> Vec2 + Sync),
    boundary_g: &(dyn Fn(Vec2) -> Vec2 + Sync),
    rules: &AssemblyRules,
) -> Result<SaddleSystem> {
    let n_t = cm.n_triangles();
    if stress.elements.len() != n_t || disp.degrees.len() != n_t {
        return Err(Error::DimensionMismatch(
            "spaces were built on a different mesh".into(),
        ));
    }
    let stress_tabs = stress.reference_tabs(&rules.element.points);
    let disp_tabs: Vec<_> = (0..=disp.degrees.iter().copied().max().unwrap_or(0))
        .map(|q| disp.basis(q).tabulate(&rules.element.points))
        .collect();
    let c = law.lambda / (2.0 * law.lambda + 2.0 * law.mu);
    let inv2mu = 1.0 / (2.0 * law.mu);

    let locals: Vec<LocalSystem> = (0..n_t)
        .into_par_iter()
        .map(|t| -> Result<LocalSystem> {
            let pts = element_points(cm, exact, t, &rules.element)?;
            let el = &stress.elements[t];
            let jinv: Vec<Mat2> = pts.iter().map(|p| p.jinv).collect();
            let tab = el.tabulate(stress_tabs[el.degree].as_ref().expect("tabulated"), &jinv);
            let w = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.weight));
            let weighted = |m: &DMatrix<f64>| {
                let mut out = m.clone();
                for (q, mut row) in out.row_iter_mut().enumerate() {
                    row *= w[q];
                }
                out
            };
            let [s0, s1, s2] = &tab.comps;
            let tr = s0 + s2;
            let a = (s0.tr_mul(&weighted(s0)) + s1.tr_mul(&weighted(s1)) * 2.0
                + s2.tr_mul(&weighted(s2))
                - tr.tr_mul(&weighted(&tr)) * c)
                * inv2mu;

            let phi = &disp_tabs[disp.degrees[t]].vals;
            let n = phi.ncols();
            let mut b = DMatrix::zeros(2 * n, el.dofs.len());
            let wphi = weighted(phi);
            b.rows_mut(0, n).copy_from(&wphi.tr_mul(&tab.div[0]));
            b.rows_mut(n, n).copy_from(&wphi.tr_mul(&tab.div[1]));

            let mut rhs = DVector::zeros(2 * n);
            for (q, p) in pts.iter().enumerate() {
                let f = load_f(p.exact.point) * (p.exact.det * p.weight);
                for i in 0..n {
                    rhs[i] -= f.x * phi[(q, i)];
                    rhs[n + i] -= f.y * phi[(q, i)];
                }
            }
            Ok(LocalSystem { a, b, rhs_disp: rhs })
        })
        .collect::<Result<_>>()?;

    let mut at = TripletList::new(stress.n_dofs, stress.n_dofs);
    let mut bt = TripletList::new(disp.n_dofs, stress.n_dofs);
    let mut rhs_disp = vec![0.0; disp.n_dofs];
    for (t, local) in locals.iter().enumerate() {
        let dofs = &stress.elements[t].dofs;
        at.add_block(dofs, dofs, &local.a);
        let rows: Vec<usize> = disp.element_range(t).collect();
        bt.add_block(&rows, dofs, &local.b);
        for (i, &r) in rows.iter().enumerate() {
            rhs_disp[r] += local.rhs_disp[i];
        }
    }

    let mut rhs_stress = vec![0.0; stress.n_dofs];
    for &ge in &cm.base.boundary_edges {
        let (t, e) = cm.base.edges[ge].triangles[0].expect("boundary edge has a triangle");
        let el = &stress.elements[t];
        let pts = edge_points(cm, t, e, &rules.edge);
        let xi: Vec<[f64; 2]> = pts.iter().map(|p| p.xi).collect();
        let vals = el.values(&stress.basis(el.degree).tabulate(&xi));
        let map = &cm.maps[t];
        for (q, p) in pts.iter().enumerate() {
            let g = boundary_g(exact.eval(map, p.xi).point);
            let n = p.normal;
            for (j, &dof) in el.dofs.iter().enumerate() {
                let tn = Vec2::new(
                    vals[0][(q, j)] * n.x + vals[1][(q, j)] * n.y,
                    vals[1][(q, j)] * n.x + vals[2][(q, j)] * n.y,
                );
                rhs_stress[dof] += p.weight * tn.dot(&g);
            }
        }
    }

    Ok(SaddleSystem {
        a_block: at.build()?,
        b_block: bt.build()?,
        rhs_stress,
        rhs_disp,
        n_sigma: stress.n_dofs,
        n_u: disp.n_dofs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curving::{build_curved_mesh, build_exact_map};
    use crate::linalg::{max_abs, to_dense};
    use crate::mesh::Triangulation;
    use crate::spaces::{build_displacement_space, build_stress_space};
    use rand::{Rng, SeedableRng};

    fn random_sym(rng: &mut impl Rng) -> Mat2 {
        let (a, b, c) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        Mat2::new(a, b, b, c)
    }

    #[test]
    fn compliance_inverts_stiffness() {
        let law = MaterialLaw::new(1.0, 1.0).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..100 {
            let s = random_sym(&mut rng);
            assert!((law.apply_c(law.apply_a(s)) - s).amax() < 1e-13);
            let a = law.apply_a(s);
            assert!(a.component_mul(&s).sum() > 0.0);
            let comps = law.apply_a_components([s[(0, 0)], s[(0, 1)], s[(1, 1)]]);
            assert!((comps[0] - a[(0, 0)]).abs() < 1e-15 && (comps[1] - a[(0, 1)]).abs() < 1e-15);
        }
        assert!(MaterialLaw::new(0.0, 1.0).is_err());
    }

    fn square_setup() -> (CurvedMesh, ExactMap, StressSpace, DisplacementSpace) {
        let mesh = Triangulation::unit_square(1).unwrap();
        let cm = build_curved_mesh(&mesh, None, 1).unwrap();
        let exact = build_exact_map(&cm);
        let s = build_stress_space(&cm, 3, false).unwrap();
        let d = build_displacement_space(&cm, 3, false, false).unwrap();
        (cm, exact, s, d)
    }

    #[test]
    fn zero_data_gives_zero_rhs_and_symmetric_a() {
        let (cm, exact, s, d) = square_setup();
        let law = MaterialLaw::new(1.0, 1.0).unwrap();
        let zero = |_: Vec2| Vec2::zeros();
        let sys = assemble_system(&cm, &exact, &s, &d, &law, &zero, &zero, &AssemblyRules::new(10)).unwrap();
        assert_eq!(max_abs(&sys.rhs_stress), 0.0);
        assert_eq!(max_abs(&sys.rhs_disp), 0.0);
        let a = to_dense(&sys.a_block);
        assert!((&a - a.transpose()).amax() <= 1e-12 * a.amax());
        assert_eq!(sys.b_block.nrows(), 24);
        assert_eq!(sys.b_block.ncols(), 50);
    }

    #[test]
    fn edge_term_of_constant_field() {
        // τ ≡ I: τν·g = ν·g, on the bottom edge ν = (0, −1)
        let (cm, exact, s, d) = square_setup();
        let law = MaterialLaw::new(1.0, 1.0).unwrap();
        let g = |x: Vec2| if x.y.abs() < 1e-14 { Vec2::new(0.5, -2.0) } else { Vec2::zeros() };
        let zero = |_: Vec2| Vec2::zeros();
        let sys = assemble_system(&cm, &exact, &s, &d, &law, &zero, &g, &AssemblyRules::new(10)).unwrap();
        let identity = s.interpolate(&cm, |_, _| [1.0, 0.0, 1.0]);
        let val: f64 = identity.iter().zip(&sys.rhs_stress).map(|(a, b)| a * b).sum();
        assert!((val - 2.0).abs() < 1e-12, "{val}");
    }
}
