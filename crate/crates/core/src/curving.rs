//! Curved element maps `F_K^m` and the exact-geometry map `Ψ^m`.
//!
//! Everything is evaluated from reference coordinates `ξ = (ξ, η)` on the
//! triangle `{(0,0), (1,0), (0,1)}` with barycentrics `λ = (1−ξ−η, ξ, η)`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::BoundaryChart;
use crate::linalg::log_log_slope;
use crate::mesh::{uniform_refine, validate_mesh, Triangulation};
use crate::quadrature::triangle_rule;
use crate::{Mat2, Vec2};

const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// The curved edge of a boundary element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvedEdge {
    /// Local edge index, i.e. the local vertex not on the boundary.
    pub local: usize,
    /// Chart parameter at local vertex `(local + 1) % 3` (`s = 0`).
    pub t0: f64,
    /// Chart parameter at local vertex `(local + 2) % 3` (`s = 1`), unwrapped
    /// towards `t0`.
    pub t1: f64,
}

impl CurvedEdge {
    /// Barycentric indices `(off, a, b)`: off-boundary vertex, then the
    /// vertices at `s = 0` and `s = 1`.
    pub fn roles(&self) -> (usize, usize, usize) {
        (self.local, (self.local + 1) % 3, (self.local + 2) % 3)
    }

    /// Reference point at edge coordinate `s`.
    pub fn reference_point(&self, s: f64) -> [f64; 2] {
        let (_, a, b) = self.roles();
        let [pa, pb] = [REFERENCE_VERTICES[a], REFERENCE_VERTICES[b]];
        [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
    }

    /// `dξ/ds` along the edge.
    pub fn reference_tangent(&self) -> Vec2 {
        let (_, a, b) = self.roles();
        let [pa, pb] = [REFERENCE_VERTICES[a], REFERENCE_VERTICES[b]];
        Vec2::new(pb[0] - pa[0], pb[1] - pa[1])
    }
}

/// `F(ξ)`, `∇F(ξ)` (columns are `∂F/∂ξ`, `∂F/∂η`) and `det ∇F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapEval {
    pub point: Vec2,
    pub jacobian: Mat2,
    pub det: f64,
}

/// Degree-`m` Lagrange map from the reference triangle onto `K^m`.
#[derive(Clone, Debug)]
pub struct CurvedElementMap {
    pub degree_m: usize,
    /// Images of the Lagrange nodes, ordered as [`lagrange_nodes`].
    pub control_points: Vec<Vec2>,
    pub is_identity: bool,
    pub vertices: [Vec2; 3],
    pub curved_edge: Option<CurvedEdge>,
    affine: Mat2,
}

/// Multi-indices `(a, b, c)` with `a + b + c = m` of the equispaced nodes
/// `λ = (a, b, c)/m`.
pub fn lagrange_nodes(m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity((m + 1) * (m + 2) / 2);
    for a in (0..=m).rev() {
        for b in (0..=(m - a)).rev() {
            out.push([a, b, m - a - b]);
        }
    }
    out
}

/// `ℓ_a(x) = Π_{i<a} (m x − i)/(i + 1)` and its derivative.
fn lagrange_factor(m: usize, a: usize, x: f64) -> (f64, f64) {
    let mf = m as f64;
    let mut value = 1.0;
    let mut deriv = 0.0;
    for i in 0..a {
        let f = (mf * x - i as f64) / (i as f64 + 1.0);
        let df = mf / (i as f64 + 1.0);
        deriv = deriv * f + value * df;
        value *= f;
    }
    (value, deriv)
}

fn barycentric([x, y]: [f64; 2]) -> [f64; 3] {
    [1.0 - x - y, x, y]
}

impl CurvedElementMap {
    fn identity(vertices: [Vec2; 3], m: usize) -> Self {
        let affine = Mat2::from_columns(&[vertices[1] - vertices[0], vertices[2] - vertices[0]]);
        let control_points = lagrange_nodes(m)
            .iter()
            .map(|n| {
                let l = n.map(|i| i as f64 / m as f64);
                vertices[0] * l[0] + vertices[1] * l[1] + vertices[2] * l[2]
            })
            .collect();
        Self {
            degree_m: m,
            control_points,
            is_identity: true,
            vertices,
            curved_edge: None,
            affine,
        }
    }

    fn curved(vertices: [Vec2; 3], m: usize, edge: CurvedEdge, chart: &BoundaryChart) -> Result<Self> {
        let mut map = Self::identity(vertices, m);
        let (off, a, b) = edge.roles();
        // gap between chart and chord at the edge nodes, expanded as
        // D(s) = Σ_j c_j s^j with D(0) = D(1) = 0
        let (va, vb) = (vertices[a], vertices[b]);
        let mut vander = nalgebra::DMatrix::zeros(m, m);
        let mut gaps = nalgebra::DMatrix::zeros(m, 2);
        for i in 1..=m {
            let s = i as f64 / m as f64;
            for j in 1..=m {
                vander[(i - 1, j - 1)] = s.powi(j as i32);
            }
            let g = chart.eval((1.0 - s) * edge.t0 + s * edge.t1)? - (va + (vb - va) * s);
            gaps[(i - 1, 0)] = g.x;
            gaps[(i - 1, 1)] = g.y;
        }
        let coeffs = vander
            .lu()
            .solve(&gaps)
            .ok_or_else(|| Error::InvalidArgument("singular edge interpolation".into()))?;
        // degree-j part extended homogeneously: c_j (λ_b^j − λ_b w^{j−1}),
        // w = λ_a + λ_b; exact on the curved edge, zero on the straight ones
        for (node, point) in lagrange_nodes(m).iter().zip(map.control_points.iter_mut()) {
            if node[a] == 0 || node[b] == 0 {
                continue;
            }
            let lb = node[b] as f64 / m as f64;
            let w = (node[a] + node[b]) as f64 / m as f64;
            let mut shift = Vec2::zeros();
            for j in 1..=m {
                let f = lb.powi(j as i32) - lb * w.powi(j as i32 - 1);
                shift += Vec2::new(coeffs[(j - 1, 0)], coeffs[(j - 1, 1)]) * f;
            }
            if node[off] == 0 {
                let s = lb;
                *point = chart.eval((1.0 - s) * edge.t0 + s * edge.t1)?;
            } else {
                *point += shift;
            }
        }
        map.is_identity = false;
        map.curved_edge = Some(edge);
        Ok(map)
    }

    /// Affine image of `ξ` on the straight triangle.
    pub fn affine_point(&self, xi: [f64; 2]) -> Vec2 {
        self.vertices[0] + self.affine * Vec2::new(xi[0], xi[1])
    }

    pub fn eval(&self, xi: [f64; 2]) -> MapEval {
        if self.is_identity {
            return MapEval {
                point: self.affine_point(xi),
                jacobian: self.affine,
                det: self.affine.determinant(),
            };
        }
        let m = self.degree_m;
        let lam = barycentric(xi);
        let mut point = Vec2::zeros();
        let mut jacobian = Mat2::zeros();
        for (node, cp) in lagrange_nodes(m).iter().zip(&self.control_points) {
            let f = [0, 1, 2].map(|i| lagrange_factor(m, node[i], lam[i]));
            let value = f[0].0 * f[1].0 * f[2].0;
            let d0 = f[0].1 * f[1].0 * f[2].0;
            let d1 = f[0].0 * f[1].1 * f[2].0;
            let d2 = f[0].0 * f[1].0 * f[2].1;
            // ∂λ/∂ξ = (−1, 1, 0), ∂λ/∂η = (−1, 0, 1)
            let dxi = d1 - d0;
            let deta = d2 - d0;
            point += cp * value;
            jacobian += Mat2::from_columns(&[cp * dxi, cp * deta]);
        }
        MapEval {
            point,
            jacobian,
            det: jacobian.determinant(),
        }
    }
}

/// `T_h^m`: the straight mesh with one element map per triangle.
#[derive(Clone, Debug)]
pub struct CurvedMesh {
    pub base: Triangulation,
    pub maps: Vec<CurvedElementMap>,
    pub degree_m: usize,
    pub boundary_triangles: Vec<usize>,
    pub interior_triangles: Vec<usize>,
    pub chart: Option<BoundaryChart>,
}

impl CurvedMesh {
    pub fn n_triangles(&self) -> usize {
        self.base.n_triangles()
    }

    pub fn is_boundary(&self, t: usize) -> bool {
        self.base.boundary_local_edge(t).is_some()
    }
}

/// Curves every triangle owning a boundary edge with a degree-`m` map.
///
/// Without a chart, or for `m = 1`, all maps are affine; boundary elements
/// still record their curved edge for `Ψ`. With a chart the boundary-layer
/// hypothesis must hold so each element has exactly one curved edge.
pub fn build_curved_mesh(
    mesh: &Triangulation,
    chart: Option<&BoundaryChart>,
    m: usize,
) -> Result<CurvedMesh> {
    if m == 0 {
        return Err(Error::InvalidArgument("geometric degree m must be ≥ 1".into()));
    }
    if chart.is_some() {
        let report = validate_mesh(mesh);
        if !report.boundary_hypothesis_ok {
            return Err(Error::InvalidMesh(format!(
                "{} triangle(s) have three boundary vertices or two boundary edges (first: {})",
                report.offending_triangles.len(),
                report.offending_triangles[0]
            )));
        }
    }
    let check_rule = triangle_rule(2 * m + 6);
    let mut maps = Vec::with_capacity(mesh.n_triangles());
    let mut boundary_triangles = Vec::new();
    let mut interior_triangles = Vec::new();
    for t in 0..mesh.n_triangles() {
        let vertices = mesh.triangle_points(t);
        let local = mesh.boundary_local_edge(t);
        match local {
            Some(_) => boundary_triangles.push(t),
            None => interior_triangles.push(t),
        }
        let map = match (local, chart) {
            (Some(e), Some(chart)) => {
                let tri = mesh.triangles[t];
                let param = |v: usize| {
                    mesh.boundary_params[v].ok_or_else(|| {
                        Error::InvalidMesh(format!("boundary vertex {v} has no chart parameter"))
                    })
                };
                let t0 = param(tri[(e + 1) % 3])?;
                let t1 = chart.unwrap_towards(t0, param(tri[(e + 2) % 3])?);
                let edge = CurvedEdge { local: e, t0, t1 };
                if m == 1 {
                    let mut map = CurvedElementMap::identity(vertices, m);
                    map.curved_edge = Some(edge);
                    map
                } else {
                    let map = CurvedElementMap::curved(vertices, m, edge, chart)?;
                    for p in &check_rule.points {
                        let det = map.eval(*p).det;
                        if det <= 0.0 {
                            return Err(Error::NonPositiveJacobian { element: t, det });
                        }
                    }
                    map
                }
            }
            _ => CurvedElementMap::identity(vertices, m),
        };
        maps.push(map);
    }
    Ok(CurvedMesh {
        base: mesh.clone(),
        maps,
        degree_m: m,
        boundary_triangles,
        interior_triangles,
        chart: chart.cloned(),
    })
}

/// `Ψ`, `∇Ψ` (physical gradient) and `det ∇Ψ` at a point of `K^m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactEval {
    pub point: Vec2,
    pub gradient: Mat2,
    pub det: f64,
}

/// The map `Ψ^m : Ω^m → Ω`, identity on interior elements.
///
/// On a boundary element with curved-edge coordinate `s = λ_b/(λ_a + λ_b)`
/// it is `x + (λ_a + λ_b)·δ(s)`, where `δ(s)` is the gap between the chart
/// and the curved edge of `K^m`.
#[derive(Clone, Debug)]
pub struct ExactMap {
    chart: Option<BoundaryChart>,
}

pub fn build_exact_map(cm: &CurvedMesh) -> ExactMap {
    ExactMap {
        chart: cm.chart.clone(),
    }
}

impl ExactMap {
    /// Gap `δ(s)` and `δ'(s)` of element `map`.
    pub fn gap(&self, map: &CurvedElementMap, s: f64) -> (Vec2, Vec2) {
        let (Some(edge), Some(chart)) = (map.curved_edge, &self.chart) else {
            return (Vec2::zeros(), Vec2::zeros());
        };
        let t = (1.0 - s) * edge.t0 + s * edge.t1;
        let (phi, dphi) = chart
            .eval_with_tangent(t)
            .expect("closed chart parameters are always in range");
        let g = map.eval(edge.reference_point(s));
        let dg = g.jacobian * edge.reference_tangent();
        (phi - g.point, dphi * (edge.t1 - edge.t0) - dg)
    }

    /// Evaluates at the point `F(ξ)`; `f` is `map.eval(ξ)`, passed in so
    /// callers can reuse it.
    pub fn eval_with(&self, map: &CurvedElementMap, xi: [f64; 2], f: &MapEval) -> ExactEval {
        let Some(edge) = map.curved_edge.filter(|_| self.chart.is_some()) else {
            return ExactEval {
                point: f.point,
                gradient: Mat2::identity(),
                det: 1.0,
            };
        };
        let lam = barycentric(xi);
        let (off, a, b) = edge.roles();
        let w = lam[a] + lam[b];
        let s = if w > 1e-14 { lam[b] / w } else { 0.5 };
        let (delta, ddelta) = self.gap(map, s);
        // reference gradients of λ_i
        let grad_lambda = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        // ∇w = −∇λ_off; w ∇s = ∇λ_b + s ∇λ_off
        let grad_w = -grad_lambda[off];
        let w_grad_s = grad_lambda[b] + grad_lambda[off] * s;
        let grad_ref = f.jacobian + delta * grad_w.transpose() + ddelta * w_grad_s.transpose();
        let inv = f
            .jacobian
            .try_inverse()
            .expect("element map Jacobian is checked nonsingular at build");
        let gradient = grad_ref * inv;
        ExactEval {
            point: f.point + delta * w,
            gradient,
            det: gradient.determinant(),
        }
    }

    pub fn eval(&self, map: &CurvedElementMap, xi: [f64; 2]) -> ExactEval {
        let f = map.eval(xi);
        self.eval_with(map, xi, &f)
    }
}

/// One row of [`geometric_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricRow {
    pub m: usize,
    pub level: usize,
    pub h: f64,
    pub sup_f_minus_i: f64,
    pub sup_psi_minus_i: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GeometricReport {
    pub rows: Vec<GeometricRow>,
    /// `(m, slope of sup|F − I|, slope of sup|Ψ − I|)`; `None` where the gap
    /// vanishes identically.
    pub slopes: Vec<(usize, Option<f64>, Option<f64>)>,
}

impl GeometricReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,level,h,sup_F_minus_I,sup_Psi_minus_I\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6e},{:.6e},{:.6e}",
                r.m, r.level, r.h, r.sup_f_minus_i, r.sup_psi_minus_i
            );
        }
        s
    }
}

/// Sample points on a uniform lattice of the reference triangle, edges
/// included.
fn sample_lattice(n: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            pts.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    pts
}

/// Largest `|F − I|` and `|Ψ − I|` over sampled points of the boundary
/// elements.
pub fn geometric_gaps(cm: &CurvedMesh, exact: &ExactMap) -> (f64, f64) {
    let samples = sample_lattice(12);
    let mut sup_f: f64 = 0.0;
    let mut sup_psi: f64 = 0.0;
    for &t in &cm.boundary_triangles {
        let map = &cm.maps[t];
        for &xi in &samples {
            let f = map.eval(xi);
            sup_f = sup_f.max((f.point - map.affine_point(xi)).norm());
            sup_psi = sup_psi.max((exact.eval_with(map, xi, &f).point - f.point).norm());
        }
    }
    (sup_f, sup_psi)
}

/// Gap table over `levels` uniform refinements of `base` for each `m`.
pub fn geometric_report(
    chart: &BoundaryChart,
    base: &Triangulation,
    m_list: &[usize],
    levels: usize,
) -> Result<GeometricReport> {
    if m_list.iter().any(|&m| !(1..=5).contains(&m)) {
        return Err(Error::InvalidArgument("geometric degrees must lie in 1..=5".into()));
    }
    let mut meshes = vec![base.clone()];
    for _ in 1..levels {
        let next = uniform_refine(meshes.last().expect("nonempty"), Some(chart))?;
        meshes.push(next);
    }
    let mut report = GeometricReport::default();
    for &m in m_list {
        let mut hs = Vec::new();
        let mut gf = Vec::new();
        let mut gp = Vec::new();
        for (level, mesh) in meshes.iter().enumerate() {
            let cm = build_curved_mesh(mesh, Some(chart), m)?;
            let exact = build_exact_map(&cm);
            let (sup_f, sup_psi) = geometric_gaps(&cm, &exact);
            report.rows.push(GeometricRow {
                m,
                level,
                h: mesh.h,
                sup_f_minus_i: sup_f,
                sup_psi_minus_i: sup_psi,
            });
            hs.push(mesh.h);
            gf.push(sup_f);
            gp.push(sup_psi);
        }
        let slope = |g: &[f64]| {
            if g.iter().all(|&v| v > 0.0) {
                log_log_slope(&hs, g).ok()
            } else {
                None
            }
        };
        report.slopes.push((m, slope(&gf), slope(&gp)));
    }
    Ok(report)
}
