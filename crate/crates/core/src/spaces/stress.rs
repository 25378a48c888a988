use nalgebra::DMatrix;
use std::collections::HashMap;

use super::scalar::{legendre01, poly_dim, ReferenceTab, ScalarBasis};
use crate::curving::CurvedMesh;
use crate::error::{Error, Result};
use crate::linalg::inverse_with_condition;
use crate::mesh::Triangulation;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::{Mat2, Vec2};

const MAX_CONDITION: f64 = 1e12;
const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Symmetric tensor components in storage order `(τ11, τ12, τ22)`, with the
/// matrices `E_c` spanning `S`.
fn unit_tensor(c: usize) -> Mat2 {
    match c {
        0 => Mat2::new(1.0, 0.0, 0.0, 0.0),
        1 => Mat2::new(0.0, 1.0, 1.0, 0.0),
        _ => Mat2::new(0.0, 0.0, 0.0, 1.0),
    }
}

/// Unit tangent (lower to higher vertex index) and normal `(t_y, −t_x)` of
/// a straight edge.
pub fn edge_frame(mesh: &Triangulation, e: usize) -> (Vec2, Vec2, f64) {
    let [a, b] = mesh.edges[e].vertices;
    let d = mesh.vertices[b] - mesh.vertices[a];
    let len = d.norm();
    let t = d / len;
    (t, Vec2::new(t.y, -t.x), len)
}

/// Position of the local DOFs of a degree-`p` element.
#[derive(Clone, Copy, Debug)]
pub struct LocalLayout {
    pub p: usize,
}

impl LocalLayout {
    pub fn n_local(&self) -> usize {
        3 * poly_dim(self.p as isize)
    }
    pub fn vertex(&self, i: usize, c: usize) -> usize {
        3 * i + c
    }
    fn edge_block(&self) -> usize {
        3 * (self.p - 1)
    }
    /// Normal-trace moment of order `j`, Cartesian component `d`.
    pub fn normal(&self, e: usize, j: usize, d: usize) -> usize {
        9 + e * self.edge_block() + 2 * j + d
    }
    pub fn tangential(&self, e: usize, j: usize) -> usize {
        9 + e * self.edge_block() + 2 * (self.p - 1) + j
    }
    pub fn n_interior_modes(&self) -> usize {
        poly_dim(self.p as isize - 3)
    }
    pub fn interior(&self, c: usize, beta: usize) -> usize {
        9 + 3 * self.edge_block() + c * self.n_interior_modes() + beta
    }
}

/// One element of the stress space: its degree, the global DOFs it touches,
/// and the coefficients of the matching global basis functions in the
/// spanning set `ψ_α E_c` (row `c · dim P_p + α`).
#[derive(Clone, Debug)]
pub struct StressElement {
    pub degree: usize,
    pub dofs: Vec<usize>,
    pub coeffs: DMatrix<f64>,
    /// Nodal basis in the spanning set, before constraints.
    pub local_basis: DMatrix<f64>,
    /// `local DOFs = transfer · global DOFs (restricted to dofs)`.
    pub transfer: DMatrix<f64>,
    pub condition: f64,
}

/// Component values and physical divergence of an element's basis
/// functions at a set of points (one row per point).
#[derive(Clone, Debug)]
pub struct StressTab {
    pub comps: [DMatrix<f64>; 3],
    pub div: [DMatrix<f64>; 2],
}

impl StressElement {
    fn block(&self, n_psi: usize, c: usize) -> nalgebra::DMatrixView<'_, f64> {
        self.coeffs.rows(c * n_psi, n_psi)
    }

    /// Values of the three components (no derivatives).
    pub fn values(&self, tab: &ReferenceTab) -> [DMatrix<f64>; 3] {
        let n = tab.vals.ncols();
        [0, 1, 2].map(|c| &tab.vals * self.block(n, c))
    }

    /// Values and divergence, given `(∇F)⁻¹` at every point.
    pub fn tabulate(&self, tab: &ReferenceTab, jinv: &[Mat2]) -> StressTab {
        let n = tab.vals.ncols();
        let comps = self.values(tab);
        let gx = [0, 1, 2].map(|c| &tab.dxi * self.block(n, c));
        let gy = [0, 1, 2].map(|c| &tab.deta * self.block(n, c));
        let nb = self.coeffs.ncols();
        let mut div = [DMatrix::zeros(jinv.len(), nb), DMatrix::zeros(jinv.len(), nb)];
        for (q, ji) in jinv.iter().enumerate() {
            for j in 0..nb {
                let dx = |c: usize| gx[c][(q, j)] * ji[(0, 0)] + gy[c][(q, j)] * ji[(1, 0)];
                let dy = |c: usize| gx[c][(q, j)] * ji[(0, 1)] + gy[c][(q, j)] * ji[(1, 1)];
                div[0][(q, j)] = dx(0) + dy(1);
                div[1][(q, j)] = dx(1) + dy(2);
            }
        }
        StressTab { comps, div }
    }
}

/// The Hu–Zhang stress space, optionally with degree `k + 1` on boundary
/// elements.
///
/// Global numbering: three tensor values per vertex, then the shared normal
/// moments of each edge, then element-owned tangential and interior
/// moments. On an edge between degrees `k + 1` and `k` only `k − 1` moment
/// orders are shared and the top moment of the higher side is eliminated so
/// that its normal trace has degree `k`.
#[derive(Clone, Debug)]
pub struct StressSpace {
    pub k: usize,
    pub enriched: bool,
    pub degrees: Vec<usize>,
    pub elements: Vec<StressElement>,
    pub n_dofs: usize,
    /// Shared moment orders per edge.
    pub edge_orders: Vec<usize>,
    pub edge_offsets: Vec<usize>,
    /// Largest DOF-Vandermonde condition number over all elements.
    pub max_condition: f64,
    bases: Vec<ScalarBasis>,
}

/// Builds the stress space on the curved mesh `cm`.
pub fn build_stress_space(cm: &CurvedMesh, k: usize, enriched: bool) -> Result<StressSpace> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("k must be ≥ 3, got {k}")));
    }
    let mesh = &cm.base;
    let degrees: Vec<usize> = (0..mesh.n_triangles())
        .map(|t| k + usize::from(enriched && cm.is_boundary(t)))
        .collect();
    let bases: Vec<ScalarBasis> = (0..=k + 1).map(ScalarBasis::new).collect();

    let mut next = 3 * mesh.n_vertices();
    let mut edge_orders = Vec::with_capacity(mesh.n_edges());
    let mut edge_offsets = Vec::with_capacity(mesh.n_edges());
    for edge in &mesh.edges {
        let q = edge
            .triangles
            .iter()
            .flatten()
            .map(|&(t, _)| degrees[t])
            .min()
            .expect("every edge has a triangle");
        edge_offsets.push(next);
        edge_orders.push(q - 1);
        next += 2 * (q - 1);
    }

    let mut elements = Vec::with_capacity(mesh.n_triangles());
    let mut max_condition: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let p = degrees[t];
        let layout = LocalLayout { p };
        let owned = 3 * (p - 1) + 3 * layout.n_interior_modes();
        let (local_basis, condition) = nodal_basis(mesh, t, &bases[p])?;
        max_condition = max_condition.max(condition);

        let mut columns: HashMap<usize, usize> = HashMap::new();
        let mut dofs = Vec::new();
        let mut col = |g: usize, dofs: &mut Vec<usize>| {
            *columns.entry(g).or_insert_with(|| {
                dofs.push(g);
                dofs.len() - 1
            })
        };
        let n_local = layout.n_local();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_local];
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for c in 0..3 {
                rows[layout.vertex(i, c)].push((col(3 * tri[i] + c, &mut dofs), 1.0));
            }
        }
        let mut own = next;
        for e in 0..3 {
            let ge = mesh.triangle_edges[t][e];
            let shared = edge_orders[ge];
            let (_, nu, _) = edge_frame(mesh, ge);
            let [lo, hi] = mesh.edges[ge].vertices;
            for j in 0..(p - 1) {
                for d in 0..2 {
                    let r = layout.normal(e, j, d);
                    if j < shared {
                        rows[r].push((col(edge_offsets[ge] + 2 * j + d, &mut dofs), 1.0));
                        continue;
                    }
                    // top moment of the higher-degree side, fixed by the
                    // endpoint values and the shared moments
                    let q = shared + 1;
                    let sign = if (q - 1) % 2 == 0 { 1.0 } else { -1.0 };
                    let scale = 1.0 / (2.0 * (2.0 * q as f64 - 1.0));
                    for c in 0..3 {
                        let en = unit_tensor(c) * nu;
                        rows[r].push((col(3 * hi + c, &mut dofs), scale * en[d]));
                        rows[r].push((col(3 * lo + c, &mut dofs), scale * sign * en[d]));
                    }
                    for jj in 0..shared {
                        let parity = if jj % 2 == 0 { 1.0 } else { -1.0 };
                        let factor = (2.0 * jj as f64 + 1.0) * (1.0 + sign * parity);
                        if factor != 0.0 {
                            let g = edge_offsets[ge] + 2 * jj + d;
                            rows[r].push((col(g, &mut dofs), -scale * factor));
                        }
                    }
                }
            }
            for j in 0..(p - 1) {
                rows[layout.tangential(e, j)].push((col(own, &mut dofs), 1.0));
                own += 1;
            }
        }
        for c in 0..3 {
            for beta in 0..layout.n_interior_modes() {
                rows[layout.interior(c, beta)].push((col(own, &mut dofs), 1.0));
                own += 1;
            }
        }
        debug_assert_eq!(own - next, owned);
        next = own;

        let mut transfer = DMatrix::zeros(n_local, dofs.len());
        for (r, entries) in rows.iter().enumerate() {
            for &(c, v) in entries {
                transfer[(r, c)] += v;
            }
        }
        let coeffs = &local_basis * &transfer;
        elements.push(StressElement {
            degree: p,
            dofs,
            coeffs,
            local_basis,
            transfer,
            condition,
        });
    }

    Ok(StressSpace {
        k,
        enriched,
        degrees,
        elements,
        n_dofs: next,
        edge_orders,
        edge_offsets,
        max_condition,
        bases,
    })
}

/// Reference point and orientation of local edge `e` of triangle `t`,
/// parametrized from its lower to its higher global vertex.
fn oriented_edge(mesh: &Triangulation, t: usize, e: usize) -> ([f64; 2], [f64; 2]) {
    let tri = mesh.triangles[t];
    let (a, b) = ((e + 1) % 3, (e + 2) % 3);
    let (start, end) = if tri[a] < tri[b] { (a, b) } else { (b, a) };
    (REFERENCE_VERTICES[start], REFERENCE_VERTICES[end])
}

/// Reference point at parameter `s` of local edge `e`, in global
/// orientation.
pub fn edge_reference_point(mesh: &Triangulation, t: usize, e: usize, s: f64) -> [f64; 2] {
    let (p0, p1) = oriented_edge(mesh, t, e);
    [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])]
}

/// DOF functionals applied to the spanning set, inverted.
fn nodal_basis(mesh: &Triangulation, t: usize, basis: &ScalarBasis) -> Result<(DMatrix<f64>, f64)> {
    let p = basis.degree;
    let layout = LocalLayout { p };
    let n_psi = basis.dim();
    let n = layout.n_local();
    let mut v = DMatrix::zeros(n, n);

    let vertex_tab = basis.tabulate(&REFERENCE_VERTICES);
    for i in 0..3 {
        for c in 0..3 {
            for a in 0..n_psi {
                v[(layout.vertex(i, c), c * n_psi + a)] = vertex_tab.vals[(i, a)];
            }
        }
    }

    let rule = edge_rule(2 * p);
    for e in 0..3 {
        let ge = mesh.triangle_edges[t][e];
        let (tan, nu, _) = edge_frame(mesh, ge);
        let points: Vec<[f64; 2]> = rule
            .points
            .iter()
            .map(|s| edge_reference_point(mesh, t, e, s[0]))
            .collect();
        let tab = basis.tabulate(&points);
        for j in 0..(p - 1) {
            for (qi, (s, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let wl = w * legendre01(j, s[0]);
                for c in 0..3 {
                    let en = unit_tensor(c) * nu;
                    let tt = tan.dot(&(unit_tensor(c) * tan));
                    for a in 0..n_psi {
                        let col = c * n_psi + a;
                        let psi = tab.vals[(qi, a)] * wl;
                        v[(layout.normal(e, j, 0), col)] += psi * en[0];
                        v[(layout.normal(e, j, 1), col)] += psi * en[1];
                        v[(layout.tangential(e, j), col)] += psi * tt;
                    }
                }
            }
        }
    }

    let n_int = layout.n_interior_modes();
    if n_int > 0 {
        let rule = triangle_rule(2 * p);
        let tab = basis.tabulate(&rule.points);
        for (qi, w) in rule.weights.iter().enumerate() {
            for c in 0..3 {
                for beta in 0..n_int {
                    for a in 0..n_psi {
                        v[(layout.interior(c, beta), c * n_psi + a)] +=
                            w * tab.vals[(qi, a)] * tab.vals[(qi, beta)];
                    }
                }
            }
        }
    }

    let (inv, cond) = inverse_with_condition(&v).ok_or(Error::SingularVandermonde {
        element: t,
        cond: f64::INFINITY,
    })?;
    if cond > MAX_CONDITION {
        return Err(Error::SingularVandermonde { element: t, cond });
    }
    Ok((inv, cond))
}

impl StressSpace {
    pub fn basis(&self, p: usize) -> &ScalarBasis {
        &self.bases[p]
    }

    /// Reference tabulation of the scalar basis of each element degree.
    pub fn reference_tabs(&self, points: &[[f64; 2]]) -> Vec<Option<ReferenceTab>> {
        (0..self.bases.len())
            .map(|p| {
                (p >= self.k && self.degrees.contains(&p)).then(|| self.bases[p].tabulate(points))
            })
            .collect()
    }

    /// Gathers the element's coefficients from a global vector.
    pub fn local_coefficients(&self, t: usize, global: &[f64]) -> Vec<f64> {
        self.elements[t].dofs.iter().map(|&g| global[g]).collect()
    }

    /// `σ_h` components at reference points of element `t`.
    pub fn eval(&self, t: usize, global: &[f64], points: &[[f64; 2]]) -> Vec<[f64; 3]> {
        let el = &self.elements[t];
        let tab = self.bases[el.degree].tabulate(points);
        let vals = el.values(&tab);
        let x = nalgebra::DVector::from_vec(self.local_coefficients(t, global));
        let comps = vals.map(|m| m * &x);
        (0..points.len())
            .map(|q| [comps[0][q], comps[1][q], comps[2][q]])
            .collect()
    }

    /// Global coefficients interpolating `field`, given on each element as a
    /// function of the reference point. Constrained moments are implied.
    pub fn interpolate(
        &self,
        cm: &CurvedMesh,
        field: impl Fn(usize, [f64; 2]) -> [f64; 3],
    ) -> Vec<f64> {
        let mesh = &cm.base;
        let mut out = vec![0.0; self.n_dofs];
        for (t, el) in self.elements.iter().enumerate() {
            let p = el.degree;
            let layout = LocalLayout { p };
            let mut local = vec![0.0; layout.n_local()];
            for (i, v) in REFERENCE_VERTICES.iter().enumerate() {
                let f = field(t, *v);
                for c in 0..3 {
                    local[layout.vertex(i, c)] = f[c];
                }
            }
            let rule = edge_rule(2 * p + 8);
            for e in 0..3 {
                let ge = mesh.triangle_edges[t][e];
                let (tan, nu, _) = edge_frame(mesh, ge);
                for (s, w) in rule.points.iter().zip(&rule.weights) {
                    let f = field(t, edge_reference_point(mesh, t, e, s[0]));
                    let tau = Mat2::new(f[0], f[1], f[1], f[2]);
                    let tn = tau * nu;
                    let tt = tan.dot(&(tau * tan));
                    for j in 0..(p - 1) {
                        let wl = w * legendre01(j, s[0]);
                        local[layout.normal(e, j, 0)] += wl * tn[0];
                        local[layout.normal(e, j, 1)] += wl * tn[1];
                        local[layout.tangential(e, j)] += wl * tt;
                    }
                }
            }
            let rule = triangle_rule(2 * p + 8);
            let tab = self.bases[p].tabulate(&rule.points);
            for (qi, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let f = field(t, *x);
                for c in 0..3 {
                    for beta in 0..layout.n_interior_modes() {
                        local[layout.interior(c, beta)] += w * f[c] * tab.vals[(qi, beta)];
                    }
                }
            }
            // every global DOF appears as an identity row of the transfer
            for (col, &g) in el.dofs.iter().enumerate() {
                let row = (0..layout.n_local()).find(|&r| {
                    el.transfer[(r, col)] == 1.0
                        && (0..el.dofs.len()).all(|c2| c2 == col || el.transfer[(r, c2)] == 0.0)
                });
                if let Some(r) = row {
                    out[g] = local[r];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curving::build_curved_mesh;
    use crate::geometry::make_builtin_chart;
    use crate::mesh::generate_disk_mesh;
    use rand::{Rng, SeedableRng};

    fn square_space(k: usize) -> (CurvedMesh, StressSpace) {
        let mesh = Triangulation::unit_square(1).unwrap();
        let cm = build_curved_mesh(&mesh, None, 1).unwrap();
        let space = build_stress_space(&cm, k, false).unwrap();
        (cm, space)
    }

    #[test]
    fn square_dimension() {
        let (_, space) = square_space(3);
        assert_eq!(space.n_dofs, 50);
        assert_eq!(space.elements[0].dofs.len(), 30);
    }

    #[test]
    fn rejects_low_degree() {
        let mesh = Triangulation::unit_square(1).unwrap();
        let cm = build_curved_mesh(&mesh, None, 1).unwrap();
        let e = build_stress_space(&cm, 2, false).unwrap_err();
        assert!(e.to_string().contains("k must be ≥ 3"));
    }

    #[test]
    fn duality() {
        for k in [3, 4] {
            let (cm, space) = square_space(k);
            for (t, el) in space.elements.iter().enumerate() {
                let (v_inv, _) = nodal_basis(&cm.base, t, space.basis(k)).unwrap();
                let v = v_inv.clone().try_inverse().unwrap();
                let id = &v * &el.local_basis;
                let err = (id - DMatrix::identity(v.nrows(), v.nrows())).amax();
                assert!(err < 1e-10, "k={k}: {err}");
            }
        }
    }

    #[test]
    fn constant_tensors_are_reproduced() {
        let chart = make_builtin_chart("circle").unwrap();
        let mesh = generate_disk_mesh(&chart, 0.5).unwrap();
        for m in [1, 3] {
            let cm = build_curved_mesh(&mesh, Some(&chart), m).unwrap();
            let space = build_stress_space(&cm, 3, false).unwrap();
            for e in [0, 7] {
                let (t, _, _) = edge_frame(&mesh, e);
                let c = [t.x * t.x, t.x * t.y, t.y * t.y];
                let coeffs = space.interpolate(&cm, |_, _| c);
                for el in 0..mesh.n_triangles() {
                    for v in space.eval(el, &coeffs, &[[0.2, 0.3], [0.6, 0.1]]) {
                        for i in 0..3 {
                            assert!((v[i] - c[i]).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn divergence_matches_finite_differences() {
        let chart = make_builtin_chart("circle").unwrap();
        let mesh = generate_disk_mesh(&chart, 0.5).unwrap();
        let cm = build_curved_mesh(&mesh, Some(&chart), 3).unwrap();
        let space = build_stress_space(&cm, 3, true).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let coeffs: Vec<f64> = (0..space.n_dofs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = cm.boundary_triangles[0];
        let map = &cm.maps[t];
        let xi = [0.3, 0.3];
        let f = map.eval(xi);
        let jinv = f.jacobian.try_inverse().unwrap();
        let el = &space.elements[t];
        let tab = space.basis(el.degree).tabulate(&[xi]);
        let st = el.tabulate(&tab, &[jinv]);
        let x = nalgebra::DVector::from_vec(space.local_coefficients(t, &coeffs));
        let div = [(&st.div[0] * &x)[0], (&st.div[1] * &x)[0]];
        // physical FD: move in x through ξ = ξ0 + J⁻¹ δx
        let h = 1e-6;
        let sample = |dx: Vec2| {
            let d = jinv * dx;
            space.eval(t, &coeffs, &[[xi[0] + d.x, xi[1] + d.y]])[0]
        };
        let ddx = |c: usize| (sample(Vec2::new(h, 0.0))[c] - sample(Vec2::new(-h, 0.0))[c]) / (2.0 * h);
        let ddy = |c: usize| (sample(Vec2::new(0.0, h))[c] - sample(Vec2::new(0.0, -h))[c]) / (2.0 * h);
        let fd = [ddx(0) + ddy(1), ddx(1) + ddy(2)];
        for i in 0..2 {
            assert!((fd[i] - div[i]).abs() <= 1e-5 * div[i].abs().max(1.0), "{fd:?} vs {div:?}");
        }
    }

    #[test]
    fn normal_traces_are_continuous_and_constraints_hold() {
        let chart = make_builtin_chart("circle").unwrap();
        let mesh = generate_disk_mesh(&chart, 0.5).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let rule = edge_rule(12);
        for (m, enriched) in [(1, false), (3, false), (3, true), (2, true)] {
            let cm = build_curved_mesh(&mesh, Some(&chart), m).unwrap();
            let space = build_stress_space(&cm, 3, enriched).unwrap();
            let coeffs: Vec<f64> = (0..space.n_dofs).map(|_| rng.random_range(-1.0..1.0)).collect();
            let trace = |t: usize, e: usize, ge: usize| -> Vec<Vec2> {
                let (_, nu, _) = edge_frame(&mesh, ge);
                let pts: Vec<[f64; 2]> = rule
                    .points
                    .iter()
                    .map(|s| edge_reference_point(&mesh, t, e, s[0]))
                    .collect();
                space
                    .eval(t, &coeffs, &pts)
                    .iter()
                    .map(|v| Mat2::new(v[0], v[1], v[1], v[2]) * nu)
                    .collect()
            };
            let mut worst: f64 = 0.0;
            let mut worst_mode: f64 = 0.0;
            for (ge, edge) in mesh.edges.iter().enumerate() {
                let [Some((t0, e0)), Some((t1, e1))] = edge.triangles else { continue };
                let a = trace(t0, e0, ge);
                let b = trace(t1, e1, ge);
                for (x, y) in a.iter().zip(&b) {
                    worst = worst.max((x - y).norm());
                }
                if space.degrees[t0] != space.degrees[t1] {
                    let hi = if space.degrees[t0] > space.degrees[t1] { &a } else { &b };
                    let top = space.k + 1;
                    for d in 0..2 {
                        let mode: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .zip(hi)
                            .map(|((s, w), v)| w * v[d] * legendre01(top, s[0]))
                            .sum();
                        worst_mode = worst_mode.max(mode.abs());
                    }
                }
            }
            assert!(worst <= 1e-10, "m={m} enriched={enriched}: jump {worst}");
            assert!(worst_mode <= 1e-10, "top mode {worst_mode}");
        }
    }
}
