//! Gram matrices of the norms used by the stability study and error
//! evaluation. All products are computed on `K^m`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::edge_points;
use crate::curving::CurvedMesh;
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletList};
use crate::quadrature::QuadratureRule;
use crate::spaces::{edge_frame, DisplacementSpace, StressSpace};
use crate::Mat2;

/// Weights `w·det ∇F` and `(∇F)⁻¹` at the rule points of element `t`.
pub(crate) fn element_jacobians(
    cm: &CurvedMesh,
    t: usize,
    rule: &QuadratureRule,
) -> Result<(Vec<f64>, Vec<Mat2>)> {
    let mut w = Vec::with_capacity(rule.len());
    let mut jinv = Vec::with_capacity(rule.len());
    for (&xi, &wq) in rule.points.iter().zip(&rule.weights) {
        let f = cm.maps[t].eval(xi);
        if f.det <= 0.0 {
            return Err(Error::NonPositiveJacobian { element: t, det: f.det });
        }
        w.push(wq * f.det);
        jinv.push(f.jacobian.try_inverse().expect("positive determinant"));
    }
    Ok((w, jinv))
}

fn weighted_product(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut wb = b.clone();
    for (q, mut row) in wb.row_iter_mut().enumerate() {
        row *= w[q];
    }
    a.tr_mul(&wb)
}

fn assemble_blocks(
    n: usize,
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
) -> Result<SparseMatrix> {
    let mut t = TripletList::new(n, n);
    for (dofs, m) in &blocks {
        t.add_block(dofs, dofs, m);
    }
    t.build()
}

fn stress_element_gram(
    cm: &CurvedMesh,
    stress: &StressSpace,
    rule: &QuadratureRule,
    local: impl Fn(&crate::spaces::StressTab, &[f64]) -> DMatrix<f64> + Sync,
) -> Result<SparseMatrix> {
    let tabs = stress.reference_tabs(&rule.points);
    let blocks = (0..cm.n_triangles())
        .into_par_iter()
        .map(|t| {
            let (w, jinv) = element_jacobians(cm, t, rule)?;
            let el = &stress.elements[t];
            let tab = el.tabulate(tabs[el.degree].as_ref().expect("tabulated"), &jinv);
            Ok((el.dofs.clone(), local(&tab, &w)))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(stress.n_dofs, blocks)
}

/// `(σ, τ)` with `σ : τ = σ₁₁τ₁₁ + 2σ₁₂τ₁₂ + σ₂₂τ₂₂`.
pub fn stress_l2_gram(
    cm: &CurvedMesh,
    stress: &StressSpace,
    rule: &QuadratureRule,
) -> Result<SparseMatrix> {
    stress_element_gram(cm, stress, rule, |tab, w| {
        let [s0, s1, s2] = &tab.comps;
        weighted_product(s0, s0, w) + weighted_product(s1, s1, w) * 2.0 + weighted_product(s2, s2, w)
    })
}

/// `(div σ, div τ)`.
pub fn stress_div_gram(
    cm: &CurvedMesh,
    stress: &StressSpace,
    rule: &QuadratureRule,
) -> Result<SparseMatrix> {
    stress_element_gram(cm, stress, rule, |tab, w| {
        let [d0, d1] = &tab.div;
        weighted_product(d0, d0, w) + weighted_product(d1, d1, w)
    })
}

/// `Σ_E h_E (σν, τν)_E` over all edges; normal traces are single valued.
pub fn stress_edge_gram(
    cm: &CurvedMesh,
    stress: &StressSpace,
    rule: &QuadratureRule,
) -> Result<SparseMatrix> {
    let mesh = &cm.base;
    let blocks = (0..mesh.n_edges())
        .into_par_iter()
        .map(|ge| {
            let (t, e) = mesh.edges[ge].triangles[0].expect("edge has a triangle");
            let h = edge_frame(mesh, ge).2;
            let el = &stress.elements[t];
            let pts = edge_points(cm, t, e, rule);
            let xi: Vec<[f64; 2]> = pts.iter().map(|p| p.xi).collect();
            let vals = el.values(&stress.basis(el.degree).tabulate(&xi));
            let n_loc = el.dofs.len();
            let mut t0 = DMatrix::zeros(pts.len(), n_loc);
            let mut t1 = DMatrix::zeros(pts.len(), n_loc);
            for (q, p) in pts.iter().enumerate() {
                let (nx, ny) = (p.normal.x, p.normal.y);
                for j in 0..n_loc {
                    t0[(q, j)] = vals[0][(q, j)] * nx + vals[1][(q, j)] * ny;
                    t1[(q, j)] = vals[1][(q, j)] * nx + vals[2][(q, j)] * ny;
                }
            }
            let w: Vec<f64> = pts.iter().map(|p| p.weight * h).collect();
            Ok((el.dofs.clone(), weighted_product(&t0, &t0, &w) + weighted_product(&t1, &t1, &w)))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(stress.n_dofs, blocks)
}

/// Block-diagonal `(u, v)`.
pub fn displacement_mass_gram(
    cm: &CurvedMesh,
    disp: &DisplacementSpace,
    rule: &QuadratureRule,
) -> Result<SparseMatrix> {
    let blocks = (0..cm.n_triangles())
        .into_par_iter()
        .map(|t| {
            let (w, _) = element_jacobians(cm, t, rule)?;
            let phi = disp.basis(disp.degrees[t]).tabulate(&rule.points).vals;
            let m = weighted_product(&phi, &phi, &w);
            let n = m.nrows();
            let mut block = DMatrix::zeros(2 * n, 2 * n);
            block.view_mut((0, 0), (n, n)).copy_from(&m);
            block.view_mut((n, n), (n, n)).copy_from(&m);
            Ok((disp.element_range(t).collect(), block))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(disp.n_dofs, blocks)
}

/// Physical strain components `(ε₁₁, ε₁₂, ε₂₂)` of every local vector mode,
/// one row per point.
pub(crate) fn strain_tables(
    disp: &DisplacementSpace,
    t: usize,
    points: &[[f64; 2]],
    jinv: &[Mat2],
) -> [DMatrix<f64>; 3] {
    let tab = disp.basis(disp.degrees[t]).tabulate(points);
    let n = tab.vals.ncols();
    let mut e = [
        DMatrix::zeros(points.len(), 2 * n),
        DMatrix::zeros(points.len(), 2 * n),
        DMatrix::zeros(points.len(), 2 * n),
    ];
    for (q, ji) in jinv.iter().enumerate() {
        for a in 0..n {
            let (gx, gy) = (tab.dxi[(q, a)], tab.deta[(q, a)]);
            let dx = gx * ji[(0, 0)] + gy * ji[(1, 0)];
            let dy = gx * ji[(0, 1)] + gy * ji[(1, 1)];
            e[0][(q, a)] = dx;
            e[1][(q, a)] = 0.5 * dy;
            e[1][(q, n + a)] = 0.5 * dx;
            e[2][(q, n + a)] = dy;
        }
    }
    e
}

/// Block-diagonal broken `(ε(u), ε(v))`.
pub fn displacement_strain_gram(
    cm: &CurvedMesh,
    disp: &DisplacementSpace,
    rule: &QuadratureRule,
) -> Result<SparseMatrix> {
    let blocks = (0..cm.n_triangles())
        .into_par_iter()
        .map(|t| {
            let (w, jinv) = element_jacobians(cm, t, rule)?;
            let [e0, e1, e2] = strain_tables(disp, t, &rule.points, &jinv);
            let m = weighted_product(&e0, &e0, &w)
                + weighted_product(&e1, &e1, &w) * 2.0
                + weighted_product(&e2, &e2, &w);
            Ok((disp.element_range(t).collect(), m))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(disp.n_dofs, blocks)
}

/// `Σ_E h_E⁻¹ ([u], [v])_E`; on boundary edges the one-sided trace.
pub fn displacement_jump_gram(
    cm: &CurvedMesh,
    disp: &DisplacementSpace,
    rule: &QuadratureRule,
) -> Result<SparseMatrix> {
    let mesh = &cm.base;
    let blocks = (0..mesh.n_edges())
        .into_par_iter()
        .map(|ge| {
            let edge = &mesh.edges[ge];
            let h = edge_frame(mesh, ge).2;
            let mut dofs = Vec::new();
            let mut cols: Vec<DMatrix<f64>> = Vec::new();
            let mut w = Vec::new();
            for (side, entry) in edge.triangles.iter().enumerate() {
                let Some((t, e)) = *entry else { continue };
                let pts = edge_points(cm, t, e, rule);
                if side == 0 {
                    w = pts.iter().map(|p| p.weight / h).collect();
                }
                let xi: Vec<[f64; 2]> = pts.iter().map(|p| p.xi).collect();
                let mut phi = disp.basis(disp.degrees[t]).tabulate(&xi).vals;
                if side == 1 {
                    phi = -phi;
                }
                cols.push(phi);
                dofs.push(disp.element_range(t).collect::<Vec<_>>());
            }
            let widths: Vec<usize> = cols.iter().map(|c| c.ncols()).collect();
            let n_total: usize = widths.iter().sum();
            // jump operator per component: [φ_t0, −φ_t1]
            let mut j = DMatrix::zeros(w.len(), n_total);
            let mut c0 = 0;
            for c in &cols {
                j.view_mut((0, c0), (w.len(), c.ncols())).copy_from(c);
                c0 += c.ncols();
            }
            let m = weighted_product(&j, &j, &w);
            // scatter into component-major element ranges
            let mut all = Vec::new();
            let mut pos = Vec::new();
            for comp in 0..2 {
                let mut off = 0;
                for (side, d) in dofs.iter().enumerate() {
                    let n = widths[side];
                    for a in 0..n {
                        all.push(d[comp * n + a]);
                        pos.push((comp, off + a));
                    }
                    off += n;
                }
            }
            let mut block = DMatrix::zeros(all.len(), all.len());
            for (r, &(cr, pr)) in pos.iter().enumerate() {
                for (c, &(cc, pc)) in pos.iter().enumerate() {
                    if cr == cc {
                        block[(r, c)] = m[(pr, pc)];
                    }
                }
            }
            Ok((all, block))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(disp.n_dofs, blocks)
}
