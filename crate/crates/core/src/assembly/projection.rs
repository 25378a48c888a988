use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::norms::{element_jacobians, strain_tables};
use super::MaterialLaw;
use crate::curving::CurvedMesh;
use crate::error::{Error, Result};
use crate::linalg::inverse_with_condition;
use crate::quadrature::QuadratureRule;
use crate::spaces::{DisplacementSpace, StressSpace};
use crate::Vec2;

const MAX_LOCAL_CONDITION: f64 = 1e12;

/// Element-wise L² projection on `K^m` of `field(t, ξ, F(ξ))`.
pub fn l2_project(
    cm: &CurvedMesh,
    disp: &DisplacementSpace,
    rule: &QuadratureRule,
    field: &(dyn Fn(usize, [f64; 2], Vec2) -> [f64; 2] + Sync),
) -> Result<Vec<f64>> {
    let locals = (0..cm.n_triangles())
        .into_par_iter()
        .map(|t| {
            let (w, _) = element_jacobians(cm, t, rule)?;
            let phi = disp.basis(disp.degrees[t]).tabulate(&rule.points).vals;
            let n = phi.ncols();
            let mut mass = DMatrix::zeros(n, n);
            let mut rhs = DMatrix::zeros(n, 2);
            for (q, &xi) in rule.points.iter().enumerate() {
                let f = field(t, xi, cm.maps[t].eval(xi).point);
                let row = phi.row(q);
                mass += row.transpose() * row * w[q];
                for c in 0..2 {
                    rhs.column_mut(c).axpy(w[q] * f[c], &row.transpose(), 1.0);
                }
            }
            let chol = mass
                .cholesky()
                .ok_or(Error::SingularLocalSystem { element: t, cond: f64::INFINITY })?;
            let sol = chol.solve(&rhs);
            let mut out = sol.column(0).iter().copied().collect::<Vec<_>>();
            out.extend(sol.column(1).iter());
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = vec![0.0; disp.n_dofs];
    for (t, v) in locals.into_iter().enumerate() {
        x[disp.offsets[t]..disp.offsets[t] + v.len()].copy_from_slice(&v);
    }
    Ok(x)
}

/// Local postprocessing: on each element find `u* ∈ V*` with
/// `(ε(u*), ε(v)) = (Aσ_h, ε(v))` for `v ∈ V*` and `P_V u* = u_h`.
#[allow(clippy::too_many_arguments)]
pub fn postprocess_displacement(
    cm: &CurvedMesh,
    stress: &StressSpace,
    disp: &DisplacementSpace,
    star: &DisplacementSpace,
    law: &MaterialLaw,
    sigma: &[f64],
    u: &[f64],
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    if !star.star || sigma.len() != stress.n_dofs || u.len() != disp.n_dofs {
        return Err(Error::DimensionMismatch(
            "postprocessing needs a star space and matching coefficient vectors".into(),
        ));
    }
    let locals = (0..cm.n_triangles())
        .into_par_iter()
        .map(|t| {
            let (w, jinv) = element_jacobians(cm, t, rule)?;
            let eps = strain_tables(star, t, &rule.points, &jinv);
            let ns = 2 * star.n_modes(t);
            let nv = disp.n_modes(t);
            let psi = disp.basis(disp.degrees[t]).tabulate(&rule.points).vals;
            let phi = star.basis(star.degrees[t]).tabulate(&rule.points).vals;
            let n_star = phi.ncols();
            let sig = stress.eval(t, sigma, &rule.points);
            let uh = disp.eval(t, u, &rule.points);

            let mut k = DMatrix::zeros(ns + 2 * nv, ns + 2 * nv);
            let mut rhs = DVector::zeros(ns + 2 * nv);
            for q in 0..rule.len() {
                let wq = w[q];
                let a = law.apply_a_components(sig[q]);
                for i in 0..ns {
                    let ei = [eps[0][(q, i)], eps[1][(q, i)], eps[2][(q, i)]];
                    rhs[i] += wq * super::tensor_inner(a, ei);
                    for j in 0..ns {
                        let ej = [eps[0][(q, j)], eps[1][(q, j)], eps[2][(q, j)]];
                        k[(i, j)] += wq * super::tensor_inner(ei, ej);
                    }
                }
                for c in 0..2 {
                    for i in 0..nv {
                        let r = ns + c * nv + i;
                        rhs[r] += wq * uh[q][c] * psi[(q, i)];
                        for a in 0..n_star {
                            let v = wq * psi[(q, i)] * phi[(q, a)];
                            k[(r, c * n_star + a)] += v;
                            k[(c * n_star + a, r)] += v;
                        }
                    }
                }
            }
            // constraint rows and multipliers scale with the element area
            let scale = 1.0 / w.iter().sum::<f64>();
            for r in ns..ns + 2 * nv {
                rhs[r] *= scale;
                k.row_mut(r).scale_mut(scale);
                k.column_mut(r).scale_mut(scale);
            }
            let (inv, cond) = inverse_with_condition(&k)
                .ok_or(Error::SingularLocalSystem { element: t, cond: f64::INFINITY })?;
            if cond > MAX_LOCAL_CONDITION {
                return Err(Error::SingularLocalSystem { element: t, cond });
            }
            let sol = inv * rhs;
            Ok(sol.rows(0, ns).iter().copied().collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = vec![0.0; star.n_dofs];
    for (t, v) in locals.into_iter().enumerate() {
        x[star.offsets[t]..star.offsets[t] + v.len()].copy_from_slice(&v);
    }
    Ok(x)
}
