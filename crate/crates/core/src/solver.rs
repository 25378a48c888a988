//! Sparse direct solution of the saddle system and dense discrete stability
//! constants.

use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};

use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::linalg::{spmv, spmv_transpose, SparseMatrix};

/// Diagnostics of the sparse factorization.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorizationStats {
    pub n: usize,
    pub nnz: usize,
    pub refinement_steps: usize,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub sigma_coeffs: Vec<f64>,
    pub u_coeffs: Vec<f64>,
    /// `‖b − Kx‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
    pub stats: FactorizationStats,
}

const MAX_REFINEMENT_STEPS: usize = 10;

/// `[A Bᵀ; B 0] x` for the assembled blocks.
fn saddle_apply(sys: &SaddleSystem, x: &[f64]) -> Vec<f64> {
    let (s, u) = x.split_at(sys.n_sigma);
    let mut top = spmv(&sys.a_block, s);
    for (t, v) in top.iter_mut().zip(spmv_transpose(&sys.b_block, u)) {
        *t += v;
    }
    top.extend(spmv(&sys.b_block, s));
    top
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse LU with partial pivoting followed by iterative refinement until
/// the relative residual drops below `tol`.
pub fn solve_saddle(sys: &SaddleSystem, tol: f64) -> Result<SolveResult> {
    faer::set_global_parallelism(Par::Seq);
    let n = sys.n_sigma + sys.n_u;
    let k = sys.full_matrix()?;
    let lu = k
        .sp_lu()
        .map_err(|e| Error::Factorization(format!("sparse LU of a {n}×{n} saddle matrix failed: {e:?}")))?;
    let b = sys.full_rhs();
    let b_norm = norm2(&b);
    let mut stats = FactorizationStats { n, nnz: k.compute_nnz(), refinement_steps: 0 };
    if b_norm == 0.0 {
        return Ok(SolveResult {
            sigma_coeffs: vec![0.0; sys.n_sigma],
            u_coeffs: vec![0.0; sys.n_u],
            relative_residual: 0.0,
            stats,
        });
    }
    let solve = |r: &[f64]| -> Vec<f64> {
        let mut m = Mat::from_fn(n, 1, |i, _| r[i]);
        lu.solve_in_place(m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    };
    let mut x = solve(&b);
    let residual = |x: &[f64]| -> Vec<f64> {
        saddle_apply(sys, x).iter().zip(&b).map(|(kx, bi)| bi - kx).collect()
    };
    let mut r = residual(&x);
    let mut rel = norm2(&r) / b_norm;
    while rel > tol {
        if stats.refinement_steps == MAX_REFINEMENT_STEPS || !rel.is_finite() {
            return Err(Error::ResidualStagnation { residual: rel, iterations: stats.refinement_steps });
        }
        let d = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
        let r_new = residual(&candidate);
        let rel_new = norm2(&r_new) / b_norm;
        stats.refinement_steps += 1;
        if !(rel_new < 0.5 * rel) {
            if rel_new < rel {
                x = candidate;
                rel = rel_new;
            }
            if rel > tol {
                return Err(Error::ResidualStagnation { residual: rel, iterations: stats.refinement_steps });
            }
            break;
        }
        x = candidate;
        r = r_new;
        rel = rel_new;
    }
    let u_coeffs = x.split_off(sys.n_sigma);
    Ok(SolveResult { sigma_coeffs: x, u_coeffs, relative_residual: rel, stats })
}

/// Norm pairing of a stability constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// `‖·‖_{H(div)}` on stresses, `‖·‖_{L²}` on displacements.
    HdivL2,
    /// `‖·‖_{0,h,m}` on stresses, `|·|_{1,h,m}` on displacements.
    MeshDependent,
}

impl NormKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormKind::HdivL2 => "Hdiv-L2",
            NormKind::MeshDependent => "mesh-dependent",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Hdiv-L2" | "hdiv-l2" | "hdiv" => Ok(NormKind::HdivL2),
            "mesh-dependent" | "mesh" => Ok(NormKind::MeshDependent),
            other => Err(Error::InvalidArgument(format!(
                "unknown norm kind '{other}', expected Hdiv-L2 or mesh-dependent"
            ))),
        }
    }
}

/// Discrete inf-sup and kernel-coercivity constants.
#[derive(Clone, Debug)]
pub struct StabilityConstants {
    pub beta_h: f64,
    /// `None` when not requested.
    pub alpha_h: Option<f64>,
    /// Displacement attaining `beta_h`, normalized in the displacement norm.
    pub beta_mode: Vec<f64>,
}

/// One CSV row of a stability study.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub level: usize,
    pub h: f64,
    pub m: usize,
    pub k: usize,
    pub norm_kind: NormKind,
    pub n_sigma: usize,
    pub n_u: usize,
    pub beta_h: f64,
    pub alpha_h: Option<f64>,
}

impl StabilityReport {
    pub const CSV_HEADER: &'static str = "level,h,m,k,norm_kind,beta_h,alpha_h";

    pub fn csv_row(&self) -> String {
        let alpha = self.alpha_h.map(|a| format!("{a:.6e}")).unwrap_or_default();
        format!(
            "{},{:.6e},{},{},{},{:.6e},{}",
            self.level, self.h, self.m, self.k, self.norm_kind, self.beta_h, alpha
        )
    }

    pub fn to_csv(rows: &[StabilityReport]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Largest system handled by the dense eigen path.
pub const MAX_DENSE_DOFS: usize = 20_000;

fn dense_lower_factor(m: &SparseMatrix, what: &'static str) -> Result<Mat<f64>> {
    let d = m.to_dense();
    let llt = d.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite(what))?;
    Ok(llt.L().to_owned())
}

/// `beta_h = sqrt(λ_min)` of `B X⁻¹ Bᵀ w = λ M w`; with `with_alpha`, also
/// `alpha_h = min a(τ, τ)/‖τ‖²_X` over the discrete kernel of `B`.
pub fn infsup_constant(
    x_gram: &SparseMatrix,
    m_gram: &SparseMatrix,
    b_block: &SparseMatrix,
    a_block: Option<&SparseMatrix>,
) -> Result<StabilityConstants> {
    faer::set_global_parallelism(Par::Seq);
    let (n_u, n_s) = (b_block.nrows(), b_block.ncols());
    if x_gram.nrows() != n_s || m_gram.nrows() != n_u {
        return Err(Error::DimensionMismatch("Gram matrices do not match B".into()));
    }
    if n_s + n_u > MAX_DENSE_DOFS {
        return Err(Error::TooManyDofs(n_s + n_u));
    }
    let lx = dense_lower_factor(x_gram, "stress Gram matrix")?;
    let lm = dense_lower_factor(m_gram, "displacement Gram matrix")?;

    // C = L_M⁻¹ B L_X⁻ᵀ, so that λ(C Cᵀ) are the generalized eigenvalues
    let mut y = b_block.to_dense().transpose().to_owned();
    solve_lower_triangular_in_place(lx.as_ref(), y.as_mut(), Par::Seq);
    let mut c = y.transpose().to_owned();
    solve_lower_triangular_in_place(lm.as_ref(), c.as_mut(), Par::Seq);
    let s = &c * c.transpose();
    let eig = s
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Factorization(format!("eigensolver failed: {e:?}")))?;
    let lambda_min = eig[0].max(0.0);
    let beta_h = lambda_min.sqrt();
    // mode in original coordinates: v = L_M⁻ᵀ w
    let mut v = smallest_eigenvector(&s, eig[0]);
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(
        lm.transpose(),
        v.as_mut(),
        Par::Seq,
    );
    let beta_mode: Vec<f64> = v.col(0).iter().copied().collect();

    let alpha_h = match a_block {
        None => None,
        Some(a) => Some(kernel_coercivity(a, &lx, &c)?),
    };
    Ok(StabilityConstants { beta_h, alpha_h, beta_mode })
}

/// Unit eigenvector of the symmetric `s` for its smallest eigenvalue
/// `lambda`, by shifted inverse iteration.
fn smallest_eigenvector(s: &Mat<f64>, lambda: f64) -> Mat<f64> {
    let n = s.nrows();
    let scale = s.norm_l2() / (n as f64).sqrt();
    let shift = lambda - 1e-6 * scale.max(f64::MIN_POSITIVE);
    let shifted = s - Mat::<f64>::identity(n, n) * shift;
    let mut x = Mat::from_fn(n, 1, |i, _| 1.0 + 0.01 * (i % 7) as f64);
    let Ok(llt) = shifted.llt(Side::Lower) else {
        let evd = s.self_adjoint_eigen(Side::Lower).expect("eigensolver");
        return evd.U().col(0).as_mat().to_owned();
    };
    for _ in 0..8 {
        llt.solve_in_place(x.as_mut());
        let norm = x.norm_l2();
        x *= 1.0 / norm;
    }
    x
}

/// `λ_min` of `L_X⁻¹ A L_X⁻ᵀ` on the null space of `C`.
fn kernel_coercivity(a: &SparseMatrix, lx: &Mat<f64>, c: &Mat<f64>) -> Result<f64> {
    let n = lx.nrows();
    let mut w = a.to_dense();
    solve_lower_triangular_in_place(lx.as_ref(), w.as_mut(), Par::Seq);
    let mut at = w.transpose().to_owned();
    solve_lower_triangular_in_place(lx.as_ref(), at.as_mut(), Par::Seq);
    // orthonormal basis Q of range(Cᵀ); the kernel is its complement
    let q = c.transpose().to_owned().qr().compute_thin_Q();
    let g = &at * &q;
    let qtg = q.transpose() * &g;
    let shift = 2.0 * at.norm_l2() + 1.0;
    let shifted = qtg + Mat::<f64>::identity(q.ncols(), q.ncols()) * shift;
    let restricted = &at - &q * g.transpose() - &g * q.transpose() + &q * shifted * q.transpose();
    let eig = restricted
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Factorization(format!("eigensolver failed: {e:?}")))?;
    debug_assert_eq!(eig.len(), n);
    Ok(eig[0])
}

/// Eigenvalue signs of the dense saddle matrix: `(positive, negative,
/// zero)` with zero meaning `|λ| ≤ 1e-12 · max|λ|`.
pub fn saddle_inertia(sys: &SaddleSystem) -> Result<(usize, usize, usize)> {
    let n = sys.n_sigma + sys.n_u;
    if n > MAX_DENSE_DOFS {
        return Err(Error::TooManyDofs(n));
    }
    let k = sys.full_matrix()?.to_dense();
    let eig = k
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Factorization(format!("eigensolver failed: {e:?}")))?;
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let pos = eig.iter().filter(|&&v| v > tol).count();
    let neg = eig.iter().filter(|&&v| v < -tol).count();
    Ok((pos, neg, n - pos - neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{to_dense, TripletList};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn sparse(d: &DMatrix<f64>) -> SparseMatrix {
        let mut t = TripletList::new(d.nrows(), d.ncols());
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                t.push(i, j, d[(i, j)]);
            }
        }
        t.build().unwrap()
    }

    fn random(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let g = random(rng, n, n);
        &g * g.transpose() + DMatrix::identity(n, n) * n as f64
    }

    fn random_system(seed: u64) -> SaddleSystem {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let (ns, nu) = (12, 5);
        SaddleSystem {
            a_block: sparse(&spd(&mut rng, ns)),
            b_block: sparse(&random(&mut rng, nu, ns)),
            rhs_stress: (0..ns).map(|_| rng.random_range(-1.0..1.0)).collect(),
            rhs_disp: (0..nu).map(|_| rng.random_range(-1.0..1.0)).collect(),
            n_sigma: ns,
            n_u: nu,
        }
    }

    #[test]
    fn saddle_solve_matches_dense() {
        let sys = random_system(3);
        let res = solve_saddle(&sys, 1e-12).unwrap();
        assert!(res.relative_residual <= 1e-12);
        let k = DMatrix::from_fn(17, 17, |i, j| to_dense(&sys.full_matrix().unwrap())[(i, j)]);
        let x = k.lu().solve(&nalgebra::DVector::from_vec(sys.full_rhs())).unwrap();
        for i in 0..12 {
            assert!((x[i] - res.sigma_coeffs[i]).abs() < 1e-10);
        }
        assert_eq!(saddle_inertia(&sys).unwrap(), (12, 5, 0));
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let mut sys = random_system(4);
        sys.rhs_stress.iter_mut().for_each(|v| *v = 0.0);
        sys.rhs_disp.iter_mut().for_each(|v| *v = 0.0);
        let res = solve_saddle(&sys, 1e-10).unwrap();
        assert_eq!(res.relative_residual, 0.0);
        assert!(res.u_coeffs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singular_saddle_is_reported() {
        let mut sys = random_system(5);
        // B with a zero row violates inf-sup
        let mut b = to_dense(&sys.b_block);
        b.row_mut(0).fill(0.0);
        sys.b_block = sparse(&b);
        assert!(solve_saddle(&sys, 1e-10).is_err());
    }

    #[test]
    fn infsup_matches_svd_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let (ns, nu) = (10, 4);
        let b = random(&mut rng, nu, ns);
        let x = spd(&mut rng, ns);
        let m = spd(&mut rng, nu);
        let a = spd(&mut rng, ns);
        let res = infsup_constant(&sparse(&x), &sparse(&m), &sparse(&b), Some(&sparse(&a))).unwrap();
        // oracle: σ_min(L_M⁻¹ B L_X⁻ᵀ)
        let lx = x.clone().cholesky().unwrap().l();
        let lm = m.clone().cholesky().unwrap().l();
        let c = lm.try_inverse().unwrap() * &b * lx.try_inverse().unwrap().transpose();
        let sv = c.clone().svd(false, false).singular_values;
        let beta = sv.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((res.beta_h - beta).abs() < 1e-10 * beta.max(1.0), "{} {}", res.beta_h, beta);
        // mode attains the minimum: ‖B X⁻¹ Bᵀ v - β² M v‖ small
        let v = nalgebra::DVector::from_vec(res.beta_mode.clone());
        let lhs = &b * x.clone().try_inverse().unwrap() * b.transpose() * &v;
        assert!((lhs - &m * &v * (beta * beta)).amax() < 1e-9);
        assert!(((v.transpose() * &m * &v)[0] - 1.0).abs() < 1e-10);
        // oracle for α: minimize the Rayleigh quotient on an explicit kernel basis
        let svd = b.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let full = DMatrix::<f64>::identity(ns, ns) - vt.transpose() * &vt;
        let kernel = full.svd(true, false).u.unwrap().columns(0, ns - nu).into_owned();
        let ak = kernel.transpose() * &a * &kernel;
        let xk = kernel.transpose() * &x * &kernel;
        let lk = xk.cholesky().unwrap().l().try_inverse().unwrap();
        let red = &lk * ak * lk.transpose();
        let alpha = red.symmetric_eigen().eigenvalues.min();
        assert!((res.alpha_h.unwrap() - alpha).abs() < 1e-9 * alpha, "{:?} {}", res.alpha_h, alpha);
    }

    #[test]
    fn norm_kind_round_trip() {
        for k in [NormKind::HdivL2, NormKind::MeshDependent] {
            assert_eq!(k.as_str().parse::<NormKind>().unwrap(), k);
        }
        assert!("energy".parse::<NormKind>().is_err());
    }
}
