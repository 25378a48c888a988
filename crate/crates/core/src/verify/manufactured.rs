use std::fmt;
use std::sync::Arc;

use super::dual::Dual2;
use crate::assembly::MaterialLaw;
use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

type Field = dyn Fn([Dual2; 2]) -> [Dual2; 2] + Send + Sync;

/// Everything derived from `u` at one point.
#[derive(Clone, Copy, Debug)]
pub struct FieldEval {
    pub u: Vec2,
    pub grad_u: Mat2,
    pub strain: Mat2,
    pub sigma: Mat2,
    /// `grad_sigma[i][j][l] = ∂_l σ_ij`.
    pub grad_sigma: [[[f64; 2]; 2]; 2],
    pub div_sigma: Vec2,
}

/// A displacement field with exactly differentiated stress and load.
#[derive(Clone)]
pub struct ManufacturedSolution {
    pub name: String,
    pub law: MaterialLaw,
    field: Arc<Field>,
}

impl fmt::Debug for ManufacturedSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedSolution")
            .field("name", &self.name)
            .field("law", &self.law)
            .finish()
    }
}

/// Names accepted by [`ManufacturedSolution::builtin`].
pub const BUILTIN_SOLUTIONS: &[&str] = &["exp_trig", "linear_patch"];

impl ManufacturedSolution {
    pub fn new(
        name: impl Into<String>,
        law: MaterialLaw,
        field: impl Fn([Dual2; 2]) -> [Dual2; 2] + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), law, field: Arc::new(field) }
    }

    /// `u = (e^{xy} cos x, e^y sin(x + y))`.
    pub fn exp_trig(law: MaterialLaw) -> Self {
        Self::new("exp_trig", law, |[x, y]| {
            [(x * y).exp() * x.cos(), y.exp() * (x + y).sin()]
        })
    }

    /// `u = (x + 2y, 3x − y) / 10`, constant stress and zero load.
    pub fn linear_patch(law: MaterialLaw) -> Self {
        Self::new("linear_patch", law, |[x, y]| {
            [(x + y * 2.0) * 0.1, (x * 3.0 - y) * 0.1]
        })
    }

    /// Polynomial field from `(coefficient, a, b)` terms `c xᵃ yᵇ` per
    /// component.
    pub fn polynomial(law: MaterialLaw, terms: [Vec<(f64, i32, i32)>; 2]) -> Self {
        Self::new("polynomial", law, move |[x, y]| {
            let comp = |ts: &[(f64, i32, i32)]| {
                ts.iter().fold(Dual2::constant(0.0), |acc, &(c, a, b)| {
                    acc + x.powi(a) * y.powi(b) * c
                })
            };
            [comp(&terms[0]), comp(&terms[1])]
        })
    }

    pub fn builtin(name: &str, law: MaterialLaw) -> Result<Self> {
        match name {
            "exp_trig" => Ok(Self::exp_trig(law)),
            "linear_patch" => Ok(Self::linear_patch(law)),
            other => Err(Error::InvalidArgument(format!(
                "unknown solution '{other}', expected one of {BUILTIN_SOLUTIONS:?}"
            ))),
        }
    }

    pub fn eval(&self, x: Vec2) -> FieldEval {
        let [u0, u1] = (self.field)(Dual2::point(x.x, x.y));
        let u = [u0, u1];
        let grad_u = Mat2::new(u0.g[0], u0.g[1], u1.g[0], u1.g[1]);
        let strain = (grad_u + grad_u.transpose()) * 0.5;
        let sigma = self.law.apply_c(strain);
        let (lambda, mu) = (self.law.lambda, self.law.mu);
        // ∂_l ε_ij = (∂_l∂_j u_i + ∂_l∂_i u_j) / 2
        let d_eps = |i: usize, j: usize, l: usize| 0.5 * (u[i].h[l][j] + u[j].h[l][i]);
        let mut grad_sigma = [[[0.0; 2]; 2]; 2];
        for (i, gi) in grad_sigma.iter_mut().enumerate() {
            for (j, gij) in gi.iter_mut().enumerate() {
                for (l, g) in gij.iter_mut().enumerate() {
                    let tr = d_eps(0, 0, l) + d_eps(1, 1, l);
                    *g = 2.0 * mu * d_eps(i, j, l) + if i == j { lambda * tr } else { 0.0 };
                }
            }
        }
        let div_sigma = Vec2::new(
            grad_sigma[0][0][0] + grad_sigma[0][1][1],
            grad_sigma[1][0][0] + grad_sigma[1][1][1],
        );
        FieldEval { u: Vec2::new(u0.v, u1.v), grad_u, strain, sigma, grad_sigma, div_sigma }
    }

    pub fn displacement(&self, x: Vec2) -> Vec2 {
        let [u0, u1] = (self.field)(Dual2::point(x.x, x.y));
        Vec2::new(u0.v, u1.v)
    }

    /// `σ` in component storage `(11, 12, 22)`.
    pub fn stress(&self, x: Vec2) -> [f64; 3] {
        let s = self.eval(x).sigma;
        [s[(0, 0)], s[(0, 1)], s[(1, 1)]]
    }

    /// Body force `f = −div σ`.
    pub fn load(&self, x: Vec2) -> Vec2 {
        -self.eval(x).div_sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn law() -> MaterialLaw {
        MaterialLaw::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn exp_trig_at_origin() {
        let ms = ManufacturedSolution::exp_trig(law());
        let e = ms.eval(Vec2::zeros());
        assert!((e.strain[(0, 1)] - 0.5).abs() < 1e-15);
        assert!((e.sigma[(0, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(ms.displacement(Vec2::zeros()), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn identities_at_random_points() {
        let ms = ManufacturedSolution::exp_trig(MaterialLaw::new(2.0, 0.7).unwrap());
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let e = ms.eval(x);
            assert!((ms.law.apply_a(e.sigma) - e.strain).amax() < 1e-12 * (1.0 + e.strain.amax()));
            assert_eq!(e.sigma[(0, 1)], e.sigma[(1, 0)]);
            assert!((ms.load(x) + e.div_sigma).amax() < 1e-12);
        }
    }

    #[test]
    fn div_sigma_matches_finite_differences() {
        let ms = ManufacturedSolution::exp_trig(law());
        let x = Vec2::new(0.3, -0.4);
        let h = 1e-5;
        let s = |p: Vec2| ms.eval(p).sigma;
        let dx = (s(x + Vec2::new(h, 0.0)) - s(x - Vec2::new(h, 0.0))) / (2.0 * h);
        let dy = (s(x + Vec2::new(0.0, h)) - s(x - Vec2::new(0.0, h))) / (2.0 * h);
        let div = Vec2::new(dx[(0, 0)] + dy[(0, 1)], dx[(1, 0)] + dy[(1, 1)]);
        assert!((div - ms.eval(x).div_sigma).amax() < 1e-8);
    }

    #[test]
    fn linear_patch_has_constant_stress() {
        let ms = ManufacturedSolution::linear_patch(law());
        let a = ms.eval(Vec2::new(0.1, 0.9));
        let b = ms.eval(Vec2::new(0.7, 0.2));
        assert!((a.sigma - b.sigma).amax() < 1e-15);
        assert_eq!(a.div_sigma, Vec2::zeros());
        assert!(ManufacturedSolution::builtin("cubic", law()).is_err());
    }

    #[test]
    fn polynomial_terms() {
        let ms = ManufacturedSolution::polynomial(law(), [vec![(2.0, 2, 1)], vec![(1.0, 0, 3)]]);
        let e = ms.eval(Vec2::new(1.0, 2.0));
        assert_eq!(e.u, Vec2::new(4.0, 8.0));
        assert_eq!(e.grad_u, Mat2::new(8.0, 2.0, 0.0, 12.0));
    }
}
