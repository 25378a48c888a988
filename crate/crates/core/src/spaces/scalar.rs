use nalgebra::{DMatrix, DVector};

use crate::quadrature::triangle_rule;

/// Shifted Legendre polynomial `L_j(s) = P_j(2s − 1)` on `[0, 1]`.
pub fn legendre01(j: usize, s: f64) -> f64 {
    let x = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    if j == 0 {
        return 1.0;
    }
    for n in 1..j {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * x * p1 - nf * p0) / (nf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `dim P_p(R²)`; zero for negative degrees.
pub fn poly_dim(p: isize) -> usize {
    if p < 0 {
        0
    } else {
        let p = p as usize;
        (p + 1) * (p + 2) / 2
    }
}

/// Values and reference derivatives of a scalar basis at a set of points,
/// one row per point.
#[derive(Clone, Debug)]
pub struct ReferenceTab {
    pub vals: DMatrix<f64>,
    pub dxi: DMatrix<f64>,
    pub deta: DMatrix<f64>,
}

/// Orthonormal basis of `P_p` on the reference triangle.
///
/// Monomials centred at the barycentre, graded by total degree, are
/// orthonormalized by two passes of modified Gram–Schmidt. The first
/// `dim P_q` modes span `P_q` for every `q ≤ p`.
#[derive(Clone, Debug)]
pub struct ScalarBasis {
    pub degree: usize,
    exps: Vec<(i32, i32)>,
    /// Column `i` holds the monomial coefficients of mode `i`.
    coeffs: DMatrix<f64>,
}

const CENTER: f64 = 1.0 / 3.0;

impl ScalarBasis {
    pub fn new(degree: usize) -> Self {
        let mut exps = Vec::new();
        for d in 0..=degree as i32 {
            for b in 0..=d {
                exps.push((d - b, b));
            }
        }
        let n = exps.len();
        let rule = triangle_rule(2 * degree);
        // columns: monomials sampled at the nodes, scaled by √w, so that
        // Euclidean products are exact L² products
        let mut samples = DMatrix::zeros(rule.len(), n);
        for (r, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let m = monomials(&exps, *p);
            for c in 0..n {
                samples[(r, c)] = m[c] * w.sqrt();
            }
        }
        let mut coeffs = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut v = samples.column(i).into_owned();
            let mut c = DVector::zeros(n);
            c[i] = 1.0;
            for _pass in 0..2 {
                for j in 0..i {
                    let r = samples.column(j).dot(&v);
                    v -= samples.column(j) * r;
                    c -= coeffs.column(j) * r;
                }
            }
            let norm = v.norm();
            samples.set_column(i, &(v / norm));
            coeffs.set_column(i, &(c / norm));
        }
        Self { degree, exps, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn eval(&self, xi: [f64; 2]) -> DVector<f64> {
        self.coeffs.tr_mul(&monomials(&self.exps, xi))
    }

    /// Values and `(∂/∂ξ, ∂/∂η)` of every mode at every point.
    pub fn tabulate(&self, points: &[[f64; 2]]) -> ReferenceTab {
        let n = self.dim();
        let q = points.len();
        let mut mv = DMatrix::zeros(q, n);
        let mut mx = DMatrix::zeros(q, n);
        let mut my = DMatrix::zeros(q, n);
        for (r, &[x, y]) in points.iter().enumerate() {
            let (dx, dy) = (x - CENTER, y - CENTER);
            for (c, &(a, b)) in self.exps.iter().enumerate() {
                mv[(r, c)] = dx.powi(a) * dy.powi(b);
                if a > 0 {
                    mx[(r, c)] = a as f64 * dx.powi(a - 1) * dy.powi(b);
                }
                if b > 0 {
                    my[(r, c)] = b as f64 * dx.powi(a) * dy.powi(b - 1);
                }
            }
        }
        ReferenceTab {
            vals: mv * &self.coeffs,
            dxi: mx * &self.coeffs,
            deta: my * &self.coeffs,
        }
    }
}

fn monomials(exps: &[(i32, i32)], [x, y]: [f64; 2]) -> DVector<f64> {
    let (dx, dy) = (x - CENTER, y - CENTER);
    DVector::from_iterator(exps.len(), exps.iter().map(|&(a, b)| dx.powi(a) * dy.powi(b)))
}
