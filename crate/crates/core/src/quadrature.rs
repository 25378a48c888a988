//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}` and on the
//! reference edge `[0, 1]`.

use crate::error::{Error, Result};

/// Which reference domain a rule integrates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Triangle,
    Edge,
}

/// Points and weights with a guaranteed polynomial exactness degree.
///
/// Triangle points are reference coordinates `(ξ, η)`; edge points are stored
/// as `(s, 0)`. Weights sum to the reference measure.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub domain: Domain,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates `(λ0, λ1, λ2)` of triangle point `i`.
    pub fn barycentric(&self, i: usize) -> [f64; 3] {
        let [x, y] = self.points[i];
        [1.0 - x - y, x, y]
    }

    /// Edge parameter of point `i`.
    pub fn param(&self, i: usize) -> f64 {
        self.points[i][0]
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] → [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` on `[-1, 1]`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> QuadratureRule {
    let n = (degree + 1).div_ceil(2).max(1);
    let (nodes, weights) = gauss_legendre(n);
    QuadratureRule {
        domain: Domain::Edge,
        points: nodes.into_iter().map(|s| [s, 0.0]).collect(),
        weights,
        exact_degree: 2 * n - 1,
    }
}

/// Highest degree covered by the tabulated symmetric rules.
pub const MAX_TABULATED_DEGREE: usize = 5;

/// Symmetric Gauss rules on the triangle (degrees 1, 2, 4, 5).
#[allow(clippy::excessive_precision)]
pub fn tabulated_triangle_rule(degree: usize) -> Result<QuadratureRule> {
    let (orbits, exact): (Vec<(f64, Orbit)>, usize) = match degree {
        0 | 1 => (vec![(1.0, Orbit::Centroid)], 1),
        2 => (vec![(1.0 / 3.0, Orbit::S21(1.0 / 6.0))], 2),
        3 | 4 => (
            vec![
                (
                    0.223_381_589_678_011_465_695_007_008_433_12,
                    Orbit::S21(0.445_948_490_915_964_886_318_329_253_883_05),
                ),
                (
                    0.109_951_743_655_321_867_638_326_324_900_21,
                    Orbit::S21(0.091_576_213_509_770_743_459_571_463_402_202),
                ),
            ],
            4,
        ),
        5 => {
            let r15 = 15f64.sqrt();
            (
                vec![
                    (9.0 / 40.0, Orbit::Centroid),
                    ((155.0 - r15) / 1200.0, Orbit::S21((6.0 - r15) / 21.0)),
                    ((155.0 + r15) / 1200.0, Orbit::S21((6.0 + r15) / 21.0)),
                ],
                5,
            )
        }
        d => {
            return Err(Error::InvalidArgument(format!(
                "no tabulated triangle rule of degree {d} (max {MAX_TABULATED_DEGREE})"
            )))
        }
    };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    // orbit weights above are for unit area; the reference triangle has 1/2
    for (w, orbit) in orbits {
        match orbit {
            Orbit::Centroid => {
                points.push([1.0 / 3.0, 1.0 / 3.0]);
                weights.push(0.5 * w);
            }
            Orbit::S21(a) => {
                let b = 1.0 - 2.0 * a;
                for p in [[a, a], [b, a], [a, b]] {
                    points.push(p);
                    weights.push(0.5 * w);
                }
            }
        }
    }
    Ok(QuadratureRule {
        domain: Domain::Triangle,
        points,
        weights,
        exact_degree: exact,
    })
}

enum Orbit {
    Centroid,
    /// Three points with barycentric coordinates `(a, a, 1 − 2a)` permuted.
    S21(f64),
}

/// Collapsed (Duffy) tensor Gauss rule exact to `degree`; available for any
/// degree.
pub fn collapsed_triangle_rule(degree: usize) -> QuadratureRule {
    // The collapse adds one power of (1 − u) to the integrand.
    let n = (degree + 2).div_ceil(2).max(1);
    let (nodes, w1) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in nodes.iter().zip(&w1) {
        for (&v, &wv) in nodes.iter().zip(&w1) {
            points.push([u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    QuadratureRule {
        domain: Domain::Triangle,
        points,
        weights,
        exact_degree: (2 * n - 2).max(degree),
    }
}

/// Triangle rule exact on all bivariate polynomials of total degree
/// `degree`: the tabulated symmetric rule when one exists, otherwise the
/// collapsed tensor rule.
pub fn triangle_rule(degree: usize) -> QuadratureRule {
    if degree <= MAX_TABULATED_DEGREE {
        if let Ok(rule) = tabulated_triangle_rule(degree) {
            return rule;
        }
    }
    collapsed_triangle_rule(degree)
}
