use std::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order forward-mode dual number in two variables: value, gradient
/// and Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    /// The coordinate function `x_i` at value `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut g = [0.0; 2];
        g[i] = 1.0;
        Self { v, g, h: [[0.0; 2]; 2] }
    }

    /// Independent variables `(x, y)` at a point.
    pub fn point(x: f64, y: f64) -> [Self; 2] {
        [Self::variable(x, 0), Self::variable(y, 1)]
    }

    /// `f(self)` given `f`, `f'` and `f''` at the value.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, hij) in row.iter_mut().enumerate() {
                *hij = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
            }
        }
        Self { v: f0, g: [f1 * self.g[0], f1 * self.g[1]], h }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn powi(self, n: i32) -> Self {
        let nf = n as f64;
        let d1 = if n == 0 { 0.0 } else { nf * self.v.powi(n - 1) };
        let d2 = if (0..2).contains(&n) { 0.0 } else { nf * (nf - 1.0) * self.v.powi(n - 2) };
        self.chain(self.v.powi(n), d1, d2)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    fn map2(self, o: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = f(self.h[i][j], o.h[i][j]);
            }
        }
        Self { v: f(self.v, o.v), g: [f(self.g[0], o.g[0]), f(self.g[1], o.g[1])], h }
    }
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.map2(o, |a, b| a + b)
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.map2(o, |a, b| a - b)
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = self.h[i][j] * o.v
                    + self.g[i] * o.g[j]
                    + o.g[i] * self.g[j]
                    + self.v * o.h[i][j];
            }
        }
        Self {
            v: self.v * o.v,
            g: [self.g[0] * o.v + self.v * o.g[0], self.g[1] * o.v + self.v * o.g[1]],
            h,
        }
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Add<f64> for Dual2 {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl Sub<f64> for Dual2 {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Dual2 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.map2(Self::constant(0.0), |a, _| a * c)
    }
}
