//! Parametric boundary charts.
//!
//! A [`BoundaryChart`] describes `∂Ω` as an ordered list of smooth parametric
//! pieces. Mesh vertices on the boundary carry their chart parameter, and all
//! curving downstream is driven by parameters rather than geometric lookups.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::Vec2;

/// One smooth piece of a boundary curve.
pub trait CurvePiece: Send + Sync {
    fn eval(&self, t: f64) -> Vec2;
    fn derivative(&self, t: f64) -> Vec2;

    /// Second derivative; central differences of [`CurvePiece::derivative`]
    /// unless a piece knows better.
    fn second_derivative(&self, t: f64) -> Vec2 {
        let step = 1e-5;
        (self.derivative(t + step) - self.derivative(t - step)) / (2.0 * step)
    }
}

#[derive(Clone)]
struct Segment {
    hi: f64,
    piece: Arc<dyn CurvePiece>,
}

/// A piecewise smooth parametric curve `φ : [0, period] → R²`.
#[derive(Clone)]
pub struct BoundaryChart {
    name: String,
    segments: Vec<Segment>,
    closed: bool,
    period: f64,
}

impl fmt::Debug for BoundaryChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryChart")
            .field("name", &self.name)
            .field("segments", &self.segments.len())
            .field("closed", &self.closed)
            .field("period", &self.period)
            .finish()
    }
}

/// A chart parameter together with the point it maps to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub t: f64,
    pub x: Vec2,
}

impl BoundaryChart {
    /// Builds a chart from consecutive pieces. `ranges` must tile
    /// `[0, period]` in order.
    pub fn from_pieces(
        name: impl Into<String>,
        pieces: Vec<((f64, f64), Arc<dyn CurvePiece>)>,
        closed: bool,
    ) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("chart needs at least one piece".into()));
        }
        let mut segments = Vec::with_capacity(pieces.len());
        let mut cursor = 0.0;
        for ((lo, hi), piece) in pieces {
            if (lo - cursor).abs() > 1e-12 || hi <= lo {
                return Err(Error::InvalidArgument(format!(
                    "chart pieces must tile the parameter range; got [{lo}, {hi}] after {cursor}"
                )));
            }
            cursor = hi;
            segments.push(Segment { hi, piece });
        }
        Ok(Self {
            name: name.into(),
            segments,
            closed,
            period: cursor,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Total parameter length.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Maps `t` into the parameter range: modulo the period for closed
    /// charts, range-checked for open ones.
    pub fn reduce(&self, t: f64) -> Result<f64> {
        if self.closed {
            let r = t.rem_euclid(self.period);
            // rem_euclid can round up to exactly `period`
            Ok(if r >= self.period { 0.0 } else { r })
        } else if (0.0..=self.period).contains(&t) {
            Ok(t)
        } else {
            Err(Error::ParameterOutOfRange {
                t,
                lo: 0.0,
                hi: self.period,
            })
        }
    }

    fn segment(&self, t: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.hi <= t);
        &self.segments[idx.min(self.segments.len() - 1)]
    }

    /// `φ(t)`.
    pub fn eval(&self, t: f64) -> Result<Vec2> {
        let t = self.reduce(t)?;
        Ok(self.segment(t).piece.eval(t))
    }

    /// `(φ(t), φ'(t))`.
    pub fn eval_with_tangent(&self, t: f64) -> Result<(Vec2, Vec2)> {
        let t = self.reduce(t)?;
        let seg = self.segment(t);
        Ok((seg.piece.eval(t), seg.piece.derivative(t)))
    }

    /// `(φ(t), φ'(t), φ''(t))`.
    pub fn eval_second(&self, t: f64) -> Result<(Vec2, Vec2, Vec2)> {
        let t = self.reduce(t)?;
        let seg = self.segment(t);
        Ok((
            seg.piece.eval(t),
            seg.piece.derivative(t),
            seg.piece.second_derivative(t),
        ))
    }

    /// Unwraps `t1` so that the chart path `t0 → t1` is the short way around
    /// a closed chart.
    pub fn unwrap_towards(&self, t0: f64, t1: f64) -> f64 {
        if !self.closed {
            return t1;
        }
        let half = 0.5 * self.period;
        let mut d = t1 - t0;
        while d > half {
            d -= self.period;
        }
        while d < -half {
            d += self.period;
        }
        t0 + d
    }

    /// Chart parameter of the point nearest to `x`.
    ///
    /// Newton on the normal equation `(φ(t) − x)·φ'(t) = 0`, started from
    /// `hint` or from a coarse scan; falls back to golden-section search on
    /// a bracketing window when Newton leaves the basin.
    pub fn project(&self, x: Vec2, hint: Option<f64>) -> Result<ChartPoint> {
        let start = match hint {
            Some(t) => self.clamp(t),
            None => self.scan(x, 512),
        };
        if let Some(t) = self.newton(x, start) {
            return self.finish(t);
        }
        let window = if self.closed {
            self.period / 16.0
        } else {
            self.period / 4.0
        };
        let t = self.golden(x, start - window, start + window);
        if let Some(t) = self.newton(x, t) {
            return self.finish(t);
        }
        // Global restart before giving up.
        let t = self.scan(x, 4096);
        if let Some(t) = self.newton(x, t) {
            return self.finish(t);
        }
        let best = self.clamp(t);
        let distance = (self.eval(best)? - x).norm();
        Err(Error::ProjectionFailed {
            best_t: best,
            distance,
        })
    }

    fn finish(&self, t: f64) -> Result<ChartPoint> {
        let t = self.reduce(self.clamp(t))?;
        Ok(ChartPoint {
            t,
            x: self.eval(t)?,
        })
    }

    fn clamp(&self, t: f64) -> f64 {
        if self.closed {
            t
        } else {
            t.clamp(0.0, self.period)
        }
    }

    fn distance2(&self, x: Vec2, t: f64) -> f64 {
        let t = self.clamp(t);
        let t = self.reduce(t).unwrap_or(t);
        (self.segment(t).piece.eval(t) - x).norm_squared()
    }

    fn scan(&self, x: Vec2, samples: usize) -> f64 {
        (0..samples)
            .map(|i| self.period * (i as f64 + 0.5) / samples as f64)
            .map(|t| (t, self.distance2(x, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, _)| t)
            .unwrap_or(0.0)
    }

    fn newton(&self, x: Vec2, mut t: f64) -> Option<f64> {
        const MAX_ITER: usize = 50;
        let start_dist = self.distance2(x, t);
        for _ in 0..MAX_ITER {
            let (p, d1, d2) = self.eval_second(self.clamp(t)).ok()?;
            let r = p - x;
            let g = r.dot(&d1);
            let speed2 = d1.norm_squared();
            if g.abs() <= 1e-12 * speed2 {
                // One more step takes the quadratically converging iterate
                // to round-off.
                let dg = speed2 + r.dot(&d2);
                if dg > 0.0 && (self.closed || (0.0..=self.period).contains(&(t - g / dg))) {
                    t -= g / dg;
                }
                // Accept only a minimum that is no farther than the start.
                let dist = self.distance2(x, t);
                return (dist <= start_dist * (1.0 + 1e-9) + 1e-24).then_some(t);
            }
            let dg = speed2 + r.dot(&d2);
            if dg <= 0.0 {
                return None;
            }
            let step = g / dg;
            // Newton jumped out of the local basin.
            if step.abs() > 0.25 * self.period {
                return None;
            }
            t -= step;
            if !self.closed && !(0.0..=self.period).contains(&t) {
                t = self.clamp(t);
                let (p, d1) = self.eval_with_tangent(t).ok()?;
                // Endpoint minimum of an open chart.
                let g = (p - x).dot(&d1);
                let at_lo = t == 0.0 && g >= 0.0;
                let at_hi = t == self.period && g <= 0.0;
                if at_lo || at_hi {
                    return Some(t);
                }
            }
        }
        None
    }

    fn golden(&self, x: Vec2, mut a: f64, mut b: f64) -> f64 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.distance2(x, c);
        let mut fd = self.distance2(x, d);
        for _ in 0..200 {
            if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.distance2(x, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.distance2(x, d);
            }
        }
        0.5 * (a + b)
    }
}

struct Circle;

impl CurvePiece for Circle {
    fn eval(&self, t: f64) -> Vec2 {
        Vec2::new(t.cos(), t.sin())
    }
    fn derivative(&self, t: f64) -> Vec2 {
        Vec2::new(-t.sin(), t.cos())
    }
    fn second_derivative(&self, t: f64) -> Vec2 {
        Vec2::new(-t.cos(), -t.sin())
    }
}

/// `x = (1 + 0.4 cos 3t) cos t`, `y = (1 + (0.4 + 0.22 sin t) cos 3t) sin t`.
struct ThreeLeaf;

impl CurvePiece for ThreeLeaf {
    fn eval(&self, t: f64) -> Vec2 {
        let (s, c) = t.sin_cos();
        let c3 = (3.0 * t).cos();
        Vec2::new((1.0 + 0.4 * c3) * c, (1.0 + (0.4 + 0.22 * s) * c3) * s)
    }

    fn derivative(&self, t: f64) -> Vec2 {
        let (s, c) = t.sin_cos();
        let (s3, c3) = (3.0 * t).sin_cos();
        let dx = -s - 0.4 * (3.0 * s3 * c + c3 * s);
        // y = s + a·c3·s with a = 0.4 + 0.22 s
        let a = 0.4 + 0.22 * s;
        let da = 0.22 * c;
        let dy = c + da * c3 * s - 3.0 * a * s3 * s + a * c3 * c;
        Vec2::new(dx, dy)
    }

    fn second_derivative(&self, t: f64) -> Vec2 {
        let (s, c) = t.sin_cos();
        let (s3, c3) = (3.0 * t).sin_cos();
        let ddx = -c - 0.4 * (10.0 * c3 * c - 6.0 * s3 * s);
        let a = 0.4 + 0.22 * s;
        let da = 0.22 * c;
        let dda = -0.22 * s;
        let dc3 = -3.0 * s3;
        let ddc3 = -9.0 * c3;
        let ddy = -s
            + dda * c3 * s
            + a * ddc3 * s
            - a * c3 * s
            + 2.0 * (da * dc3 * s + da * c3 * c + a * dc3 * c);
        Vec2::new(ddx, ddy)
    }
}

/// Builds one of the builtin closed charts, both with period 2π.
pub fn make_builtin_chart(name: &str) -> Result<BoundaryChart> {
    let piece: Arc<dyn CurvePiece> = match name {
        "circle" => Arc::new(Circle),
        "three_leaf" => Arc::new(ThreeLeaf),
        other => return Err(Error::UnknownChart(other.to_string())),
    };
    BoundaryChart::from_pieces(name, vec![((0.0, TAU), piece)], true)
}

/// Names accepted by [`make_builtin_chart`].
pub const BUILTIN_CHARTS: [&str; 2] = ["circle", "three_leaf"];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn circle_values() {
        let c = make_builtin_chart("circle").unwrap();
        assert_abs_diff_eq!(c.eval(0.0).unwrap(), Vec2::new(1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(c.eval(PI).unwrap(), Vec2::new(-1.0, 0.0), epsilon = 1e-15);
        let (_, tangent) = c.eval_with_tangent(FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(tangent, Vec2::new(-1.0, 0.0), epsilon = 1e-15);
        assert!(c.is_closed());
        assert_abs_diff_eq!(c.period(), TAU);
    }

    #[test]
    fn three_leaf_values() {
        let c = make_builtin_chart("three_leaf").unwrap();
        assert_abs_diff_eq!(c.eval(0.0).unwrap(), Vec2::new(1.4, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(c.eval(FRAC_PI_2).unwrap(), Vec2::new(0.0, 1.0), epsilon = 1e-15);
        // closed: eval(0) = eval(period)
        assert_abs_diff_eq!(c.eval(0.0).unwrap(), c.eval(TAU).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn unknown_chart() {
        assert!(matches!(make_builtin_chart("ellipse"), Err(Error::UnknownChart(_))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(7);
        for name in BUILTIN_CHARTS {
            let chart = make_builtin_chart(name).unwrap();
            for _ in 0..100 {
                let t = rng.random_range(0.0..TAU);
                let step = 1e-6;
                let fd = (chart.eval(t + step).unwrap() - chart.eval(t - step).unwrap()) / (2.0 * step);
                let (_, d1, d2) = chart.eval_second(t).unwrap();
                assert!((fd - d1).norm() <= 1e-6 * d1.norm(), "{name} t={t}");
                assert!(d1.norm() > 0.0);
                let (_, a) = chart.eval_with_tangent(t + step).unwrap();
                let (_, b) = chart.eval_with_tangent(t - step).unwrap();
                let fd2 = (a - b) / (2.0 * step);
                assert!((fd2 - d2).norm() <= 1e-6 * d2.norm().max(1.0), "{name} t={t}");
            }
        }
    }

    #[test]
    fn project_circle_examples() {
        let c = make_builtin_chart("circle").unwrap();
        let p = c.project(Vec2::new(2.0, 0.0), None).unwrap();
        assert_abs_diff_eq!(p.t.min(TAU - p.t), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x, Vec2::new(1.0, 0.0), epsilon = 1e-12);
        let p = c.project(Vec2::new(0.0, 0.5), None).unwrap();
        assert_abs_diff_eq!(p.t, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x, Vec2::new(0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn project_three_leaf_against_dense_scan() {
        let c = make_builtin_chart("three_leaf").unwrap();
        let x = Vec2::new(1.5, 0.0);
        let p = c.project(x, Some(0.1)).unwrap();
        // oracle: dense parameter scan
        let n = 100_000;
        let (best, _) = (0..n)
            .map(|i| TAU * i as f64 / n as f64)
            .map(|t| (t, (c.eval(t).unwrap() - x).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let diff = (p.t - best).abs().min(TAU - (p.t - best).abs());
        assert!(diff < 1e-6 + TAU / n as f64, "t = {}, scan = {}", p.t, best);
        assert!(p.t.min(TAU - p.t) < 1e-6);
        let (_, d1) = c.eval_with_tangent(p.t).unwrap();
        assert!(((p.x - x).dot(&d1)).abs() <= 1e-12 * d1.norm_squared());
    }

    #[test]
    fn open_chart_range_error() {
        let chart = BoundaryChart::from_pieces(
            "arc",
            vec![((0.0, 1.0), Arc::new(Circle) as Arc<dyn CurvePiece>)],
            false,
        )
        .unwrap();
        assert!(chart.eval(0.5).is_ok());
        assert!(matches!(chart.eval(1.5), Err(Error::ParameterOutOfRange { .. })));
    }

    proptest::proptest! {
        #[test]
        fn projection_is_idempotent(t in 0.0..TAU, leaf in proptest::bool::ANY) {
            let chart = make_builtin_chart(if leaf { "three_leaf" } else { "circle" }).unwrap();
            let x = chart.eval(t).unwrap();
            let p = chart.project(x, Some(t + 0.01)).unwrap();
            let d = (p.t - t).abs();
            proptest::prop_assert!(d.min(TAU - d) < 1e-10, "t={} got {}", t, p.t);
            let p = chart.project(x, None).unwrap();
            let d = (p.t - t).abs();
            proptest::prop_assert!(d.min(TAU - d) < 1e-10, "t={} got {}", t, p.t);
        }
    }
}
