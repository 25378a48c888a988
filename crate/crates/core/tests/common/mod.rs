#![allow(dead_code)]

use std::io::Write as _;
use std::sync::OnceLock;

use hzfem::curving::CurvedMesh;
use hzfem::geometry::make_builtin_chart;
use hzfem::mesh::generate_disk_mesh;
use hzfem::spaces::{edge_frame, edge_reference_point, legendre01, StressSpace};
use hzfem::verify::{run_study, SolveOptions, StudyConfig};
use hzfem::{ConvergenceReport, Mat2, MaterialLaw, ManufacturedSolution, Vec2};
use nalgebra::{DMatrix, DVector};

pub fn law() -> MaterialLaw {
    MaterialLaw::new(1.0, 1.0).unwrap()
}

/// Prints one verdict line and returns the verdict. Writes to the stdout
/// handle directly so the line survives the test harness's capture.
pub fn verdict(name: &str, pass: bool, detail: &str) -> bool {
    let line = format!("{} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    pass
}

pub fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Disk convergence study at k = 3 over four levels from h = 1/3, computed
/// once per `(m, enriched)` and shared between tests.
pub fn disk_study(m: usize, enriched: bool) -> &'static ConvergenceReport {
    static CACHE: [OnceLock<ConvergenceReport>; 10] = [const { OnceLock::new() }; 10];
    assert!((1..=5).contains(&m));
    let slot = 2 * (m - 1) + enriched as usize;
    CACHE[slot].get_or_init(|| {
        let chart = make_builtin_chart("circle").unwrap();
        let base = generate_disk_mesh(&chart, 1.0 / 3.0).unwrap();
        let config = StudyConfig {
            chart: "circle".into(),
            k: 3,
            m,
            enriched,
            levels: 4,
            initial_h: Some(1.0 / 3.0),
        };
        let ms = ManufacturedSolution::exp_trig(law());
        run_study(&config, &chart, base, &ms, &SolveOptions::default()).unwrap()
    })
}

/// Trace operators of a stress space on every interior edge, for checking
/// normal continuity and enrichment constraints on many coefficient vectors.
pub struct TraceChecker {
    /// Per interior edge: each side's element and component values at the
    /// edge points.
    edges: Vec<EdgeTraces>,
    weights: Vec<f64>,
    params: Vec<f64>,
    top: usize,
}

struct EdgeTraces {
    sides: [(usize, [DMatrix<f64>; 3]); 2],
    normal: Vec2,
    mixed: Option<usize>,
}

impl TraceChecker {
    pub fn new(cm: &CurvedMesh, space: &StressSpace) -> Self {
        let mesh = &cm.base;
        let rule = hzfem::quadrature::edge_rule(2 * space.k + 4);
        let params: Vec<f64> = rule.points.iter().map(|p| p[0]).collect();
        let mut edges = Vec::new();
        for (ge, edge) in mesh.edges.iter().enumerate() {
            let [Some((t0, e0)), Some((t1, e1))] = edge.triangles else { continue };
            let side = |t: usize, e: usize| {
                let pts: Vec<[f64; 2]> = params.iter().map(|&s| edge_reference_point(mesh, t, e, s)).collect();
                let el = &space.elements[t];
                let tab = space.basis(el.degree).tabulate(&pts);
                (t, el.values(&tab))
            };
            let (_, normal, _) = edge_frame(mesh, ge);
            let mixed = match space.degrees[t0].cmp(&space.degrees[t1]) {
                std::cmp::Ordering::Greater => Some(0),
                std::cmp::Ordering::Less => Some(1),
                std::cmp::Ordering::Equal => None,
            };
            edges.push(EdgeTraces { sides: [side(t0, e0), side(t1, e1)], normal, mixed });
        }
        Self { edges, weights: rule.weights.clone(), params, top: space.k + 1 }
    }

    pub fn n_mixed_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.mixed.is_some()).count()
    }

    /// Largest normal-trace jump and largest top Legendre mode of the
    /// normal trace on the higher-degree side of mixed edges.
    pub fn check(&self, space: &StressSpace, coeffs: &[f64]) -> (f64, f64) {
        let mut jump: f64 = 0.0;
        let mut mode: f64 = 0.0;
        for e in &self.edges {
            let traces = e.sides.each_ref().map(|(t, vals)| {
                let x = DVector::from_vec(space.local_coefficients(*t, coeffs));
                let c = vals.each_ref().map(|v| v * &x);
                (0..self.params.len())
                    .map(|q| Mat2::new(c[0][q], c[1][q], c[1][q], c[2][q]) * e.normal)
                    .collect::<Vec<Vec2>>()
            });
            for (a, b) in traces[0].iter().zip(&traces[1]) {
                jump = jump.max((a - b).norm());
            }
            if let Some(hi) = e.mixed {
                for d in 0..2 {
                    let c: f64 = traces[hi]
                        .iter()
                        .zip(&self.weights)
                        .zip(&self.params)
                        .map(|((v, w), &s)| w * v[d] * legendre01(self.top, s))
                        .sum();
                    mode = mode.max(c.abs());
                }
            }
        }
        (jump, mode)
    }
}
