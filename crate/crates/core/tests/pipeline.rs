//! End-to-end checks of the discretization pipeline on small meshes.

mod common;

use common::law;
use hzfem::assembly::{assemble_system, element_points, l2_project, AssemblyRules};
use hzfem::geometry::make_builtin_chart;
use hzfem::linalg::{log_log_slope, spmv, to_dense};
use hzfem::mesh::{generate_disk_mesh, refinement_sequence};
use hzfem::quadrature::triangle_rule;
use hzfem::solver::{saddle_inertia, solve_saddle};
use hzfem::verify::{solve_manufactured, Discretization, SolveOptions};
use hzfem::{ManufacturedSolution, MaterialLaw, Triangulation, Vec2};

fn small_disk(m: usize, enriched: bool) -> Discretization {
    let chart = make_builtin_chart("circle").unwrap();
    let mesh = generate_disk_mesh(&chart, 0.5).unwrap();
    Discretization::new(&mesh, Some(&chart), 3, m, enriched).unwrap()
}

#[test]
fn patch_test_reproduces_linear_displacement() {
    for n in [1, 2] {
        let mesh = Triangulation::unit_square(n).unwrap();
        for k in [3, 4] {
            let disc = Discretization::new(&mesh, None, k, 1, false).unwrap();
            let ms = ManufacturedSolution::linear_patch(law());
            let sol = solve_manufactured(&disc, &ms, &SolveOptions::default()).unwrap();
            for e in sol.errors.values() {
                assert!(e <= 1e-9, "n={n} k={k}: {:?}", sol.errors);
            }
        }
    }
}

#[test]
fn polynomial_solution_in_the_space_is_exact() {
    // σ of a quadratic displacement is linear and u is in P_{k−1}
    let ms = ManufacturedSolution::polynomial(
        law(),
        [vec![(1.0, 2, 0), (0.5, 1, 1)], vec![(-0.3, 0, 2), (0.2, 1, 0)]],
    );
    let mesh = Triangulation::unit_square(2).unwrap();
    let disc = Discretization::new(&mesh, None, 3, 1, false).unwrap();
    let sol = solve_manufactured(&disc, &ms, &SolveOptions::default()).unwrap();
    for e in sol.errors.values() {
        assert!(e <= 1e-9, "{:?}", sol.errors);
    }
}

#[test]
fn galerkin_residual_is_small() {
    for (m, enriched) in [(1, false), (2, false), (3, true)] {
        let disc = small_disk(m, enriched);
        let ms = ManufacturedSolution::exp_trig(law());
        let sol = solve_manufactured(&disc, &ms, &SolveOptions::default()).unwrap();
        assert!(sol.solve.relative_residual <= 1e-10, "m={m}: {}", sol.solve.relative_residual);
    }
}

#[test]
fn saddle_matrix_has_expected_inertia_and_coercive_compliance() {
    for (m, enriched) in [(2, false), (3, true)] {
        let disc = small_disk(m, enriched);
        let sys = hzfem::verify::homogeneous_system(&disc, &law()).unwrap();
        let (pos, neg, zero) = saddle_inertia(&sys).unwrap();
        assert_eq!((pos, neg, zero), (sys.n_sigma, sys.n_u, 0), "m={m}");
        let a = to_dense(&sys.a_block);
        assert!((&a - a.transpose()).amax() <= 1e-12 * a.amax());
        let lmin = a.symmetric_eigenvalues().min();
        assert!(lmin > 0.0, "compliance not positive definite: {lmin}");
    }
}

#[test]
fn exact_map_has_positive_jacobian_at_quadrature_points() {
    let chart = make_builtin_chart("circle").unwrap();
    let meshes = refinement_sequence(generate_disk_mesh(&chart, 0.5).unwrap(), Some(&chart), 2).unwrap();
    for mesh in &meshes {
        for m in 1..=4 {
            let disc = Discretization::new(mesh, Some(&chart), 3, m, true).unwrap();
            let rule = triangle_rule(disc.assembly_degree());
            for t in 0..mesh.n_triangles() {
                for p in element_points(&disc.cm, &disc.exact, t, &rule).unwrap() {
                    assert!(p.exact.det > 0.0 && p.weight > 0.0);
                }
            }
        }
    }
}

#[test]
fn assembly_is_quadrature_converged() {
    let disc = small_disk(3, false);
    let ms = ManufacturedSolution::exp_trig(law());
    let load = |x: Vec2| ms.load(x);
    let g = |x: Vec2| ms.displacement(x);
    let d = disc.assembly_degree();
    let assemble = |deg: usize| {
        assemble_system(&disc.cm, &disc.exact, &disc.stress, &disc.disp, &law(), &load, &g, &AssemblyRules::new(deg))
            .unwrap()
    };
    // load vectors integrate transcendental data and are not expected to
    // be exact; only the operator blocks are compared
    let coarse = assemble(d);
    let fine = assemble(2 * d);
    for (a, b) in [(&coarse.a_block, &fine.a_block), (&coarse.b_block, &fine.b_block)] {
        let (a, b) = (to_dense(a), to_dense(b));
        let diff = (&a - &b).amax() / b.amax();
        assert!(diff <= 1e-9, "matrix entries moved by {diff:.2e}");
    }
}

#[test]
fn rescaled_material_rescales_stress_only() {
    // same displacement, Lamé constants times c: σ scales by c, u is unchanged
    let c = 7.0;
    let base = law();
    let scaled = MaterialLaw::new(c * base.lambda, c * base.mu).unwrap();
    let disc = small_disk(2, false);
    let opts = SolveOptions::default();
    let s1 = solve_manufactured(&disc, &ManufacturedSolution::exp_trig(base), &opts).unwrap();
    let s2 = solve_manufactured(&disc, &ManufacturedSolution::exp_trig(scaled), &opts).unwrap();
    for (x, y) in s1.solve.sigma_coeffs.iter().zip(&s2.solve.sigma_coeffs) {
        assert!((c * x - y).abs() <= 1e-8 * (1.0 + y.abs()));
    }
    for (x, y) in s1.solve.u_coeffs.iter().zip(&s2.solve.u_coeffs) {
        assert!((x - y).abs() <= 1e-8 * (1.0 + y.abs()));
    }
    let (e1, e2) = (s1.errors, s2.errors);
    assert!((e1.err_u - e2.err_u).abs() <= 1e-8 * e1.err_u);
    assert!((c * e1.err_sigma - e2.err_sigma).abs() <= 1e-8 * e2.err_sigma);
}

#[test]
fn solution_is_linear_in_the_data() {
    let disc = small_disk(2, false);
    let ms = ManufacturedSolution::exp_trig(law());
    let load = |x: Vec2| ms.load(x);
    let g = |x: Vec2| ms.displacement(x);
    let load2 = |x: Vec2| 2.0 * ms.load(x);
    let g2 = |x: Vec2| 2.0 * ms.displacement(x);
    let rules = AssemblyRules::new(disc.assembly_degree());
    let sys1 = assemble_system(&disc.cm, &disc.exact, &disc.stress, &disc.disp, &law(), &load, &g, &rules).unwrap();
    let sys2 = assemble_system(&disc.cm, &disc.exact, &disc.stress, &disc.disp, &law(), &load2, &g2, &rules).unwrap();
    let x1 = solve_saddle(&sys1, 1e-12).unwrap();
    let x2 = solve_saddle(&sys2, 1e-12).unwrap();
    for (a, b) in x1.sigma_coeffs.iter().chain(&x1.u_coeffs).zip(x2.sigma_coeffs.iter().chain(&x2.u_coeffs)) {
        assert!((2.0 * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }
    // the computed solution satisfies the assembled equations
    let full = sys1.full_matrix().unwrap();
    let x: Vec<f64> = x1.sigma_coeffs.iter().chain(&x1.u_coeffs).copied().collect();
    let r = spmv(&full, &x);
    let rhs = sys1.full_rhs();
    let res = r.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(res <= 1e-10 * norm);
}

#[test]
fn l2_projection_converges_at_third_order_on_quadratic_modes() {
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    let rule = triangle_rule(14);
    let field = |_: usize, _: [f64; 2], x: Vec2| [x.x.powi(4), 0.0];
    for n in [2, 4, 8, 16] {
        let mesh = Triangulation::unit_square(n).unwrap();
        let disc = Discretization::new(&mesh, None, 3, 1, false).unwrap();
        let coeffs = l2_project(&disc.cm, &disc.disp, &rule, &field).unwrap();
        let mut e2 = 0.0;
        for t in 0..mesh.n_triangles() {
            let vals = disc.disp.eval(t, &coeffs, &rule.points);
            for (q, (xi, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let f = disc.cm.maps[t].eval(*xi);
                let exact = field(t, *xi, f.point);
                e2 += w * f.det.abs() * ((vals[q][0] - exact[0]).powi(2) + (vals[q][1] - exact[1]).powi(2));
            }
        }
        hs.push(mesh.h);
        errs.push(e2.sqrt());
    }
    let rate = log_log_slope(&hs, &errs).unwrap();
    assert!((rate - 3.0).abs() <= 0.1, "rate {rate}");
}
