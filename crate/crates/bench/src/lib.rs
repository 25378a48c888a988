//! Shared fixtures for the benchmarks.

use hzfem::assembly::{assemble_system, AssemblyRules};
use hzfem::geometry::make_builtin_chart;
use hzfem::mesh::generate_disk_mesh;
use hzfem::verify::Discretization;
use hzfem::{ManufacturedSolution, MaterialLaw, SaddleSystem};

/// Disk discretization at k = 3 with geometric degree `m`.
pub fn disk(h: f64, m: usize) -> Discretization {
    let chart = make_builtin_chart("circle").expect("builtin chart");
    let mesh = generate_disk_mesh(&chart, h).expect("disk mesh");
    Discretization::new(&mesh, Some(&chart), 3, m, false).expect("discretization")
}

/// Saddle system of the smooth manufactured problem on `disc`.
pub fn system(disc: &Discretization) -> SaddleSystem {
    let law = MaterialLaw::new(1.0, 1.0).expect("valid law");
    let ms = ManufacturedSolution::exp_trig(law);
    let f = |x| ms.load(x);
    let g = |x| ms.displacement(x);
    let rules = AssemblyRules::new(disc.assembly_degree());
    assemble_system(&disc.cm, &disc.exact, &disc.stress, &disc.disp, &law, &f, &g, &rules).expect("assembly")
}
