use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use hzfem::curving::geometric_report;
use hzfem::geometry::make_builtin_chart;
use hzfem::mesh::{generate_disk_mesh, read_gmsh, refinement_sequence, validate_mesh};
use hzfem::verify::{
    reference_rates, relative_variation, run_study, solve_manufactured, stability_study, Discretization,
    SolveOptions, StudyConfig,
};
use hzfem::{BoundaryChart, ManufacturedSolution, MaterialLaw, StabilityReport, Triangulation};
use log::info;

use crate::config::{CommandKind, RunConfig};

/// Outcome of a successful run.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// False when `--assert-rates` was given and a rate missed its target.
    pub rates_ok: bool,
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    if let Some(n) = config.threads {
        // fails only when the pool already exists, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    std::fs::create_dir_all(&config.out)
        .with_context(|| format!("creating output directory {}", config.out.display()))?;
    let chart = make_builtin_chart(&config.chart)?;
    let base = coarse_mesh(config, &chart)?;
    match config.command {
        CommandKind::Solve => solve(config, &chart, base),
        CommandKind::Study => study(config, &chart, base),
        CommandKind::Infsup => infsup(config, &chart, base),
        CommandKind::MeshReport => mesh_report(config, &chart, base),
    }
}

fn coarse_mesh(config: &RunConfig, chart: &BoundaryChart) -> Result<Triangulation> {
    match &config.mesh {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading mesh {}", path.display()))?;
            read_gmsh(&text, Some(chart))
                .with_context(|| format!("importing {} against chart '{}'", path.display(), config.chart))
        }
        None => Ok(generate_disk_mesh(chart, config.initial_h)?),
    }
}

fn law(config: &RunConfig) -> Result<MaterialLaw> {
    Ok(MaterialLaw::new(config.lambda, config.mu)?)
}

fn options(config: &RunConfig) -> SolveOptions {
    SolveOptions { tolerance: config.tolerance, quadrature_degree: config.quadrature }
}

fn stem(config: &RunConfig) -> String {
    format!(
        "{}_{}_k{}_m{}{}",
        config.command.as_str().replace('-', "_"),
        config.chart,
        config.k,
        config.m,
        if config.enriched { "_enriched" } else { "" }
    )
}

fn write(config: &RunConfig, name: String, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = config.out.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    files.push(path);
    Ok(())
}

fn solve(config: &RunConfig, chart: &BoundaryChart, base: Triangulation) -> Result<RunOutcome> {
    let meshes = refinement_sequence(base, Some(chart), config.levels)?;
    let mesh = meshes.last().expect("at least one level");
    let disc = Discretization::new(mesh, Some(chart), config.k, config.m, config.enriched)?;
    let ms = ManufacturedSolution::builtin(&config.solution, law(config)?)?;
    let sol = solve_manufactured(&disc, &ms, &options(config))?;
    let e = &sol.errors;
    let mut csv = String::from(
        "h,n_triangles,n_dofs,err_u,err_u_star,err_sigma,err_div,err_superclose,relative_residual\n",
    );
    let _ = write!(csv, "{:.6e},{},{}", e.h, e.n_triangles, e.n_dofs);
    for v in e.values() {
        let _ = write!(csv, ",{v:.6e}");
    }
    let _ = writeln!(csv, ",{:.3e}", sol.solve.relative_residual);
    println!("{csv}");
    let mut files = Vec::new();
    write(config, format!("{}.csv", stem(config)), &csv, &mut files)?;
    Ok(RunOutcome { files, rates_ok: true })
}

fn study(config: &RunConfig, chart: &BoundaryChart, base: Triangulation) -> Result<RunOutcome> {
    let study = StudyConfig {
        chart: config.chart.clone(),
        k: config.k,
        m: config.m,
        enriched: config.enriched,
        levels: config.levels,
        initial_h: config.mesh.is_none().then_some(config.initial_h),
    };
    let ms = ManufacturedSolution::builtin(&config.solution, law(config)?)?;
    let report = run_study(&study, chart, base, &ms, &options(config))?;
    print!("{}", report.rates_table());
    let mut files = Vec::new();
    write(config, format!("{}.csv", stem(config)), &report.to_csv(), &mut files)?;
    if config.svg {
        write(config, format!("{}.svg", stem(config)), &report.to_svg(), &mut files)?;
    }
    let rates_ok = if config.assert_rates { assert_rates(config, &report.rates)? } else { true };
    Ok(RunOutcome { files, rates_ok })
}

/// Compares fitted rates with the configured targets, falling back to the
/// reference table; prints one line per rate.
fn assert_rates(config: &RunConfig, rates: &hzfem::verify::ErrorRates) -> Result<bool> {
    let reference = reference_rates(&config.chart, config.k, config.m, config.enriched);
    let t = &config.targets;
    let pick = |own: Option<f64>, f: fn(&hzfem::verify::ReferenceRates) -> f64| own.or(reference.as_ref().map(f));
    let targets = [
        ("u", pick(t.u, |r| r.u), rates.u),
        ("u_star", pick(t.u_star, |r| r.u_star), rates.u_star),
        ("sigma", pick(t.sigma, |r| r.sigma), rates.sigma),
        ("div", pick(t.div, |r| r.div), rates.div),
    ];
    if targets.iter().all(|(_, target, _)| target.is_none()) {
        bail!(
            "no target rates for chart '{}' k={} m={} enriched={}; set target_* in the config",
            config.chart,
            config.k,
            config.m,
            config.enriched
        );
    }
    let mut ok = true;
    for (name, target, rate) in targets {
        let Some(target) = target else { continue };
        let pass = (rate - target).abs() <= config.rate_tolerance;
        ok &= pass;
        println!(
            "{} {name}: rate {rate:.2}, target {target:.2} ± {:.2}",
            if pass { "PASS" } else { "FAIL" },
            config.rate_tolerance
        );
    }
    Ok(ok)
}

fn infsup(config: &RunConfig, chart: &BoundaryChart, base: Triangulation) -> Result<RunOutcome> {
    let meshes = refinement_sequence(base, Some(chart), config.levels)?;
    let discs = meshes
        .iter()
        .map(|mesh| Discretization::new(mesh, Some(chart), config.k, config.m, config.enriched))
        .collect::<hzfem::Result<Vec<_>>>()?;
    let rows = stability_study(&discs, &law(config)?, config.norm, config.alpha)?;
    let csv = StabilityReport::to_csv(&rows);
    print!("{csv}");
    let betas: Vec<f64> = rows.iter().map(|r| r.beta_h).collect();
    println!("beta_h variation across levels: {:.1}%", 100.0 * relative_variation(&betas));
    let mut files = Vec::new();
    write(config, format!("{}_{}.csv", stem(config), config.norm.as_str()), &csv, &mut files)?;
    Ok(RunOutcome { files, rates_ok: true })
}

fn mesh_report(config: &RunConfig, chart: &BoundaryChart, base: Triangulation) -> Result<RunOutcome> {
    let r = validate_mesh(&base);
    println!(
        "{} vertices, {} triangles, {} edges, h = {:.4}, min angle = {:.2} deg, boundary hypothesis {}",
        r.n_vertices,
        r.n_triangles,
        r.n_edges,
        r.h,
        r.min_angle,
        if r.boundary_hypothesis_ok { "holds" } else { "violated" }
    );
    if !r.boundary_hypothesis_ok {
        bail!("triangles {:?} have more than one boundary edge or three boundary vertices", r.offending_triangles);
    }
    let report = geometric_report(chart, &base, &config.m_list, config.levels)?;
    let csv = report.to_csv();
    print!("{csv}");
    for (m, f, psi) in &report.slopes {
        let show = |s: &Option<f64>| s.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!("m={m}: slope of sup|F-I| {}, slope of sup|Psi-I| {}", show(f), show(psi));
    }
    let mut files = Vec::new();
    write(config, format!("mesh_report_{}.csv", config.chart), &csv, &mut files)?;
    Ok(RunOutcome { files, rates_ok: true })
}
