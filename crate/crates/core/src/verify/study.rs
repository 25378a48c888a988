use std::fmt::Write as _;

use log::info;

use super::errors::{solve_manufactured, Discretization, ErrorReport, SolveOptions};
use super::manufactured::ManufacturedSolution;
use crate::error::{Error, Result};
use crate::geometry::BoundaryChart;
use crate::linalg::log_log_slope;
use crate::mesh::{refinement_sequence, Triangulation};

/// Rates are fitted over this many finest levels.
pub const RATE_LEVELS: usize = 3;

/// Largest projected problem a study accepts.
pub const MAX_STUDY_DOFS: usize = 2_000_000;

/// Error kinds in report order.
pub const ERROR_KINDS: [&str; 5] = ["err_u", "err_u_star", "err_sigma", "err_div", "err_superclose"];

/// Least-squares slope of `log e` against `log h` over the last three pairs.
pub fn fit_rate(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() < RATE_LEVELS || h.len() != e.len() {
        return Err(Error::RateFit(format!(
            "need at least {RATE_LEVELS} levels, got {}",
            h.len().min(e.len())
        )));
    }
    let n = h.len();
    log_log_slope(&h[n - RATE_LEVELS..], &e[n - RATE_LEVELS..])
}

/// Fitted rates per error kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRates {
    pub u: f64,
    pub u_star: f64,
    pub sigma: f64,
    pub div: f64,
    pub superclose: f64,
}

impl ErrorRates {
    pub fn values(&self) -> [f64; 5] {
        [self.u, self.u_star, self.sigma, self.div, self.superclose]
    }
}

pub fn fit_rates(levels: &[ErrorReport]) -> Result<ErrorRates> {
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let rate = |i: usize| {
        let e: Vec<f64> = levels.iter().map(|l| l.values()[i]).collect();
        fit_rate(&h, &e)
    };
    Ok(ErrorRates { u: rate(0)?, u_star: rate(1)?, sigma: rate(2)?, div: rate(3)?, superclose: rate(4)? })
}

/// Parameters identifying a study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub chart: String,
    pub k: usize,
    pub m: usize,
    pub enriched: bool,
    pub levels: usize,
    /// Target size of the generated coarsest mesh; `None` for imported meshes.
    pub initial_h: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub levels: Vec<ErrorReport>,
    pub rates: ErrorRates,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str =
        "level,h,n_triangles,n_dofs,err_u,err_u_star,err_sigma,err_div,err_superclose";

    /// One row per level followed by a `rates` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, l) in self.levels.iter().enumerate() {
            let _ = write!(out, "{i},{:.6e},{},{}", l.h, l.n_triangles, l.n_dofs);
            for v in l.values() {
                let _ = write!(out, ",{v:.6e}");
            }
            out.push('\n');
        }
        out.push_str("rates,,,");
        for r in self.rates.values() {
            let _ = write!(out, ",{r:.4}");
        }
        out.push('\n');
        out
    }

    /// Plain-text rates table.
    pub fn rates_table(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "chart={} k={} m={} enriched={} levels={}\n",
            c.chart, c.k, c.m, c.enriched, c.levels
        );
        let _ = writeln!(out, "{:<16}{:>8}", "error", "rate");
        for (name, r) in ERROR_KINDS.iter().zip(self.rates.values()) {
            let _ = writeln!(out, "{name:<16}{r:>8.2}");
        }
        out
    }

    /// Log-log plot of every error kind with slope guides.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 480.0;
        const PAD: f64 = 60.0;
        const COLORS: [&str; 5] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];
        let hs: Vec<f64> = self.levels.iter().map(|l| l.h.log10()).collect();
        let es: Vec<f64> = self
            .levels
            .iter()
            .flat_map(|l| l.values())
            .filter(|v| *v > 0.0)
            .map(f64::log10)
            .collect();
        let (x0, x1) = bounds(&hs);
        let (y0, y1) = bounds(&es);
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        );
        let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
        let _ = writeln!(
            out,
            "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">log10 h</text>",
            W / 2.0,
            H - 15.0
        );
        let _ = writeln!(
            out,
            "<text x=\"15\" y=\"{}\" font-size=\"14\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">log10 error</text>",
            H / 2.0,
            H / 2.0
        );
        // slope guides anchored at the coarsest σ error
        if let (Some(first), Some(&hx)) = (self.levels.first(), hs.first()) {
            let anchor = first.err_sigma.max(f64::MIN_POSITIVE).log10();
            let xe = hs.last().copied().unwrap_or(hx);
            for slope in [(self.config.k as f64 + 0.5).min(self.config.m as f64 + 0.5), self.config.k as f64 + 1.0] {
                let ye = anchor + slope * (xe - hx);
                let _ = writeln!(
                    out,
                    "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>",
                    sx(hx), sy(anchor), sx(xe), sy(ye.max(y0))
                );
                let _ = writeln!(
                    out,
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"gray\">slope {slope:.1}</text>",
                    sx(xe) + 4.0,
                    sy(ye.max(y0))
                );
            }
        }
        for (i, name) in ERROR_KINDS.iter().enumerate() {
            let pts: Vec<String> = self
                .levels
                .iter()
                .zip(&hs)
                .filter(|(l, _)| l.values()[i] > 0.0)
                .map(|(l, &x)| format!("{:.1},{:.1}", sx(x), sy(l.values()[i].log10())))
                .collect();
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
                pts.join(" "),
                COLORS[i]
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"{}\">{name} ({:.2})</text>",
                PAD + 10.0,
                PAD + 18.0 * (i as f64 + 1.0),
                COLORS[i],
                self.rates.values()[i]
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(1e-3);
    (lo - pad, hi + pad)
}

/// Refines `base` into `config.levels` levels with boundary snapping, then
/// solves, postprocesses and measures each level.
pub fn run_study(
    config: &StudyConfig,
    chart: &BoundaryChart,
    base: Triangulation,
    ms: &ManufacturedSolution,
    opts: &SolveOptions,
) -> Result<ConvergenceReport> {
    if config.levels < RATE_LEVELS {
        return Err(Error::InvalidArgument(format!(
            "a study needs at least {RATE_LEVELS} levels, got {}",
            config.levels
        )));
    }
    let first = Discretization::new(&base, Some(chart), config.k, config.m, config.enriched)?;
    let projected = first.n_dofs() as f64 * 4f64.powi(config.levels as i32 - 1);
    if projected > MAX_STUDY_DOFS as f64 {
        return Err(Error::TooManyDofs(projected as usize));
    }
    drop(first);
    let meshes = refinement_sequence(base, Some(chart), config.levels)?;
    let mut levels = Vec::with_capacity(meshes.len());
    for (i, mesh) in meshes.iter().enumerate() {
        let disc = Discretization::new(mesh, Some(chart), config.k, config.m, config.enriched)?;
        let sol = solve_manufactured(&disc, ms, opts)?;
        info!(
            "level {i}: {} triangles, {} dofs, residual {:.2e}, err_sigma {:.3e}",
            mesh.n_triangles(),
            disc.n_dofs(),
            sol.solve.relative_residual,
            sol.errors.err_sigma
        );
        levels.push(sol.errors);
    }
    let rates = fit_rates(&levels)?;
    Ok(ConvergenceReport { config: config.clone(), levels, rates })
}
