use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use hzfem::NormKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Study,
    Infsup,
    MeshReport,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Study => "study",
            Self::Infsup => "infsup",
            Self::MeshReport => "mesh-report",
        }
    }
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Solve one manufactured problem and report its errors.
    Solve(Flags),
    /// Convergence study over uniformly refined meshes.
    Study(Flags),
    /// Discrete inf-sup constants over refined meshes.
    Infsup(Flags),
    /// Mesh quality and geometric approximation report.
    MeshReport(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Self::Solve(f) => (CommandKind::Solve, f),
            Self::Study(f) => (CommandKind::Study, f),
            Self::Infsup(f) => (CommandKind::Infsup, f),
            Self::MeshReport(f) => (CommandKind::MeshReport, f),
        }
    }
}

/// Command-line options. Every option may also be given in the config file
/// under the same name with `_` for `-`; flags take precedence.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Boundary chart: circle or three_leaf.
    #[arg(long)]
    pub chart: Option<String>,
    /// Coarse mesh in Gmsh 2.2 ASCII format instead of a generated disk mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Stress polynomial degree.
    #[arg(long)]
    pub k: Option<usize>,
    /// Geometric degree of the boundary element maps.
    #[arg(long)]
    pub m: Option<usize>,
    /// Raise the degree by one on boundary elements.
    #[arg(long)]
    pub enriched: bool,
    /// Number of mesh levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Target size of the generated coarsest mesh.
    #[arg(long)]
    pub initial_h: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quadrature degree override for assembly.
    #[arg(long)]
    pub quadrature: Option<usize>,
    /// Relative residual tolerance of the linear solve.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Worker threads for element loops.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Manufactured solution name.
    #[arg(long)]
    pub solution: Option<String>,
    /// First Lamé constant.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Shear modulus.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Norm pair for inf-sup constants: hdiv or mesh.
    #[arg(long)]
    pub norm: Option<String>,
    /// Also compute the kernel coercivity constant.
    #[arg(long)]
    pub alpha: bool,
    /// Write an SVG convergence plot.
    #[arg(long)]
    pub svg: bool,
    /// Exit with status 2 when a fitted rate misses its target.
    #[arg(long)]
    pub assert_rates: bool,
    /// Allowed deviation of fitted rates from their targets.
    #[arg(long)]
    pub rate_tolerance: Option<f64>,
    #[arg(long)]
    pub target_u: Option<f64>,
    #[arg(long)]
    pub target_u_star: Option<f64>,
    #[arg(long)]
    pub target_sigma: Option<f64>,
    #[arg(long)]
    pub target_div: Option<f64>,
    /// Geometric degrees for mesh-report, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m_list: Option<Vec<usize>>,
}

/// Target rates for `--assert-rates`; `None` entries fall back to the
/// tabulated reference values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Targets {
    pub u: Option<f64>,
    pub u_star: Option<f64>,
    pub sigma: Option<f64>,
    pub div: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub chart: String,
    pub mesh: Option<PathBuf>,
    pub k: usize,
    pub m: usize,
    pub enriched: bool,
    pub levels: usize,
    pub initial_h: f64,
    pub out: PathBuf,
    pub quadrature: Option<usize>,
    pub tolerance: f64,
    pub threads: Option<usize>,
    pub solution: String,
    pub lambda: f64,
    pub mu: f64,
    pub norm: NormKind,
    pub alpha: bool,
    pub svg: bool,
    pub assert_rates: bool,
    pub rate_tolerance: f64,
    pub targets: Targets,
    pub m_list: Vec<usize>,
}

impl RunConfig {
    fn defaults(command: CommandKind) -> Self {
        let (levels, initial_h) = match command {
            CommandKind::Solve => (1, 1.0 / 3.0),
            CommandKind::Study => (4, 1.0 / 3.0),
            CommandKind::Infsup => (3, 0.5),
            CommandKind::MeshReport => (3, 1.0 / 3.0),
        };
        Self {
            command,
            chart: "circle".into(),
            mesh: None,
            k: 3,
            m: 2,
            enriched: false,
            levels,
            initial_h,
            out: PathBuf::from("."),
            quadrature: None,
            tolerance: 1e-10,
            threads: None,
            solution: "exp_trig".into(),
            lambda: 1.0,
            mu: 1.0,
            norm: NormKind::HdivL2,
            alpha: false,
            svg: false,
            assert_rates: false,
            rate_tolerance: f64::NAN,
            targets: Targets::default(),
            m_list: vec![1, 2, 3],
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| anyhow::anyhow!("invalid value '{value}' for {key}: {e}"))
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => bail!("invalid value '{value}' for {key}: expected true or false"),
            }
        }
        match key {
            "chart" => self.chart = value.to_string(),
            "mesh" => self.mesh = Some(PathBuf::from(value)),
            "k" => self.k = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "enriched" => self.enriched = flag(key, value)?,
            "levels" => self.levels = num(key, value)?,
            "initial_h" => self.initial_h = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "quadrature" => self.quadrature = Some(num(key, value)?),
            "tolerance" => self.tolerance = num(key, value)?,
            "threads" => self.threads = Some(num(key, value)?),
            "solution" => self.solution = value.to_string(),
            "lambda" => self.lambda = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            "norm" => self.norm = value.parse().map_err(|e| anyhow::anyhow!("{e}"))?,
            "alpha" => self.alpha = flag(key, value)?,
            "svg" => self.svg = flag(key, value)?,
            "assert_rates" => self.assert_rates = flag(key, value)?,
            "rate_tolerance" => self.rate_tolerance = num(key, value)?,
            "target_u" => self.targets.u = Some(num(key, value)?),
            "target_u_star" => self.targets.u_star = Some(num(key, value)?),
            "target_sigma" => self.targets.sigma = Some(num(key, value)?),
            "target_div" => self.targets.div = Some(num(key, value)?),
            "m_list" => {
                self.m_list = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<Vec<usize>>>()?
            }
            _ => bail!("unknown configuration key '{key}'"),
        }
        Ok(())
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in config file {}", path.display()))
    }

    fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected 'key = value', got '{raw}'", n + 1);
            };
            let key = key.trim().replace('-', "_");
            self.set(&key, value.trim()).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    fn apply_flags(&mut self, f: &Flags) -> Result<()> {
        if let Some(v) = &f.chart {
            self.chart = v.clone();
        }
        if let Some(v) = &f.mesh {
            self.mesh = Some(v.clone());
        }
        macro_rules! take {
            ($($field:ident),*) => {$(if let Some(v) = f.$field { self.$field = v; })*};
        }
        take!(k, m, levels, initial_h, tolerance, lambda, mu, rate_tolerance);
        if let Some(v) = &f.out {
            self.out = v.clone();
        }
        if f.quadrature.is_some() {
            self.quadrature = f.quadrature;
        }
        if f.threads.is_some() {
            self.threads = f.threads;
        }
        if let Some(v) = &f.solution {
            self.solution = v.clone();
        }
        if let Some(v) = &f.norm {
            self.set("norm", v)?;
        }
        self.enriched |= f.enriched;
        self.alpha |= f.alpha;
        self.svg |= f.svg;
        self.assert_rates |= f.assert_rates;
        for (target, flag) in [
            (&mut self.targets.u, f.target_u),
            (&mut self.targets.u_star, f.target_u_star),
            (&mut self.targets.sigma, f.target_sigma),
            (&mut self.targets.div, f.target_div),
        ] {
            if flag.is_some() {
                *target = flag;
            }
        }
        if let Some(v) = &f.m_list {
            self.m_list = v.clone();
        }
        Ok(())
    }

    fn validate(&mut self) -> Result<()> {
        if self.k < 3 {
            bail!("k must be ≥ 3 (the stress element needs k ≥ 3), got {}", self.k);
        }
        if !(1..=5).contains(&self.m) {
            bail!("m must lie in 1..=5, got {}", self.m);
        }
        if self.command == CommandKind::Study && self.levels < 3 {
            bail!("a study needs at least 3 levels, got {}", self.levels);
        }
        if self.levels == 0 {
            bail!("levels must be at least 1");
        }
        if !(self.initial_h > 0.0 && self.initial_h <= 1.0) {
            bail!("initial_h must lie in (0, 1], got {}", self.initial_h);
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            bail!("tolerance must be positive, got {}", self.tolerance);
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        if self.m_list.is_empty() || self.m_list.iter().any(|m| !(1..=5).contains(m)) {
            bail!("m_list entries must lie in 1..=5, got {:?}", self.m_list);
        }
        if self.rate_tolerance.is_nan() {
            self.rate_tolerance = if self.chart == "three_leaf" { 0.35 } else { 0.3 };
        }
        if self.rate_tolerance <= 0.0 {
            bail!("rate_tolerance must be positive, got {}", self.rate_tolerance);
        }
        Ok(())
    }
}

/// Defaults, then the config file, then flags.
pub fn parse_config(command: CommandKind, flags: &Flags) -> Result<RunConfig> {
    let mut config = RunConfig::defaults(command);
    if let Some(path) = &flags.config {
        config.apply_file(path)?;
    }
    config.apply_flags(flags)?;
    config.validate()?;
    Ok(config)
}
