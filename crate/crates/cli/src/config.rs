//! Command-line flags, the TOML config file, and the merged [`RunConfig`].
//!
//! Every flag has a key of the same name in one of the file sections
//! `[problem]`, `[grid]`, `[tolerances]`, `[output]`, `[run]`. Flags given
//! on the command line win over file values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gslab_core::ode_core::{critical_exponent, Family, StepControls};
use gslab_core::rescaling::{GridSpec, ScalingRegime};
use gslab_core::shooting::ShootControls;

use crate::CliError;

pub const DEFAULT_CACHE_DIR: &str = ".gslab_cache";
pub const CACHE_ENV: &str = "GSLAB_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "gslab", version, about = "Radial ground states of -Δu + εu = u^(p-1) - u^(q-1)")]
pub struct Cli {
    /// TOML file with [problem], [grid], [tolerances], [output] and [run] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shoot for one ground state and report its functionals.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a scaling sweep and fit exponents.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Use p = 2N/(N-2).
        #[arg(long)]
        p_critical: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-fit a saved sweep record.
    Fit {
        /// Sweep record written by `gslab sweep --out`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve a set of cases and check the integral identities.
    Check {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reference values of the Emden-Fowler bubble.
    Emden {
        #[arg(long = "N")]
        n: Option<u32>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Nehari,
    Pokhozhaev,
    /// Closed-form norms of the ε = 0 ground state.
    Limits,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Solve,
    Sweep,
    Fit,
    Check,
    Emden,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProblemArgs {
    /// P_eps, P_zero, R_eps or R_zero.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// critical, subcritical, supercritical, delta or pup.
    #[arg(long)]
    pub regime: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridArgs {
    /// Largest grid value.
    #[arg(long)]
    pub start: Option<f64>,
    /// Smallest grid value.
    #[arg(long)]
    pub end: Option<f64>,
    #[arg(long)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TolArgs {
    /// Relative amplitude bracket width.
    #[arg(long)]
    pub amp_tol: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Largest admissible identity residual for `check`.
    #[arg(long)]
    pub identity_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputArgs {
    /// Write the result record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write (x, y, fit) triples for plotting.
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub no_cache: bool,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// Worker threads for sweeps.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub problem: ProblemArgs,
    pub grid: GridArgs,
    pub tolerances: TolArgs,
    pub output: OutputArgs,
    pub run: RunArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub amp_tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    pub r_max: Option<f64>,
    pub identity_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = ShootControls::default();
        Tolerances {
            amp_tol: c.amp_tol,
            rtol: c.step.rtol,
            atol: c.step.atol,
            max_iter: c.max_iter,
            r_max: c.r_max,
            identity_tol: 1e-6,
        }
    }
}

impl Tolerances {
    fn merge(cli: &TolArgs, file: &TolArgs) -> Self {
        let d = Tolerances::default();
        Tolerances {
            amp_tol: cli.amp_tol.or(file.amp_tol).unwrap_or(d.amp_tol),
            rtol: cli.rtol.or(file.rtol).unwrap_or(d.rtol),
            atol: cli.atol.or(file.atol).unwrap_or(d.atol),
            max_iter: cli.max_iter.or(file.max_iter).unwrap_or(d.max_iter),
            r_max: cli.r_max.or(file.r_max),
            identity_tol: cli.identity_tol.or(file.identity_tol).unwrap_or(d.identity_tol),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let pos = [
            ("amp-tol", self.amp_tol),
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("identity-tol", self.identity_tol),
            ("r-max", self.r_max.unwrap_or(1.0)),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::usage(format!("--{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(CliError::usage("--max-iter must be positive"));
        }
        Ok(())
    }

    pub fn shoot_controls(&self) -> ShootControls {
        let d = ShootControls::default();
        ShootControls {
            amp_tol: self.amp_tol,
            max_iter: self.max_iter,
            step: StepControls {
                rtol: self.rtol,
                atol: self.atol,
                ..d.step
            },
            r_max: self.r_max,
            ..d
        }
    }
}

/// Fully resolved configuration of one invocation. Echoed into every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub family: Option<Family>,
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub eps: Option<f64>,
    pub regime: Option<ScalingRegime>,
    pub grid: Option<GridSpec>,
    pub tolerances: Tolerances,
    pub suite: Option<Suite>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub use_cache: bool,
    pub jobs: Option<usize>,
}

/// Default sweep grid for a regime: (start, end, ratio).
pub fn default_grid(regime: ScalingRegime, n: u32) -> (f64, f64, f64) {
    let quarter = 10f64.powf(0.25);
    match regime {
        ScalingRegime::Critical => match n {
            3 => (1e-4, 1e-11, quarter),
            4 => (1e-2, 1e-6, quarter),
            _ => (1e-5, 1e-10, quarter),
        },
        ScalingRegime::Supercritical => (5e-3, 1e-9, 2.0),
        ScalingRegime::Subcritical => (1e-1, 1e-5, quarter),
        ScalingRegime::DeltaSupercritical | ScalingRegime::PUpSubcritical => (0.3, 0.01, 1.5),
    }
}

fn parse_family(s: &str) -> Result<Family, CliError> {
    s.parse().map_err(|_| CliError::usage(format!("unknown family '{s}'")))
}

fn parse_regime(s: &str) -> Result<ScalingRegime, CliError> {
    s.parse().map_err(|_| CliError::usage(format!("unknown regime '{s}'")))
}

fn cache_dir(cli: &OutputArgs, file: &OutputArgs) -> PathBuf {
    cli.cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .or_else(|| file.cache_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

impl RunConfig {
    fn base(command: CommandKind, output: &OutputArgs, file: &FileConfig, tol: Tolerances) -> Self {
        let fo = &file.output;
        RunConfig {
            command,
            family: None,
            n: None,
            p: None,
            q: None,
            eps: None,
            regime: None,
            grid: None,
            tolerances: tol,
            suite: None,
            input: None,
            out: output.out.clone().or(fo.out.clone()),
            csv: output.csv.clone().or(fo.csv.clone()),
            plot_data: output.emit_plot_data.clone().or(fo.emit_plot_data.clone()),
            cache_dir: cache_dir(output, fo),
            use_cache: !output.no_cache,
            jobs: None,
        }
    }

    /// Merges command-line flags over the config file and validates the result.
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let fp = &file.problem;
        let cfg = match &cli.command {
            Command::Solve { problem, tol, output } => {
                let mut c = Self::base(CommandKind::Solve, output, &file, Tolerances::merge(tol, &file.tolerances));
                let fam = problem.family.as_ref().or(fp.family.as_ref());
                c.family = Some(fam.map(|s| parse_family(s)).transpose()?.unwrap_or(Family::PEps));
                c.n = problem.n.or(fp.n);
                c.p = problem.p.or(fp.p);
                c.q = problem.q.or(fp.q);
                c.eps = problem.eps.or(fp.eps);
                if matches!(c.family, Some(Family::PZero) | Some(Family::RZero)) {
                    c.eps = Some(c.eps.unwrap_or(0.0));
                }
                c
            }
            Command::Sweep {
                problem,
                p_critical,
                grid,
                tol,
                output,
                run,
            } => {
                let mut c = Self::base(CommandKind::Sweep, output, &file, Tolerances::merge(tol, &file.tolerances));
                let regime = problem
                    .regime
                    .as_ref()
                    .or(fp.regime.as_ref())
                    .ok_or_else(|| CliError::usage("sweep needs --regime"))?;
                let regime = parse_regime(regime)?;
                c.regime = Some(regime);
                c.n = problem.n.or(fp.n);
                c.q = problem.q.or(fp.q);
                c.p = problem.p.or(fp.p);
                let n = c.n.ok_or_else(|| CliError::usage("missing --N"))?;
                let needs_pstar = *p_critical || regime == ScalingRegime::Critical;
                if needs_pstar {
                    let ps = critical_exponent(n);
                    if c.p.is_some_and(|p| (p - ps).abs() > 1e-12) {
                        return Err(CliError::usage(format!("critical sweep requires p = {ps}")));
                    }
                    c.p = Some(ps);
                }
                if matches!(regime, ScalingRegime::DeltaSupercritical | ScalingRegime::PUpSubcritical) {
                    c.p = Some(c.p.unwrap_or(critical_exponent(n)));
                }
                let (s, e, r) = default_grid(regime, n);
                let fg = &file.grid;
                c.grid = Some(GridSpec {
                    start: grid.start.or(fg.start).unwrap_or(s),
                    end: grid.end.or(fg.end).unwrap_or(e),
                    ratio: grid.ratio.or(fg.ratio).unwrap_or(r),
                });
                c.jobs = run.jobs.or(file.run.jobs);
                c
            }
            Command::Fit { input, output } => {
                let mut c = Self::base(CommandKind::Fit, output, &file, Tolerances::merge(&TolArgs::default(), &file.tolerances));
                c.input = Some(input.clone());
                c
            }
            Command::Check {
                suite,
                problem,
                tol,
                output,
            } => {
                let mut c = Self::base(CommandKind::Check, output, &file, Tolerances::merge(tol, &file.tolerances));
                c.suite = Some(*suite);
                let fam = problem.family.as_ref().or(fp.family.as_ref());
                c.family = fam.map(|s| parse_family(s)).transpose()?;
                c.n = problem.n.or(fp.n);
                c.p = problem.p.or(fp.p);
                c.q = problem.q.or(fp.q);
                c.eps = problem.eps.or(fp.eps);
                c
            }
            Command::Emden { n, output } => {
                let mut c = Self::base(CommandKind::Emden, output, &file, Tolerances::default());
                c.n = n.or(fp.n);
                c
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.tolerances.validate()?;
        if let Some(g) = &self.grid {
            if !(g.ratio > 1.0 && g.ratio <= 4.0) {
                return Err(CliError::usage(format!("grid ratio must lie in (1, 4], got {}", g.ratio)));
            }
            if !(g.start > 0.0 && g.end > 0.0 && g.start.is_finite() && g.end.is_finite()) {
                return Err(CliError::usage("grid bounds must be positive"));
            }
        }
        if self.jobs == Some(0) {
            return Err(CliError::usage("--jobs must be positive"));
        }
        match self.command {
            CommandKind::Solve => {
                for (name, v) in [("N", self.n.map(f64::from)), ("p", self.p), ("q", self.q), ("eps", self.eps)] {
                    if v.is_none() {
                        return Err(CliError::usage(format!("solve needs --{name}")));
                    }
                }
            }
            CommandKind::Sweep => {
                if self.q.is_none() {
                    return Err(CliError::usage("sweep needs --q"));
                }
                if self.p.is_none() {
                    return Err(CliError::usage("sweep needs --p or --p-critical"));
                }
            }
            CommandKind::Check => {
                if self.n.is_none() || self.p.is_none() || self.q.is_none() {
                    return Err(CliError::usage("check needs --N, --p and --q"));
                }
            }
            CommandKind::Emden => {
                if self.n.is_none() {
                    return Err(CliError::usage("emden needs --N"));
                }
            }
            CommandKind::Fit => {}
        }
        Ok(())
    }
}
