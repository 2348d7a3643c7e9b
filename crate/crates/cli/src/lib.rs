//! `gslab` command-line front end.
//!
//! [`run`] parses arguments, merges the optional TOML config, dispatches the
//! subcommand and returns the process exit code: 0 on success, 1 on solver or
//! identity failures, 2 on argument errors.

pub mod cache;
pub mod config;
pub mod record;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::Parser;

use gslab_core::emden_fowler::{q_star, sobolev_constant, sobolev_constant_routes, u1, EfFrame, EmdenFowlerProfile};
use gslab_core::functionals::{dirichlet_norm, limit_identities, radial_norm, to_minimizer_frame, GroundStateSolution};
use gslab_core::ode_core::{critical_exponent, Family, ProblemParams};
use gslab_core::rescaling::{sweep, ScalingReport, SweepSpec};
use gslab_core::shooting::{epsilon_star, find_ground_state};
use gslab_core::Error;

use cache::{cache_key, Cache};
use config::{Cli, CommandKind, RunConfig, Suite};
use record::{
    plot_rows, sweep_rows, write_csv, write_plot_csv, CheckCase, CheckSummary, Diagnostics, EmdenSummary,
    NamedResidual, Payload, ResultRecord, SolutionSummary,
};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    pub fn failure(msg: impl Into<String>) -> Self {
        CliError { code: 1, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => CliError::usage(e.to_string()),
            _ => CliError::failure(e.to_string()),
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match RunConfig::resolve(&cli).and_then(|cfg| execute(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gslab: {}", e.msg);
            e.code
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    match cfg.command {
        CommandKind::Solve => cmd_solve(cfg),
        CommandKind::Sweep => cmd_sweep(cfg),
        CommandKind::Fit => cmd_fit(cfg),
        CommandKind::Check => cmd_check(cfg),
        CommandKind::Emden => cmd_emden(cfg),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::failure(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

/// Writes the record to `--out`, or to stdout when `to_stdout` is set.
fn emit(cfg: &RunConfig, rec: &ResultRecord, to_stdout: bool) -> Result<(), CliError> {
    rec.validate().map_err(CliError::failure)?;
    match &cfg.out {
        Some(path) => write_file(path, &rec.to_bytes()),
        None if to_stdout => std::io::stdout()
            .write_all(&rec.to_bytes())
            .map_err(|e| CliError::failure(format!("stdout: {e}"))),
        None => Ok(()),
    }
}

fn params_of(cfg: &RunConfig) -> Result<ProblemParams, CliError> {
    let missing = |k: &str| CliError::usage(format!("missing --{k}"));
    Ok(ProblemParams::new(
        cfg.family.unwrap_or(Family::PEps),
        cfg.n.ok_or_else(|| missing("N"))?,
        cfg.p.ok_or_else(|| missing("p"))?,
        cfg.q.ok_or_else(|| missing("q"))?,
        cfg.eps.unwrap_or(0.0),
    )?)
}

/// Solves one problem, going through the cache when enabled.
pub fn solve_record(cfg: &RunConfig) -> Result<ResultRecord, CliError> {
    let params = params_of(cfg)?;
    let ctrl = cfg.tolerances.shoot_controls();
    let cache = Cache::new(&cfg.cache_dir);
    let key = cache_key(&params, &ctrl);
    if cfg.use_cache {
        if let Some(hit) = cache.load(&key, &params) {
            let diagnostics = Diagnostics {
                iterations: Some(0),
                integrations: Some(0),
                rhs_evals: 0,
                cache_hit: true,
                ..hit.diagnostics
            };
            return Ok(ResultRecord::new(cfg.clone(), hit.payload, diagnostics));
        }
    }
    let profile = find_ground_state(&params, &ctrl)?;
    let d = profile.diagnostics.clone();
    let sol = GroundStateSolution::from_profile(profile)?;
    let rec = ResultRecord::new(
        cfg.clone(),
        Payload::Solution(SolutionSummary::from_solution(&sol)),
        Diagnostics {
            iterations: Some(d.iterations),
            integrations: Some(d.integrations as u64),
            rhs_evals: d.rhs_evals,
            r_max: Some(d.r_max),
            tail_mismatch: Some(d.tail_mismatch),
            max_residual: Some(sol.max_residual()),
            cache_hit: false,
        },
    );
    rec.validate().map_err(CliError::failure)?;
    if cfg.use_cache {
        if let Err(e) = cache.store(&key, &rec) {
            eprintln!("gslab: cache write to {} failed: {e}", cache.dir().display());
        }
    }
    Ok(rec)
}

fn cmd_solve(cfg: &RunConfig) -> Result<i32, CliError> {
    let rec = solve_record(cfg)?;
    emit(cfg, &rec, true)?;
    let res = rec.diagnostics.max_residual.unwrap_or(0.0);
    if res > cfg.tolerances.identity_tol {
        eprintln!(
            "gslab: identity residual {res:.3e} exceeds {:.1e}",
            cfg.tolerances.identity_tol
        );
        return Ok(1);
    }
    Ok(0)
}

fn summarize(report: &ScalingReport) {
    eprintln!(
        "{:?} N={} p={} q={}: {} of {} points converged, window [{:e}, {:e}]",
        report.regime,
        report.n,
        report.p,
        report.q,
        report.points.iter().filter(|p| p.converged).count(),
        report.points.len(),
        report.window.0,
        report.window.1
    );
    for f in &report.fits {
        eprintln!(
            "  {:<10} {:<8} slope {:>9.5} (predicted {:>9.5}), log power {:>8.4}, r2 {:.6}",
            format!("{:?}", f.observable).to_lowercase(),
            if f.with_log { "with_log" } else { "pure" },
            f.fit.exponent,
            f.predicted.exponent,
            f.fit.log_power,
            f.fit.r2
        );
    }
}

fn report_outputs(cfg: &RunConfig, report: &ScalingReport) -> Result<(), CliError> {
    if let Some(path) = &cfg.csv {
        let mut buf = Vec::new();
        write_csv(&sweep_rows(report), &mut buf).map_err(|e| CliError::failure(e.to_string()))?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &cfg.plot_data {
        let mut buf = Vec::new();
        write_plot_csv(&plot_rows(report), &mut buf).map_err(|e| CliError::failure(e.to_string()))?;
        write_file(path, &buf)?;
    }
    Ok(())
}

fn report_diagnostics(report: &ScalingReport) -> Diagnostics {
    Diagnostics {
        iterations: None,
        integrations: None,
        rhs_evals: report.points.iter().map(|p| p.rhs_evals).sum(),
        r_max: None,
        tail_mismatch: None,
        max_residual: report
            .points
            .iter()
            .filter(|p| p.converged)
            .filter_map(|p| p.max_residual())
            .reduce(f64::max),
        cache_hit: false,
    }
}

fn cmd_sweep(cfg: &RunConfig) -> Result<i32, CliError> {
    let missing = |k: &str| CliError::usage(format!("missing --{k}"));
    let spec = SweepSpec {
        regime: cfg.regime.ok_or_else(|| missing("regime"))?,
        n: cfg.n.ok_or_else(|| missing("N"))?,
        p: cfg.p.ok_or_else(|| missing("p"))?,
        q: cfg.q.ok_or_else(|| missing("q"))?,
        grid: cfg.grid.ok_or_else(|| missing("start"))?,
        controls: cfg.tolerances.shoot_controls(),
        jobs: cfg.jobs,
    };
    let report = sweep(&spec)?;
    summarize(&report);
    report_outputs(cfg, &report)?;
    let diagnostics = report_diagnostics(&report);
    emit(cfg, &ResultRecord::new(cfg.clone(), Payload::Report(report), diagnostics), true)?;
    Ok(0)
}

fn cmd_fit(cfg: &RunConfig) -> Result<i32, CliError> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::usage("missing --input"))?;
    let bytes = fs::read(input).map_err(|e| CliError::usage(format!("{}: {e}", input.display())))?;
    let rec = ResultRecord::parse(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", input.display())))?;
    let Payload::Report(mut report) = rec.payload else {
        return Err(CliError::usage(format!("{}: not a sweep record", input.display())));
    };
    report.refit()?;
    summarize(&report);
    report_outputs(cfg, &report)?;
    let diagnostics = Diagnostics {
        integrations: Some(0),
        rhs_evals: 0,
        ..report_diagnostics(&report)
    };
    emit(cfg, &ResultRecord::new(cfg.clone(), Payload::Report(report), diagnostics), true)?;
    Ok(0)
}

/// Problems exercised by `check` when no family is given.
fn check_cases(cfg: &RunConfig) -> Result<Vec<ProblemParams>, CliError> {
    let (n, p, q) = (cfg.n.unwrap_or(3), cfg.p.unwrap_or(0.0), cfg.q.unwrap_or(0.0));
    if let Some(f) = cfg.family {
        let eps = match f {
            Family::PZero | Family::RZero => 0.0,
            _ => cfg.eps.unwrap_or(1e-3),
        };
        return Ok(vec![ProblemParams::new(f, n, p, q, eps)?]);
    }
    let ps = critical_exponent(n);
    let eps_max = epsilon_star(p, q).map(|e| 0.5 * e).unwrap_or(0.0);
    let epss: Vec<f64> = match cfg.eps {
        Some(e) => vec![e],
        None => vec![1e-3, 1e-4],
    };
    let mut out = Vec::new();
    for &e in epss.iter().filter(|&&e| e > 0.0 && e < eps_max) {
        out.push(ProblemParams::new(Family::PEps, n, p, q, e)?);
        if p < ps {
            out.push(ProblemParams::new(Family::REps, n, p, q, e)?);
        }
    }
    if p > ps {
        out.push(ProblemParams::new(Family::PZero, n, p, q, 0.0)?);
    } else if p < ps {
        out.push(ProblemParams::new(Family::RZero, n, p, q, 0.0)?);
    }
    if out.is_empty() {
        return Err(CliError::usage("no admissible check cases for these parameters"));
    }
    Ok(out)
}

fn check_one(params: &ProblemParams, suite: Suite, tol: f64, cfg: &RunConfig) -> CheckCase {
    let limit_case = matches!(params.family(), Family::PZero | Family::RZero);
    let result = (|| -> Result<Vec<NamedResidual>, Error> {
        let profile = find_ground_state(params, &cfg.tolerances.shoot_controls())?;
        let sol = GroundStateSolution::from_profile(profile)?;
        let mut res = Vec::new();
        if matches!(suite, Suite::Nehari | Suite::All) {
            res.push(NamedResidual {
                name: "nehari".into(),
                residual: sol.nehari_residual,
            });
        }
        if matches!(suite, Suite::Pokhozhaev | Suite::All) {
            res.push(NamedResidual {
                name: "pokhozhaev".into(),
                residual: sol.pokhozhaev_residual,
            });
        }
        if matches!(suite, Suite::Limits | Suite::All) && limit_case {
            let w = to_minimizer_frame(&sol.profile, sol.level_s)?;
            for e in limit_identities(&w)? {
                res.push(NamedResidual {
                    name: e.name,
                    residual: e.residual,
                });
            }
        }
        Ok(res)
    })();
    match result {
        Ok(residuals) => CheckCase {
            params: *params,
            passed: residuals.iter().all(|r| r.residual.abs() < tol),
            residuals,
            error: None,
        },
        Err(e) => CheckCase {
            params: *params,
            residuals: Vec::new(),
            error: Some(e.to_string()),
            passed: false,
        },
    }
}

fn cmd_check(cfg: &RunConfig) -> Result<i32, CliError> {
    let suite = cfg.suite.unwrap_or(Suite::All);
    let tol = cfg.tolerances.identity_tol;
    let mut cases = check_cases(cfg)?;
    if suite == Suite::Limits {
        cases.retain(|c| matches!(c.family(), Family::PZero | Family::RZero));
        if cases.is_empty() {
            return Err(CliError::usage("the limits suite needs p != 2N/(N-2)"));
        }
    }
    let results: Vec<CheckCase> = cases.iter().map(|c| check_one(c, suite, tol, cfg)).collect();
    for c in &results {
        let p = &c.params;
        let detail = match &c.error {
            Some(e) => e.clone(),
            None => c
                .residuals
                .iter()
                .map(|r| format!("{} {:.3e}", r.name, r.residual))
                .collect::<Vec<_>>()
                .join(", "),
        };
        println!(
            "{} {} N={} p={} q={} eps={:e}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            p.family(),
            p.n(),
            p.p(),
            p.q(),
            p.eps(),
            detail
        );
    }
    let passed = results.iter().all(|c| c.passed);
    let max_residual = results
        .iter()
        .flat_map(|c| c.residuals.iter().map(|r| r.residual.abs()))
        .reduce(f64::max);
    let summary = CheckSummary {
        suite,
        tolerance: tol,
        cases: results,
        passed,
    };
    let diagnostics = Diagnostics {
        max_residual,
        ..Diagnostics::default()
    };
    emit(cfg, &ResultRecord::new(cfg.clone(), Payload::Check(summary), diagnostics), false)?;
    Ok(if passed { 0 } else { 1 })
}

pub fn emden_summary(n: u32) -> Result<EmdenSummary, Error> {
    let w = EmdenFowlerProfile::new(n, 1.0, EfFrame::W)?;
    let ps = critical_exponent(n);
    Ok(EmdenSummary {
        n,
        p_star: ps,
        s_star: sobolev_constant(n)?,
        s_star_routes: sobolev_constant_routes(n)?,
        q_star: q_star(n)?,
        u1_at_0: u1(n, 0.0),
        w1_lp: radial_norm(&w, ps)?.powf(1.0 / ps),
        w1_dirichlet_sq: dirichlet_norm(&w)?,
        w1_l2_sq: if n >= 5 { Some(radial_norm(&w, 2.0)?) } else { None },
    })
}

fn cmd_emden(cfg: &RunConfig) -> Result<i32, CliError> {
    let n = cfg.n.ok_or_else(|| CliError::usage("missing --N"))?;
    let e = emden_summary(n)?;
    println!("N = {}", e.n);
    println!("p* = {}", e.p_star);
    println!("S* = {}", e.s_star);
    println!("S* (gradient route) = {}", e.s_star_routes.0);
    println!("S* (L^p* route) = {}", e.s_star_routes.1);
    println!("Q* = {}", e.q_star);
    println!("U_1(0) = {}", e.u1_at_0);
    println!("||W_1||_p* = {}", e.w1_lp);
    println!("||grad W_1||_2^2 = {}", e.w1_dirichlet_sq);
    match e.w1_l2_sq {
        Some(v) => println!("||W_1||_2^2 = {v}"),
        None => println!("||W_1||_2^2 = inf"),
    }
    emit(cfg, &ResultRecord::new(cfg.clone(), Payload::Emden(e), Diagnostics::default()), false)?;
    Ok(0)
}
