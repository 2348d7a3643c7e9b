//! Result records (pretty JSON) and sweep tables (CSV).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use gslab_core::functionals::GroundStateSolution;
use gslab_core::ode_core::ProblemParams;
use gslab_core::rescaling::{ObservableFit, ScalingReport};
use gslab_core::shooting::TailModel;

use crate::config::{RunConfig, Suite};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub config: RunConfig,
    pub payload: Payload,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Payload {
    Solution(SolutionSummary),
    Report(ScalingReport),
    Check(CheckSummary),
    Emden(EmdenSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSummary {
    pub params: ProblemParams,
    pub amplitude: f64,
    pub level_s: f64,
    pub energy: f64,
    pub dirichlet_sq: f64,
    pub norm_lp_p: f64,
    pub norm_lq_q: f64,
    pub norm_l2_sq: Option<f64>,
    pub nehari_residual: f64,
    pub pokhozhaev_residual: f64,
    pub match_radius: f64,
    pub tail: TailModel,
}

impl SolutionSummary {
    pub fn from_solution(s: &GroundStateSolution) -> Self {
        SolutionSummary {
            params: s.profile.params,
            amplitude: s.profile.amplitude,
            level_s: s.level_s,
            energy: s.energy,
            dirichlet_sq: s.dirichlet_sq,
            norm_lp_p: s.norm_lp_p,
            norm_lq_q: s.norm_lq_q,
            norm_l2_sq: s.norm_l2_sq,
            nehari_residual: s.nehari_residual,
            pokhozhaev_residual: s.pokhozhaev_residual,
            match_radius: s.profile.match_radius(),
            tail: s.profile.tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedResidual {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCase {
    pub params: ProblemParams,
    pub residuals: Vec<NamedResidual>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSummary {
    pub suite: Suite,
    pub tolerance: f64,
    pub cases: Vec<CheckCase>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmdenSummary {
    #[serde(rename = "N")]
    pub n: u32,
    pub p_star: f64,
    pub s_star: f64,
    /// S* from ‖∇U₁‖₂² and from ‖U₁‖ₚᵖ.
    pub s_star_routes: (f64, f64),
    pub q_star: f64,
    pub u1_at_0: f64,
    pub w1_lp: f64,
    pub w1_dirichlet_sq: f64,
    /// Finite for N ≥ 5 only.
    pub w1_l2_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    /// Bisection iterations.
    pub iterations: Option<usize>,
    /// Trajectories integrated.
    pub integrations: Option<u64>,
    pub rhs_evals: u64,
    pub r_max: Option<f64>,
    pub tail_mismatch: Option<f64>,
    pub max_residual: Option<f64>,
    pub cache_hit: bool,
}

#[derive(Debug)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

fn check_finite(path: &str, v: f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{path} is not finite: {v}"))
    }
}

fn check_opt(path: &str, v: Option<f64>) -> Result<(), String> {
    v.map_or(Ok(()), |v| check_finite(path, v))
}

fn check_tail(path: &str, t: &TailModel) -> Result<(), String> {
    for (k, v) in [
        ("rate_or_power", t.rate_or_power),
        ("prefactor", t.prefactor),
        ("match_radius", t.match_radius),
        ("correction", t.correction),
        ("correction_power", t.correction_power),
    ] {
        check_finite(&format!("{path}.{k}"), v)?;
    }
    Ok(())
}

fn check_fit(path: &str, f: &ObservableFit) -> Result<(), String> {
    let r = &f.fit;
    for (k, v) in [
        ("intercept", r.intercept),
        ("exponent", r.exponent),
        ("log_power", r.log_power),
        ("r2", r.r2),
        ("rms", r.rms),
        ("predicted.exponent", f.predicted.exponent),
        ("predicted.log_power", f.predicted.log_power),
    ] {
        check_finite(&format!("{path}.{k}"), v)?;
    }
    Ok(())
}

fn check_report(r: &ScalingReport) -> Result<(), String> {
    check_finite("payload.p", r.p)?;
    check_finite("payload.q", r.q)?;
    check_opt("payload.reference_amplitude", r.reference_amplitude)?;
    check_opt("payload.s_star", r.s_star)?;
    check_finite("payload.window.0", r.window.0)?;
    check_finite("payload.window.1", r.window.1)?;
    if let Some(b) = &r.lambda_bounds {
        check_finite("payload.lambda_bounds.c1", b.c1)?;
        check_finite("payload.lambda_bounds.c2", b.c2)?;
    }
    for (i, f) in r.fits.iter().enumerate() {
        check_fit(&format!("payload.fits[{i}]"), f)?;
    }
    for (i, p) in r.points.iter().enumerate() {
        let at = |k: &str| format!("payload.points[{i}].{k}");
        check_finite(&at("x"), p.x)?;
        for (k, v) in [
            ("amplitude", p.amplitude),
            ("level_s", p.level_s),
            ("nehari_res", p.nehari_res),
            ("pokh_res", p.pokh_res),
            ("sigma", p.sigma),
            ("lambda", p.lambda),
            ("dist_d1", p.dist_d1),
            ("dist_lp", p.dist_lp),
            ("dist_linf_tail", p.dist_linf_tail),
            ("kappa_res", p.kappa_res),
            ("important_res", p.important_res),
            ("v_lq", p.v_lq),
            ("v_l2", p.v_l2),
            ("eps_l2", p.eps_l2),
            ("amplitude_gap", p.amplitude_gap),
            ("scaled_amplitude", p.scaled_amplitude),
        ] {
            check_opt(&at(k), v)?;
        }
    }
    Ok(())
}

impl ResultRecord {
    pub fn new(config: RunConfig, payload: Payload, diagnostics: Diagnostics) -> Self {
        ResultRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            payload,
            diagnostics,
        }
    }

    /// Checks the schema version and that every numeric field is finite.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "schema_version: expected \"{SCHEMA_VERSION}\", found \"{}\"",
                self.schema_version
            ));
        }
        let c = &self.config;
        check_opt("config.p", c.p)?;
        check_opt("config.q", c.q)?;
        check_opt("config.eps", c.eps)?;
        let d = &self.diagnostics;
        check_opt("diagnostics.r_max", d.r_max)?;
        check_opt("diagnostics.tail_mismatch", d.tail_mismatch)?;
        check_opt("diagnostics.max_residual", d.max_residual)?;
        match &self.payload {
            Payload::Solution(s) => {
                for (k, v) in [
                    ("amplitude", s.amplitude),
                    ("level_s", s.level_s),
                    ("energy", s.energy),
                    ("dirichlet_sq", s.dirichlet_sq),
                    ("norm_lp_p", s.norm_lp_p),
                    ("norm_lq_q", s.norm_lq_q),
                    ("nehari_residual", s.nehari_residual),
                    ("pokhozhaev_residual", s.pokhozhaev_residual),
                    ("match_radius", s.match_radius),
                ] {
                    check_finite(&format!("payload.{k}"), v)?;
                }
                check_opt("payload.norm_l2_sq", s.norm_l2_sq)?;
                check_tail("payload.tail", &s.tail)
            }
            Payload::Report(r) => check_report(r),
            Payload::Check(c) => {
                check_finite("payload.tolerance", c.tolerance)?;
                for (i, case) in c.cases.iter().enumerate() {
                    for r in &case.residuals {
                        check_finite(&format!("payload.cases[{i}].{}", r.name), r.residual)?;
                    }
                }
                Ok(())
            }
            Payload::Emden(e) => {
                for (k, v) in [
                    ("s_star", e.s_star),
                    ("s_star_routes.0", e.s_star_routes.0),
                    ("s_star_routes.1", e.s_star_routes.1),
                    ("q_star", e.q_star),
                    ("u1_at_0", e.u1_at_0),
                    ("w1_lp", e.w1_lp),
                    ("w1_dirichlet_sq", e.w1_dirichlet_sq),
                ] {
                    check_finite(&format!("payload.{k}"), v)?;
                }
                check_opt("payload.w1_l2_sq", e.w1_l2_sq)
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s.into_bytes()
    }

    /// Parses a record; errors name the offending field.
    pub fn parse(bytes: &[u8]) -> Result<Self, ParseError> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| ParseError(format!("malformed record: {e}")))?;
        match value.get("schema_version") {
            Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
            Some(v) => {
                return Err(ParseError(format!(
                    "schema_version: expected \"{SCHEMA_VERSION}\", found {v}"
                )))
            }
            None => return Err(ParseError("schema_version: missing".into())),
        }
        let rec: ResultRecord = match serde_path_to_error::deserialize(value.clone()) {
            Ok(r) => r,
            Err(e) => {
                let path = e.path().to_string();
                let msg = match path.as_str() {
                    "payload" => locate_payload_error(&value),
                    _ => None,
                };
                return Err(ParseError(msg.unwrap_or_else(|| format!("{path}: {}", e.into_inner()))));
            }
        };
        rec.validate().map_err(ParseError)?;
        Ok(rec)
    }
}

fn payload_error<T: serde::de::DeserializeOwned>(data: serde_json::Value) -> Option<String> {
    let e = serde_path_to_error::deserialize::<_, T>(data).err()?;
    let path = e.path().to_string();
    Some(format!("payload.data.{path}: {}", e.into_inner()))
}

/// The tagged payload is buffered before dispatch, which hides the inner path.
fn locate_payload_error(value: &serde_json::Value) -> Option<String> {
    let p = value.get("payload")?;
    let data = p.get("data")?.clone();
    match p.get("kind")?.as_str()? {
        "solution" => payload_error::<SolutionSummary>(data),
        "report" => payload_error::<ScalingReport>(data),
        "check" => payload_error::<CheckSummary>(data),
        "emden" => payload_error::<EmdenSummary>(data),
        _ => None,
    }
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub amplitude: Option<f64>,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(rename = "dist_D1")]
    pub dist_d1: Option<f64>,
    pub nehari_res: Option<f64>,
    pub pokh_res: Option<f64>,
    pub converged_flag: u8,
}

pub const CSV_HEADER: [&str; 9] = [
    "eps",
    "amplitude",
    "S",
    "sigma",
    "lambda",
    "dist_D1",
    "nehari_res",
    "pokh_res",
    "converged_flag",
];

pub fn sweep_rows(r: &ScalingReport) -> Vec<SweepRow> {
    r.points
        .iter()
        .map(|p| SweepRow {
            eps: p.x,
            amplitude: p.amplitude,
            s: p.level_s,
            sigma: p.sigma,
            lambda: p.lambda,
            dist_d1: p.dist_d1,
            nehari_res: p.nehari_res,
            pokh_res: p.pokh_res,
            converged_flag: p.converged as u8,
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(CSV_HEADER)?;
    }
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<SweepRow>, ParseError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| ParseError(format!("csv header: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        let found: Vec<&str> = header.iter().collect();
        return Err(ParseError(format!("csv header: expected {CSV_HEADER:?}, found {found:?}")));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| ParseError(format!("csv row {}: {e}", i + 1))))
        .collect()
}

/// Plot triple: observable name, data point and the fitted curve at the same x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub observable: String,
    pub with_log: bool,
    pub x: f64,
    pub y: f64,
    pub fit: f64,
}

pub fn plot_rows(r: &ScalingReport) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for f in &r.fits {
        let name = format!("{:?}", f.observable).to_lowercase();
        for p in r.window_points() {
            let Some(y) = p.observable(f.observable) else { continue };
            let mut log_fit = f.fit.intercept + f.fit.exponent * p.x.ln();
            if f.with_log {
                log_fit += f.fit.log_power * (1.0 / p.x).ln().ln();
            }
            out.push(PlotRow {
                observable: name.clone(),
                with_log: f.with_log,
                x: p.x,
                y,
                fit: log_fit.exp(),
            });
        }
    }
    out
}

pub fn write_plot_csv<W: Write>(rows: &[PlotRow], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
