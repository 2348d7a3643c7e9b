//! Concentration rescaling, ε/δ sweeps and power-law exponent fits.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emden_fowler::{q_star, sobolev_constant, EfFrame, EmdenFowlerProfile};
use crate::error::{Error, Result};
use crate::functionals::{
    ball_mass, kappa, kappa_identities, radial_norm, to_minimizer_frame, GroundStateSolution, RadialFunction,
};
use crate::ode_core::{critical_exponent, Family, ProblemParams, Regime};
use crate::quadrature::sphere_area;
use crate::shooting::{find_ground_state, RadialProfile, ShootControls};

/// v(x) = λ^{(N−2)/2} w(λx).
pub fn rescale_to_v(w: &RadialProfile, lambda: f64) -> Result<RadialProfile> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let k = lambda.powf((w.dim() as f64 - 2.0) / 2.0);
    Ok(w.rescaled(lambda, k))
}

/// The radius λ with ∫_{B_λ}|w|^{p*} = Q.
pub fn concentration_lambda(w: &dyn RadialFunction, q: f64) -> Result<f64> {
    let ps = critical_exponent(w.dim());
    let total = radial_norm(w, ps)?;
    if total <= q {
        return Err(Error::NotAsymptotic { total, target: q });
    }
    let mass = |rho: f64| ball_mass(w, ps, rho);
    let (mut lo, mut hi) = (1.0, 1.0);
    if mass(1.0) < q {
        while mass(hi) < q {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while mass(lo) >= q {
            hi = lo;
            lo *= 0.5;
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mass(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub lambda_eps: f64,
    pub q_star_used: f64,
    pub v_profile: RadialProfile,
    /// ‖∇(v − W₁)‖₂.
    pub dist_d1: f64,
    /// ‖v − W₁‖ₚ with p = p*.
    pub dist_lp: f64,
    /// sup_{r ≥ 1} |v − W₁|.
    pub dist_linf_tail: f64,
}

/// Concentration radius of a minimizer-frame profile and distances of the
/// rescaled profile from W₁.
pub fn concentrate(w: &RadialProfile, q: f64) -> Result<ConcentrationResult> {
    let lambda = concentration_lambda(w, q)?;
    let v = rescale_to_v(w, lambda)?;
    let w1 = EmdenFowlerProfile::new(v.dim(), 1.0, EfFrame::W)?;
    let n = v.dim();
    let wgt = n as f64 - 1.0;
    let ps = critical_exponent(n);
    let omega = sphere_area(n);
    let d1 = omega
        * v.integrate_range(0.0, f64::INFINITY, &mut |r, _, dv| {
            let d = dv - w1.slope(r);
            d * d * r.powf(wgt)
        });
    let lp = omega
        * v.integrate_range(0.0, f64::INFINITY, &mut |r, u, _| {
            (u - w1.value(r)).abs().powf(ps) * r.powf(wgt)
        });
    let mut linf: f64 = 0.0;
    for &r in v.grid.radii.iter().filter(|&&r| r >= 1.0) {
        linf = linf.max((v.value(r) - w1.value(r)).abs());
    }
    let rm = v.match_radius().max(1.0);
    for k in 0..200 {
        let r = rm * 1.1f64.powi(k);
        linf = linf.max((v.value(r) - w1.value(r)).abs());
    }
    Ok(ConcentrationResult {
        lambda_eps: lambda,
        q_star_used: q,
        v_profile: v,
        dist_d1: d1.sqrt(),
        dist_lp: lp.powf(1.0 / ps),
        dist_linf_tail: linf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalingRegime {
    Subcritical,
    Critical,
    Supercritical,
    /// ε = 0 family at p = p* + δ, δ ↓ 0.
    DeltaSupercritical,
    /// ε = 0 subcritical family at p = p* − δ, δ ↓ 0.
    PUpSubcritical,
}

impl std::str::FromStr for ScalingRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "subcritical" => Ok(Self::Subcritical),
            "critical" => Ok(Self::Critical),
            "supercritical" => Ok(Self::Supercritical),
            "deltasupercritical" | "delta" => Ok(Self::DeltaSupercritical),
            "pupsubcritical" | "pup" => Ok(Self::PUpSubcritical),
            _ => Err(Error::InvalidArgument(format!("unknown regime '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    Amplitude,
    Lambda,
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub observable: Observable,
    pub exponent: f64,
    /// Power of log(1/x); zero without log correction.
    pub log_power: f64,
    /// Upper bound (≲) rather than a two-sided law.
    pub upper_bound_only: bool,
}

fn pred(observable: Observable, exponent: f64, log_power: f64) -> Prediction {
    Prediction {
        observable,
        exponent,
        log_power,
        upper_bound_only: false,
    }
}

/// q above which the δ-law w₀^δ(0) ~ δ^{1/(q−p*)} is established.
pub fn delta_law_threshold(n: u32) -> f64 {
    let nf = n as f64;
    nf * (nf + 2.0) / (2.0 * (nf - 2.0))
}

/// Predicted (exponent, log power) of each tracked observable as x = ε or δ → 0.
pub fn predict_exponents(regime: ScalingRegime, n: u32, p: f64, q: f64) -> Result<Vec<Prediction>> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("dimension N = {n} < 3")));
    }
    let ps = critical_exponent(n);
    let mismatch = |what: &str| Err(Error::InvalidArgument(format!("{regime:?} needs {what}")));
    match regime {
        ScalingRegime::Critical => {
            if crate::ode_core::regime_of(n, p) != Regime::Critical || q <= p {
                return mismatch("p = p* < q");
            }
            let sigma = |e, l| Prediction {
                upper_bound_only: true,
                ..pred(Observable::Sigma, e, l)
            };
            Ok(match n {
                3 => vec![
                    pred(Observable::Amplitude, 1.0 / (2.0 * q - 8.0), 0.0),
                    pred(Observable::Lambda, -1.0 / (q - 4.0), 0.0),
                    sigma((q - 6.0) / (2.0 * q - 8.0), 0.0),
                ],
                4 => {
                    let e = 1.0 / (q - 2.0);
                    let s = (q - 4.0) / (q - 2.0);
                    vec![
                        pred(Observable::Amplitude, e, e),
                        pred(Observable::Lambda, -e, -e),
                        sigma(s, s),
                    ]
                }
                _ => vec![
                    pred(Observable::Amplitude, 1.0 / (q - 2.0), 0.0),
                    pred(Observable::Lambda, -(p - 2.0) / (2.0 * q - 4.0), 0.0),
                    sigma((q - p) / (q - 2.0), 0.0),
                ],
            })
        }
        ScalingRegime::Subcritical => {
            if !(p > 2.0 && p < ps && q > p) {
                return mismatch("2 < p < p* < q");
            }
            Ok(vec![pred(Observable::Amplitude, 1.0 / (p - 2.0), 0.0)])
        }
        ScalingRegime::Supercritical => {
            if !(p > ps && q > p) {
                return mismatch("p* < p < q");
            }
            Ok(vec![pred(Observable::Amplitude, 0.0, 0.0)])
        }
        ScalingRegime::DeltaSupercritical => {
            if q <= ps {
                return mismatch("q > p*");
            }
            Ok(vec![pred(Observable::Amplitude, 1.0 / (q - ps), 0.0)])
        }
        ScalingRegime::PUpSubcritical => Ok(vec![match n {
            3 => pred(Observable::Amplitude, -0.5, 0.0),
            4 => pred(Observable::Amplitude, -0.5, 1.0),
            _ => pred(Observable::Amplitude, -(n as f64 - 2.0) / 4.0, 0.0),
        }]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub intercept: f64,
    pub exponent: f64,
    pub log_power: f64,
    pub r2: f64,
    /// Root-mean-square residual in log y.
    pub rms: f64,
}

fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let m = y.len();
    let a = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]);
    let b = DVector::from_column_slice(y);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
    let resid = &b - &a * &coef;
    let ss_res = resid.norm_squared();
    let mean = y.iter().sum::<f64>() / m as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((coef.iter().copied().collect(), r2, (ss_res / m as f64).sqrt()))
}

fn check_points(points: &[(f64, f64)], with_log: bool) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidArgument("fit points must be positive and finite".into()));
    }
    if with_log && points.iter().any(|&(x, _)| x >= 1.0) {
        return Err(Error::InvalidArgument("log correction needs x < 1".into()));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    let spread = hi / lo;
    if spread < 4.0 {
        return Err(Error::IllConditionedFit { spread });
    }
    Ok(())
}

/// Least squares for log y = a + b log x (+ c log log(1/x)).
pub fn fit_exponent(points: &[(f64, f64)], with_log: bool) -> Result<FitResult> {
    check_points(points, with_log)?;
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mut cols = vec![vec![1.0; points.len()], points.iter().map(|p| p.0.ln()).collect()];
    if with_log {
        cols.push(points.iter().map(|p| (-p.0.ln()).ln()).collect());
    }
    let (c, r2, rms) = least_squares(&cols, &y)?;
    Ok(FitResult {
        intercept: c[0],
        exponent: c[1],
        log_power: if with_log { c[2] } else { 0.0 },
        r2,
        rms,
    })
}

/// Fit of log y = a + b log(x log(1/x)), i.e. with the log power tied to the exponent.
pub fn fit_tied_log(points: &[(f64, f64)]) -> Result<FitResult> {
    check_points(points, true)?;
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let cols = vec![
        vec![1.0; points.len()],
        points.iter().map(|p| (p.0 * (-p.0.ln())).ln()).collect(),
    ];
    let (c, r2, rms) = least_squares(&cols, &y)?;
    Ok(FitResult {
        intercept: c[0],
        exponent: c[1],
        log_power: c[1],
        r2,
        rms,
    })
}

/// Geometric grid from `start` toward `end` with ratio `ratio` ∈ (1, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub ratio: f64,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        let (a, b, r) = (self.start, self.end, self.ratio);
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument("grid ends must be positive".into()));
        }
        if !(r > 1.0 && r <= 2.0) {
            return Err(Error::InvalidArgument(format!("grid ratio {r} outside (1, 2]")));
        }
        let steps = ((a.max(b) / a.min(b)).ln() / r.ln() - 1e-9).ceil() as usize;
        let (lo, hi) = (a.min(b), a.max(b));
        let mut xs: Vec<f64> = (0..=steps)
            .map(|k| hi * (lo / hi).powf(k as f64 / steps.max(1) as f64))
            .collect();
        xs.dedup();
        if xs.len() < 8 {
            return Err(Error::InvalidArgument(format!(
                "grid has {} points, need at least 8",
                xs.len()
            )));
        }
        Ok(xs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub regime: ScalingRegime,
    pub n: u32,
    /// Ignored for the δ regimes, where p = p* ± δ.
    pub p: f64,
    pub q: f64,
    pub grid: GridSpec,
    pub controls: ShootControls,
    pub jobs: Option<usize>,
}

/// Observables at one sweep abscissa x (= ε or δ).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub converged: bool,
    pub error: Option<String>,
    pub amplitude: Option<f64>,
    pub level_s: Option<f64>,
    pub nehari_res: Option<f64>,
    pub pokh_res: Option<f64>,
    /// S − S* (critical), S₀^δ − S* (δ-supercritical).
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub dist_d1: Option<f64>,
    pub dist_lp: Option<f64>,
    pub dist_linf_tail: Option<f64>,
    pub kappa_res: Option<f64>,
    pub important_res: Option<f64>,
    pub v_lq: Option<f64>,
    pub v_l2: Option<f64>,
    /// ε‖u_ε‖₂² in the original frame.
    pub eps_l2: Option<f64>,
    /// |u_ε(0) − u₀(0)| (supercritical) or ε^{−1/(p−2)}u_ε(0) (subcritical).
    pub amplitude_gap: Option<f64>,
    pub scaled_amplitude: Option<f64>,
    pub rhs_evals: u64,
}

impl SweepPoint {
    pub fn max_residual(&self) -> Option<f64> {
        Some(self.nehari_res?.abs().max(self.pokh_res?.abs()))
    }

    pub fn observable(&self, o: Observable) -> Option<f64> {
        match o {
            Observable::Amplitude => self.amplitude,
            Observable::Lambda => self.lambda,
            Observable::Sigma => self.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableFit {
    pub observable: Observable,
    pub with_log: bool,
    pub fit: FitResult,
    pub predicted: Prediction,
    /// False for exploratory runs outside the range where the law is proven.
    pub asserted: bool,
}

/// Constants in λ ≥ c₁ σ^{−(p−2)/(2(q−p))} and λ ≤ c₂ ε^{−1/2} σ^{1/2}/‖v‖₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBounds {
    pub c1: f64,
    pub c2: f64,
}

impl LambdaBounds {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        (lo..=hi).contains(&self.c1) && (lo..=hi).contains(&self.c2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub regime: ScalingRegime,
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub points: Vec<SweepPoint>,
    /// u₀(0) (supercritical) or v₀(0) (subcritical) of the limit problem.
    pub reference_amplitude: Option<f64>,
    pub s_star: Option<f64>,
    pub fits: Vec<ObservableFit>,
    /// (min, max) of x over the fit window; (0, 0) when it is empty.
    pub window: (f64, f64),
    pub lambda_bounds: Option<LambdaBounds>,
}

impl ScalingReport {
    /// Amplitude fit; with log correction in dimension 4 when predicted.
    pub fn primary(&self) -> Option<&ObservableFit> {
        self.fit_for(Observable::Amplitude)
    }

    /// Fit for an observable, preferring the log-corrected one when predicted.
    pub fn fit_for(&self, o: Observable) -> Option<&ObservableFit> {
        let mut cands = self.fits.iter().filter(|f| f.observable == o);
        let first = cands.next()?;
        let want_log = first.predicted.log_power != 0.0;
        std::iter::once(first)
            .chain(cands)
            .find(|f| f.with_log == want_log)
            .or(Some(first))
    }

    pub fn fit(&self, o: Observable, with_log: bool) -> Option<&ObservableFit> {
        self.fits.iter().find(|f| f.observable == o && f.with_log == with_log)
    }

    /// Points of the fit window, ordered by decreasing x.
    pub fn window_points(&self) -> impl Iterator<Item = &SweepPoint> {
        let (lo, hi) = self.window;
        self.points
            .iter()
            .filter(move |p| p.converged && p.x >= lo && p.x <= hi && in_window(p))
    }

    /// (x, y) pairs over converged points, ordered by decreasing x.
    pub fn series(&self, f: impl Fn(&SweepPoint) -> Option<f64>) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.converged)
            .filter_map(|p| Some((p.x, f(p)?)))
            .collect()
    }
}

const WINDOW_RESIDUAL: f64 = 1e-5;

fn in_window(p: &SweepPoint) -> bool {
    p.max_residual().is_some_and(|r| r <= WINDOW_RESIDUAL)
}

struct SweepContext {
    s_star: Option<f64>,
    q_star: Option<f64>,
    reference: Option<f64>,
}

fn point_params(spec: &SweepSpec, x: f64) -> Result<ProblemParams> {
    let ps = critical_exponent(spec.n);
    match spec.regime {
        ScalingRegime::Critical => ProblemParams::critical(spec.n, spec.q, x),
        ScalingRegime::Subcritical | ScalingRegime::Supercritical => {
            ProblemParams::new(Family::PEps, spec.n, spec.p, spec.q, x)
        }
        ScalingRegime::DeltaSupercritical => ProblemParams::new(Family::PZero, spec.n, ps + x, spec.q, 0.0),
        ScalingRegime::PUpSubcritical => ProblemParams::new(Family::RZero, spec.n, ps - x, spec.q, 0.0),
    }
}

fn analyze_point(spec: &SweepSpec, ctx: &SweepContext, x: f64) -> Result<SweepPoint> {
    let params = point_params(spec, x)?;
    let profile = find_ground_state(&params, &spec.controls)?;
    let rhs_evals = profile.diagnostics.rhs_evals;
    let sol = GroundStateSolution::from_profile(profile)?;
    let a = sol.profile.amplitude;
    let mut pt = SweepPoint {
        x,
        converged: true,
        amplitude: Some(a),
        level_s: Some(sol.level_s),
        nehari_res: Some(sol.nehari_residual),
        pokh_res: Some(sol.pokhozhaev_residual),
        rhs_evals,
        ..Default::default()
    };
    match spec.regime {
        ScalingRegime::Critical => {
            let s_star = ctx.s_star.expect("critical context");
            pt.sigma = Some(sol.level_s - s_star);
            let w = to_minimizer_frame(&sol.profile, sol.level_s)?;
            let k = kappa_identities(&w, x)?;
            pt.kappa_res = Some(k.residual_q);
            let c = concentrate(&w, ctx.q_star.expect("critical context"))?;
            let lam = c.lambda_eps;
            let vq = radial_norm(&c.v_profile, spec.q)?;
            let v2 = radial_norm(&c.v_profile, 2.0)?;
            let lhs = lam.powf(-2.0 * (spec.q - params.p()) / (params.p() - 2.0)) * vq;
            let rhs = kappa(params.p(), spec.q) * x * lam * lam * v2;
            pt.important_res = Some((lhs - rhs) / rhs);
            pt.lambda = Some(lam);
            pt.dist_d1 = Some(c.dist_d1);
            pt.dist_lp = Some(c.dist_lp);
            pt.dist_linf_tail = Some(c.dist_linf_tail);
            pt.v_lq = Some(vq);
            pt.v_l2 = Some(v2);
        }
        ScalingRegime::Supercritical => {
            pt.eps_l2 = sol.norm_l2_sq.map(|l2| x * l2);
            pt.amplitude_gap = ctx.reference.map(|u0| (a - u0).abs());
        }
        ScalingRegime::Subcritical => {
            let scaled = x.powf(-1.0 / (spec.p - 2.0)) * a;
            pt.scaled_amplitude = Some(scaled);
            pt.amplitude_gap = ctx.reference.map(|v0| (scaled - v0).abs() / v0);
        }
        ScalingRegime::DeltaSupercritical => {
            pt.sigma = ctx.s_star.map(|s| sol.level_s - s);
        }
        ScalingRegime::PUpSubcritical => {}
    }
    Ok(pt)
}

fn reference_amplitude(spec: &SweepSpec) -> Result<Option<f64>> {
    let family = match spec.regime {
        ScalingRegime::Supercritical => Family::PZero,
        ScalingRegime::Subcritical => Family::RZero,
        _ => return Ok(None),
    };
    let params = ProblemParams::new(family, spec.n, spec.p, spec.q, 0.0)?;
    Ok(Some(find_ground_state(&params, &spec.controls)?.amplitude))
}

/// Solve every grid point, collect observables and fit exponents.
pub fn sweep(spec: &SweepSpec) -> Result<ScalingReport> {
    let xs = spec.grid.points()?;
    predict_exponents(spec.regime, spec.n, spec.p, spec.q)?;
    let needs_s = matches!(spec.regime, ScalingRegime::Critical | ScalingRegime::DeltaSupercritical);
    let ctx = SweepContext {
        s_star: if needs_s { Some(sobolev_constant(spec.n)?) } else { None },
        q_star: if spec.regime == ScalingRegime::Critical {
            Some(q_star(spec.n)?)
        } else {
            None
        },
        reference: reference_amplitude(spec)?,
    };

    let run = |x: f64| {
        analyze_point(spec, &ctx, x).unwrap_or_else(|e| SweepPoint {
            x,
            converged: false,
            error: Some(e.to_string()),
            ..Default::default()
        })
    };
    let points: Vec<SweepPoint> = match spec.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| xs.par_iter().map(|&x| run(x)).collect()),
        None => xs.par_iter().map(|&x| run(x)).collect(),
    };

    let succeeded = points.iter().filter(|p| p.converged).count();
    if succeeded < 6 {
        return Err(Error::SweepFailed {
            succeeded,
            total: points.len(),
        });
    }

    let mut report = ScalingReport {
        regime: spec.regime,
        n: spec.n,
        p: match spec.regime {
            ScalingRegime::Critical => critical_exponent(spec.n),
            _ => spec.p,
        },
        q: spec.q,
        points,
        reference_amplitude: ctx.reference,
        s_star: ctx.s_star,
        fits: Vec::new(),
        window: (f64::INFINITY, 0.0),
        lambda_bounds: None,
    };
    report.refit()?;
    Ok(report)
}

impl ScalingReport {
    /// Recomputes the fit window, exponent fits and λ bounds from `points`.
    pub fn refit(&mut self) -> Result<()> {
        let predictions = predict_exponents(self.regime, self.n, self.p, self.q)?;
        let mut xs: Vec<f64> = self.points.iter().map(|p| p.x).collect();
        xs.sort_by(|a, b| b.total_cmp(a));
        if xs.is_empty() {
            return Err(Error::SweepFailed { succeeded: 0, total: 0 });
        }
        // Drop the two largest abscissae, then anything failed or inaccurate.
        let cutoff = xs[2.min(xs.len() - 1)];
        let window_pts: Vec<&SweepPoint> = self
            .points
            .iter()
            .filter(|p| p.x <= cutoff && p.converged && in_window(p))
            .collect();
        self.window = match window_pts.is_empty() {
            true => (0.0, 0.0),
            false => window_pts
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.x), hi.max(p.x))),
        };

        let exploratory = self.regime == ScalingRegime::DeltaSupercritical && self.q <= delta_law_threshold(self.n);
        let mut fits = Vec::new();
        for pr in &predictions {
            let data: Vec<(f64, f64)> = window_pts
                .iter()
                .filter_map(|p| Some((p.x, p.observable(pr.observable)?)))
                .filter(|&(_, y)| y > 0.0)
                .collect();
            let variants: &[bool] = if pr.log_power != 0.0 { &[false, true] } else { &[false] };
            for &with_log in variants {
                if let Ok(fit) = fit_exponent(&data, with_log) {
                    fits.push(ObservableFit {
                        observable: pr.observable,
                        with_log,
                        fit,
                        predicted: *pr,
                        asserted: !exploratory && !pr.upper_bound_only,
                    });
                }
            }
        }
        self.fits = fits;
        self.lambda_bounds = if self.regime == ScalingRegime::Critical {
            lambda_bound_constants(&window_pts, self.p, self.q)
        } else {
            None
        };
        Ok(())
    }
}

fn lambda_bound_constants(pts: &[&SweepPoint], p: f64, q: f64) -> Option<LambdaBounds> {
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for pt in pts {
        let (lam, sigma, v2) = (pt.lambda?, pt.sigma?, pt.v_l2?);
        let lower = sigma.powf(-(p - 2.0) / (2.0 * (q - p)));
        let upper = pt.x.powf(-0.5) * sigma.sqrt() / v2.sqrt();
        c1 = c1.min(lam / lower);
        c2 = c2.max(lam / upper);
    }
    c1.is_finite().then_some(LambdaBounds { c1, c2 })
}
