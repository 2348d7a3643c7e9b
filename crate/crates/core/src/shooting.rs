//! Bisection on u(0) between undershoot and overshoot, and the analytic tail
//! attached to the converged profile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode_core::{integrate, Decay, Family, ProblemParams, StepControls, TerminalEvent, Trajectory};
use crate::quadrature::gauss8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shot {
    Overshoot,
    Undershoot,
    Converged,
}

/// Relative terminal value below which a trajectory counts as converged.
pub const CONVERGED_FRACTION: f64 = 1e-8;

/// Shooting outcome of a trajectory.
///
/// A trajectory that reaches r_max without an event is decided by the sign of
/// ½u'² + F(u) for exponential families, and by the sign of the harmonic
/// remainder u + r u'/(N−2) for the ε = 0 family, whose ground state decays
/// like r^{2−N} while undershoots decay more slowly.
pub fn classify(t: &Trajectory) -> Shot {
    match t.terminal_event {
        TerminalEvent::ZeroCrossing => Shot::Overshoot,
        TerminalEvent::SlopeSignFlip => Shot::Undershoot,
        TerminalEvent::Underflow => Shot::Converged,
        TerminalEvent::ReachedRmax => match t.params.decay() {
            Decay::Algebraic { .. } => {
                if t.harmonic_remainder() < 0.0 {
                    Shot::Overshoot
                } else {
                    Shot::Undershoot
                }
            }
            Decay::Exponential { .. } => {
                let u = t.last_value();
                if u.abs() < CONVERGED_FRACTION * t.amplitude {
                    return Shot::Converged;
                }
                let du = t.last_slope();
                let e = 0.5 * du * du + t.params.nonlinearity().antiderivative(u);
                if e < 0.0 {
                    Shot::Undershoot
                } else {
                    Shot::Overshoot
                }
            }
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootControls {
    /// Relative bracket width at which bisection stops.
    pub amp_tol: f64,
    pub max_iter: usize,
    pub step: StepControls,
    /// Explicit (undershoot, overshoot) starting bracket.
    pub amp_search_range: Option<(f64, f64)>,
    pub r_max: Option<f64>,
}

impl Default for ShootControls {
    fn default() -> Self {
        ShootControls {
            amp_tol: 1e-12,
            max_iter: 200,
            // Relative control only: tail values fall far below any fixed atol.
            step: StepControls {
                atol: 1e-24,
                ..StepControls::default()
            },
            amp_search_range: None,
            r_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailKind {
    Exponential,
    Algebraic,
}

/// Far-field model.
///
/// Exponential: u = φ + C φ^s with φ = P r^{−ν} K_ν(k r) normalised so that
/// φ ~ P r^{−(N−1)/2} e^{−k r}, ν = (N−2)/2, and C φ^s the leading response
/// to the u^{p−1} term (s = p − 1). Algebraic: u = P r^{−power}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub kind: TailKind,
    pub rate_or_power: f64,
    pub prefactor: f64,
    pub match_radius: f64,
    pub dim: u32,
    #[serde(default)]
    pub correction: f64,
    #[serde(default = "one")]
    pub correction_power: f64,
}

fn one() -> f64 {
    1.0
}

/// g_ν(z) = √(2z/π) e^{z} K_ν(z).
pub fn bessel_k_scaled(nu: f64, z: f64) -> f64 {
    // Half-integer orders: the asymptotic series terminates.
    let half_int = (nu - nu.floor() - 0.5).abs() < 1e-12;
    if half_int || z > 30.0 {
        bessel_k_series(nu, z, half_int)
    } else {
        bessel_k_integral(nu, z)
    }
}

fn bessel_k_series(nu: f64, z: f64, exact: bool) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..200 {
        let jf = j as f64;
        let next = term * (mu - (2.0 * jf - 1.0).powi(2)) / (8.0 * jf * z);
        if next == 0.0 || (!exact && next.abs() >= term.abs()) {
            break;
        }
        sum += next;
        term = next;
        if !exact && term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

// K_ν(z) = ∫₀^∞ e^{−z cosh t} cosh(νt) dt.
fn bessel_k_integral(nu: f64, z: f64) -> f64 {
    let t_max = (1.0 + 40.0 / z).acosh();
    let panels = 16;
    let h = t_max / panels as f64;
    let mut s = 0.0;
    for i in 0..panels {
        let a = i as f64 * h;
        s += gauss8(a, a + h, |t| (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh());
    }
    (2.0 * z / PI).sqrt() * s
}

impl TailModel {
    fn nu(&self) -> f64 {
        (self.dim as f64 - 2.0) / 2.0
    }

    fn linear_value(&self, r: f64) -> f64 {
        let k = self.rate_or_power;
        let n = self.dim as f64;
        self.prefactor * r.powf(-(n - 1.0) / 2.0) * (-k * r).exp() * bessel_k_scaled(self.nu(), k * r)
    }

    pub fn value(&self, r: f64) -> f64 {
        match self.kind {
            TailKind::Exponential => {
                let phi = self.linear_value(r);
                phi + self.correction * phi.powf(self.correction_power)
            }
            TailKind::Algebraic => self.prefactor * r.powf(-self.rate_or_power),
        }
    }

    pub fn slope(&self, r: f64) -> f64 {
        match self.kind {
            TailKind::Exponential => {
                let k = self.rate_or_power;
                let n = self.dim as f64;
                let dphi = -k
                    * self.prefactor
                    * r.powf(-(n - 1.0) / 2.0)
                    * (-k * r).exp()
                    * bessel_k_scaled(self.nu() + 1.0, k * r);
                let s = self.correction_power;
                let factor = if self.correction == 0.0 {
                    1.0
                } else {
                    1.0 + self.correction * s * self.linear_value(r).powf(s - 1.0)
                };
                dphi * factor
            }
            TailKind::Algebraic => {
                -self.rate_or_power * self.prefactor * r.powf(-self.rate_or_power - 1.0)
            }
        }
    }

    /// Tail of r ↦ k·u(c·r).
    pub fn rescaled(&self, c: f64, k: f64) -> TailModel {
        let n = self.dim as f64;
        let (rate_or_power, prefactor) = match self.kind {
            TailKind::Exponential => (self.rate_or_power * c, k * self.prefactor * c.powf(-(n - 1.0) / 2.0)),
            TailKind::Algebraic => (self.rate_or_power, k * self.prefactor * c.powf(-self.rate_or_power)),
        };
        TailModel {
            rate_or_power,
            prefactor,
            match_radius: self.match_radius / c,
            correction: self.correction * k.powf(1.0 - self.correction_power),
            ..*self
        }
    }

    /// Model through (R, u(R)) for the given decay law.
    fn matched(params: &ProblemParams, r: f64, u: f64) -> TailModel {
        let dim = params.n();
        let (kind, rate_or_power) = match params.decay() {
            Decay::Exponential { rate } => (TailKind::Exponential, rate),
            Decay::Algebraic { power } => (TailKind::Algebraic, power),
        };
        let mut unit = TailModel {
            kind,
            rate_or_power,
            prefactor: 1.0,
            match_radius: r,
            dim,
            correction: 0.0,
            correction_power: 1.0,
        };
        if kind == TailKind::Algebraic {
            return TailModel {
                prefactor: u / unit.value(r),
                ..unit
            };
        }
        // (m − s²k²)·Cφ^s = c_p φ^s at leading order, with m = k².
        let nl = params.nonlinearity();
        let s = nl.p - 1.0;
        unit.correction_power = s;
        unit.correction = nl.coef_p / ((1.0 - s * s) * rate_or_power * rate_or_power);
        // Solve x + C x^s = u for the linear part x = φ(r).
        let c = unit.correction;
        let mut x = u;
        for _ in 0..50 {
            let g = x + c * x.powf(s) - u;
            let dx = g / (1.0 + c * s * x.powf(s - 1.0));
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
        TailModel {
            prefactor: x / unit.linear_value(r),
            ..unit
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShootDiagnostics {
    pub iterations: usize,
    pub cap_hit: bool,
    pub bracket: (f64, f64),
    pub final_rel_width: f64,
    pub r_max: f64,
    pub rhs_evals: u64,
    pub integrations: usize,
    /// Relative slope mismatch between grid and tail at the match radius.
    pub tail_mismatch: f64,
    /// Relative value mismatch at twice the match radius.
    pub tail_residual_2x: f64,
}

/// A converged ground state, possibly reparameterized as r ↦ k·u(c·r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub params: ProblemParams,
    pub amplitude: f64,
    pub grid: Trajectory,
    pub tail: TailModel,
    /// Accumulated (c, k) relative to the original ODE frame.
    pub frame: (f64, f64),
    pub diagnostics: ShootDiagnostics,
}

impl RadialProfile {
    pub fn dim(&self) -> u32 {
        self.params.n()
    }

    pub fn match_radius(&self) -> f64 {
        self.tail.match_radius
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.tail.match_radius {
            self.grid.eval(r).map_or(f64::NAN, |v| v.0)
        } else {
            self.tail.value(r)
        }
    }

    pub fn slope(&self, r: f64) -> f64 {
        if r <= self.tail.match_radius {
            self.grid.eval(r).map_or(f64::NAN, |v| v.1)
        } else {
            self.tail.slope(r)
        }
    }

    /// r ↦ k·u(c·r).
    pub fn rescaled(&self, c: f64, k: f64) -> RadialProfile {
        RadialProfile {
            params: self.params,
            amplitude: k * self.amplitude,
            grid: self.grid.rescaled(c, k),
            tail: self.tail.rescaled(c, k),
            frame: (self.frame.0 * c, self.frame.1 * k),
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Same function with every value multiplied by `factor` (not a solution).
    pub fn scaled_values(&self, factor: f64) -> RadialProfile {
        self.rescaled(1.0, factor)
    }
}

/// Sup of ε for which u^p/p − u^q/q − εu²/2 attains a non-negative maximum on
/// u > 0: with u_m^{q−p} = q(p−2)/(p(q−2)), ε* = 2(u_m^{p−2}/p − u_m^{q−2}/q).
pub fn epsilon_star(p: f64, q: f64) -> Result<f64> {
    if !(p > 2.0 && q > p && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("need q > p > 2, got p = {p}, q = {q}")));
    }
    let um = (q * (p - 2.0) / (p * (q - 2.0))).powf(1.0 / (q - p));
    Ok(2.0 * (um.powf(p - 2.0) / p - um.powf(q - 2.0) / q))
}

/// Smallest x in (lo, hi) with `pred(x)` true, given pred(lo) false and pred(hi) true.
fn bisect_root(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Shooter<'a> {
    params: &'a ProblemParams,
    r_max: f64,
    step: &'a StepControls,
    rhs_evals: u64,
    integrations: usize,
}

impl Shooter<'_> {
    fn shoot(&mut self, a: f64) -> Result<(Shot, Trajectory)> {
        let t = integrate(self.params, a, self.r_max, self.step)?;
        self.rhs_evals += t.rhs_evals;
        self.integrations += 1;
        Ok((classify(&t), t))
    }
}

fn not_found(lo: f64, hi: f64, reason: impl Into<String>) -> Error {
    Error::BracketNotFound {
        lo,
        hi,
        reason: reason.into(),
    }
}

type Endpoints = ((f64, Trajectory), (f64, Trajectory));

/// Locate amplitudes lo < hi with lo undershooting and hi overshooting.
fn find_bracket(sh: &mut Shooter, ctrl: &ShootControls) -> Result<std::result::Result<Endpoints, (f64, Trajectory)>> {
    let params = sh.params;
    let nl = params.nonlinearity();
    if let Some((lo, hi)) = ctrl.amp_search_range {
        if !(0.0 < lo && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad search range ({lo}, {hi})")));
        }
        let (s_lo, t_lo) = sh.shoot(lo)?;
        let (s_hi, t_hi) = sh.shoot(hi)?;
        return match (s_lo, s_hi) {
            (Shot::Undershoot, Shot::Overshoot) => Ok(Ok(((lo, t_lo), (hi, t_hi)))),
            _ => Err(not_found(lo, hi, format!("endpoints classify as {s_lo:?}, {s_hi:?}"))),
        };
    }

    match params.family() {
        Family::RZero => {
            let zeta = (params.p() / 2.0).powf(1.0 / (params.p() - 2.0));
            let lo = sh.shoot(zeta)?;
            let mut hi = zeta;
            for _ in 0..80 {
                hi *= 1.5;
                let (s, t) = sh.shoot(hi)?;
                match s {
                    Shot::Overshoot => return Ok(Ok(((zeta, lo.1), (hi, t)))),
                    Shot::Converged => return Ok(Err((hi, t))),
                    Shot::Undershoot => {}
                }
            }
            Err(not_found(zeta, hi, "no overshoot found scanning upward"))
        }
        Family::PZero => {
            let mut lo = 0.5;
            let (s, t) = sh.shoot(lo)?;
            match s {
                Shot::Converged => Ok(Err((lo, t))),
                Shot::Undershoot => {
                    let mut gap = 0.5;
                    let lo_t = t;
                    while gap > 1e-15 {
                        gap /= 1.5;
                        let hi = 1.0 - gap;
                        let (s, t) = sh.shoot(hi)?;
                        match s {
                            Shot::Overshoot => return Ok(Ok(((lo, lo_t), (hi, t)))),
                            Shot::Converged => return Ok(Err((hi, t))),
                            Shot::Undershoot => {}
                        }
                    }
                    Err(not_found(lo, 1.0, "no overshoot below u = 1"))
                }
                Shot::Overshoot => {
                    let hi = lo;
                    let hi_t = t;
                    while lo > 1e-300 {
                        lo /= 1.5;
                        let (s, t) = sh.shoot(lo)?;
                        match s {
                            Shot::Undershoot => return Ok(Ok(((lo, t), (hi, hi_t)))),
                            Shot::Converged => return Ok(Err((lo, t))),
                            Shot::Overshoot => {}
                        }
                    }
                    Err(not_found(lo, hi, "no undershoot found scanning downward"))
                }
            }
        }
        Family::PEps | Family::REps => {
            // Positive roots b1 < b2 of f(u)/u, split at the maximiser of f(u)/u.
            let (p, q) = (params.p(), params.q());
            let um = ((p - 2.0) * nl.coef_p / ((q - 2.0) * nl.coef_q)).powf(1.0 / (q - p));
            if nl.ratio(um) <= 0.0 {
                return Err(not_found(0.0, um, "f has no positive zero: eps too large"));
            }
            let b1 = bisect_root(0.0, um, |u| nl.ratio(u) > 0.0);
            let mut far = 2.0 * um;
            while nl.ratio(far) > 0.0 {
                far *= 2.0;
            }
            let b2 = bisect_root(um, far, |u| nl.ratio(u) <= 0.0);
            if nl.antiderivative(b2) <= 0.0 {
                return Err(not_found(b1, b2, "F stays non-positive on (0, b2]: eps >= eps*"));
            }
            let zeta = bisect_root(b1, b2, |u| nl.antiderivative(u) > 0.0);
            let lo = sh.shoot(zeta)?;
            if lo.0 != Shot::Undershoot {
                return Err(Error::InternalConsistency(format!(
                    "zero of F at {zeta} classified as {:?}",
                    lo.0
                )));
            }
            let mut gap = b2 - zeta;
            while gap > 1e-15 * b2 {
                gap /= 1.5;
                let hi = b2 - gap;
                let (s, t) = sh.shoot(hi)?;
                match s {
                    Shot::Overshoot => return Ok(Ok(((zeta, lo.1), (hi, t)))),
                    Shot::Converged => return Ok(Err((hi, t))),
                    Shot::Undershoot => {}
                }
            }
            Err(not_found(zeta, b2, "no overshoot below the upper equilibrium"))
        }
    }
}

fn default_r_max(params: &ProblemParams) -> f64 {
    match params.decay() {
        Decay::Exponential { rate } => 50.0 / rate,
        Decay::Algebraic { .. } => {
            let a = 0.5;
            let scale = (params.nonlinearity().f(a) / a).abs().powf(-0.5);
            (1e4 * scale).min(1e6)
        }
    }
}

/// First radius on `lo`'s grid where lo and hi differ by `rel` relative.
fn divergence_radius(lo: &Trajectory, hi: &Trajectory, rel: f64) -> f64 {
    let end = lo.last_radius().min(hi.last_radius());
    for (i, &r) in lo.radii.iter().enumerate() {
        if r > end {
            return end;
        }
        let (v, _) = hi.eval(r).expect("inside hi");
        let u = lo.values[i];
        if (u - v).abs() > rel * u.abs() {
            return r;
        }
    }
    end
}

/// Relative agreement bands used to place the tail hand-off.
const TIGHT: f64 = 1e-6;
const LOOSE: f64 = 1e-4;
const TAIL_MISMATCH_MAX: f64 = 1e-4;

/// Ground state of the selected family by amplitude bisection.
enum Bracket {
    Open {
        lo: f64,
        lo_t: Trajectory,
        hi: f64,
        hi_t: Trajectory,
    },
    Converged(Trajectory),
}

impl Bracket {
    fn lower(&self) -> &Trajectory {
        match self {
            Bracket::Open { lo_t, .. } => lo_t,
            Bracket::Converged(t) => t,
        }
    }

    fn upper(&self) -> &Trajectory {
        match self {
            Bracket::Open { hi_t, .. } => hi_t,
            Bracket::Converged(t) => t,
        }
    }
}

/// Extra bisection steps allowed when refining past `amp_tol`.
const REFINE_ITER: usize = 60;

/// Bisect until the relative width is at most `tol` or the floats are adjacent.
fn bisect(
    sh: &mut Shooter,
    state: Bracket,
    tol: f64,
    max_iter: usize,
    diag: &mut ShootDiagnostics,
) -> Result<Bracket> {
    let Bracket::Open {
        mut lo,
        mut lo_t,
        mut hi,
        mut hi_t,
    } = state
    else {
        return Ok(state);
    };
    while (hi - lo) > tol * hi {
        if diag.iterations >= max_iter {
            diag.cap_hit = true;
            break;
        }
        let mid = if hi > 2.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        diag.iterations += 1;
        let (s, t) = sh.shoot(mid)?;
        match s {
            Shot::Undershoot => {
                lo = mid;
                lo_t = t;
            }
            Shot::Overshoot => {
                hi = mid;
                hi_t = t;
            }
            Shot::Converged => {
                diag.final_rel_width = (hi - lo) / hi;
                return Ok(Bracket::Converged(t));
            }
        }
    }
    diag.final_rel_width = (hi - lo) / hi;
    Ok(Bracket::Open { lo, lo_t, hi, hi_t })
}

struct Matched {
    grid: Trajectory,
    tail: TailModel,
    mismatch: f64,
    residual_2x: f64,
}

fn match_tail(state: &Bracket, params: &ProblemParams) -> Result<(Matched, bool)> {
    let (lo_t, hi_t) = (state.lower(), state.upper());
    let match_radius = match params.decay() {
        Decay::Exponential { .. } => {
            let tight = divergence_radius(lo_t, hi_t, TIGHT);
            let loose = divergence_radius(lo_t, hi_t, LOOSE);
            tight.min(0.5 * loose)
        }
        Decay::Algebraic { .. } => 0.5 * lo_t.last_radius().min(hi_t.last_radius()),
    };
    if match_radius <= lo_t.first_radius() {
        return Err(Error::InconsistentSolution(format!(
            "undershoot and overshoot trajectories separate at r = {match_radius:e}"
        )));
    }
    let (u_m, du_m) = lo_t.eval(match_radius).expect("match radius inside grid");
    let tail = TailModel::matched(params, match_radius, u_m);
    let mismatch = ((tail.slope(match_radius) - du_m) / du_m).abs();
    let r2 = 2.0 * match_radius;
    let residual_2x = match lo_t.eval(r2) {
        Some((u2, _)) => ((tail.value(r2) - u2) / u2).abs(),
        None => f64::NAN,
    };
    let ok = mismatch < TAIL_MISMATCH_MAX;
    Ok((
        Matched {
            grid: lo_t.truncated(match_radius),
            tail,
            mismatch,
            residual_2x,
        },
        ok,
    ))
}

pub fn find_ground_state(params: &ProblemParams, ctrl: &ShootControls) -> Result<RadialProfile> {
    ctrl.step.validate()?;
    if !(ctrl.amp_tol > 0.0) {
        return Err(Error::InvalidArgument("amp_tol must be positive".into()));
    }
    if params.family() == Family::PEps && params.eps() == 0.0 {
        return Err(Error::InvalidArgument("use family P_zero for eps = 0".into()));
    }
    let mut r_max = ctrl.r_max.unwrap_or_else(|| default_r_max(params));
    let retry = ctrl.r_max.is_none() && matches!(params.decay(), Decay::Algebraic { .. });
    let mut attempts = 0;
    loop {
        match solve_at(params, ctrl, r_max)? {
            Ok(profile) => return Ok(profile),
            // Small amplitudes spread the profile beyond the default radius.
            Err(_) if retry && attempts < R_MAX_RETRIES => {
                attempts += 1;
                r_max *= 8.0;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Enlargements of the default r_max tried for algebraic tails.
const R_MAX_RETRIES: usize = 3;

/// Inner error: tail matching failed, a larger r_max may help.
fn solve_at(
    params: &ProblemParams,
    ctrl: &ShootControls,
    r_max: f64,
) -> Result<std::result::Result<RadialProfile, Error>> {
    let mut sh = Shooter {
        params,
        r_max,
        step: &ctrl.step,
        rhs_evals: 0,
        integrations: 0,
    };
    let mut diag = ShootDiagnostics {
        r_max,
        ..Default::default()
    };

    let mut state = match find_bracket(&mut sh, ctrl)? {
        Err((_, t)) => Bracket::Converged(t),
        Ok(((lo, lo_t), (hi, hi_t))) => {
            diag.bracket = (lo, hi);
            Bracket::Open {
                lo,
                lo_t,
                hi,
                hi_t,
            }
        }
    };
    state = bisect(&mut sh, state, ctrl.amp_tol, ctrl.max_iter, &mut diag)?;

    let (mut matched, mut tail_ok) = match_tail(&state, params)?;
    // Near-linear tails need the trajectories to agree further out than
    // amp_tol allows; keep bisecting toward float resolution.
    if !tail_ok && matches!(state, Bracket::Open { .. }) {
        state = bisect(&mut sh, state, 0.0, ctrl.max_iter + REFINE_ITER, &mut diag)?;
        (matched, tail_ok) = match_tail(&state, params)?;
    }
    diag.rhs_evals = sh.rhs_evals;
    diag.integrations = sh.integrations;
    let Matched {
        grid,
        tail,
        mismatch,
        residual_2x,
    } = matched;
    diag.tail_mismatch = mismatch;
    diag.tail_residual_2x = residual_2x;
    if !tail_ok {
        return Ok(Err(Error::InconsistentSolution(format!(
            "tail slope mismatch {mismatch:.2e} at r = {:e}",
            tail.match_radius
        ))));
    }

    let profile = RadialProfile {
        params: *params,
        amplitude: state.lower().amplitude,
        grid,
        tail,
        frame: (1.0, 1.0),
        diagnostics: diag,
    };
    verify_profile(&profile)?;
    Ok(Ok(profile))
}

fn verify_profile(p: &RadialProfile) -> Result<()> {
    let g = &p.grid;
    let ok = g.values.windows(2).all(|w| w[1] < w[0]) && g.values.iter().all(|&u| u > 0.0);
    if !ok {
        return Err(Error::InconsistentSolution(
            "stored profile is not positive and strictly decreasing".into(),
        ));
    }
    if p.params.family() == Family::PEps && p.amplitude > 1.0 {
        return Err(Error::InconsistentSolution(format!(
            "amplitude {} exceeds the a priori bound 1",
            p.amplitude
        )));
    }
    if !(p.tail.prefactor > 0.0) {
        return Err(Error::InconsistentSolution("non-positive tail prefactor".into()));
    }
    Ok(())
}
