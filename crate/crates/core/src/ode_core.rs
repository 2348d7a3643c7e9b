//! Radial ODE u'' + (N−1)/r u' + f(u) = 0 for each problem family, and an
//! adaptive Dormand–Prince 5(4) integrator with dense output and events.

mod params;

pub use params::{critical_exponent, regime_of, Decay, Family, Nonlinearity, ProblemParams, Regime};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// u'' at (r, u, u') for the selected family.
pub fn rhs_eval(params: &ProblemParams, r: f64, u: f64, du: f64) -> Result<f64> {
    if !(r.is_finite() && u.is_finite() && du.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input to rhs_eval".into()));
    }
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("rhs_eval needs r > 0, got {r}")));
    }
    Ok(-(params.dim() - 1.0) / r * du - params.nonlinearity().f(u))
}

/// Fourth-order Taylor data (u, u') at r0 for the regular solution with u(0) = a.
pub fn series_start(params: &ProblemParams, a: f64, r0: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude must be positive, got {a}")));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidArgument(format!("hand-off radius must be positive, got {r0}")));
    }
    Ok(series_eval(&params.nonlinearity(), params.dim(), a, r0))
}

fn series_eval(nl: &Nonlinearity, n: f64, a: f64, r: f64) -> (f64, f64) {
    let f = nl.f(a);
    let c2 = -f / (2.0 * n);
    let c4 = f * nl.df(a) / (8.0 * n * (n + 2.0));
    let r2 = r * r;
    (a + r2 * (c2 + c4 * r2), r * (2.0 * c2 + 4.0 * c4 * r2))
}

/// Hand-off radius 1e-4·max(1, L) where L is the shorter of the two local
/// curvature lengths |f(a)|^{−1/2} and |f'(a)|^{−1/2}.
pub fn handoff_radius(params: &ProblemParams, a: f64) -> f64 {
    let nl = params.nonlinearity();
    let len = nl.f(a).abs().powf(-0.5).min(nl.df(a).abs().powf(-0.5));
    let len = if len.is_finite() { len } else { 1.0 };
    1e-4 * len.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControls {
    pub atol: f64,
    pub rtol: f64,
    /// Smallest admissible step, relative to max(1, r).
    pub min_step: f64,
    pub event_tol: f64,
    pub max_steps: usize,
    /// Underflow floor as a fraction of the amplitude.
    pub underflow: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            atol: 1e-10,
            rtol: 1e-8,
            min_step: 1e-14,
            event_tol: 1e-10,
            max_steps: 2_000_000,
            underflow: 1e-14,
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.atol, self.rtol, self.min_step, self.event_tol, self.underflow];
        if pos.iter().all(|v| *v > 0.0 && v.is_finite()) && self.max_steps > 0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("step controls must be positive: {self:?}")))
        }
    }

    /// Same controls with atol and rtol scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        StepControls {
            atol: self.atol * factor,
            rtol: self.rtol * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminalEvent {
    ZeroCrossing,
    SlopeSignFlip,
    ReachedRmax,
    Underflow,
}

/// Accepted integration points with dense output between them.
///
/// `curvatures` holds u'' at each point so that the quintic Hermite interpolant
/// is fully determined by stored data and survives affine rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ProblemParams,
    pub amplitude: f64,
    /// u''(0) = −f(a)/N.
    pub origin_curvature: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub curvatures: Vec<f64>,
    pub terminal_event: TerminalEvent,
    pub terminal_radius: f64,
    pub rhs_evals: u64,
}

/// Quintic Hermite interpolant on [0, h] from value, slope and curvature at
/// both ends. Returns (value, slope) at s·h.
#[allow(clippy::too_many_arguments)]
pub fn hermite5(h: f64, y0: f64, d0: f64, c0: f64, y1: f64, d1: f64, c1: f64, s: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let g0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let g1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let g2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let g3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let g4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let g5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let hh = h * h;
    let v = y0 * h0 + h * d0 * h1 + hh * (c0 * h2 + c1 * h3) + h * d1 * h4 + y1 * h5;
    let dv = (y0 * g0 + y1 * g5) / h + d0 * g1 + d1 * g4 + h * (c0 * g2 + c1 * g3);
    (v, dv)
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn first_radius(&self) -> f64 {
        self.radii[0]
    }

    pub fn last_radius(&self) -> f64 {
        *self.radii.last().expect("trajectory is never empty")
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("trajectory is never empty")
    }

    pub fn last_slope(&self) -> f64 {
        *self.slopes.last().expect("trajectory is never empty")
    }

    /// (u, u') at radius r in [0, last_radius]; None outside.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        let last = self.last_radius();
        if !(r >= 0.0 && r <= last) {
            return None;
        }
        let r0 = self.radii[0];
        if r <= r0 {
            return Some(hermite5(
                r0,
                self.amplitude,
                0.0,
                self.origin_curvature,
                self.values[0],
                self.slopes[0],
                self.curvatures[0],
                r / r0,
            ));
        }
        let i = self.radii.partition_point(|&x| x <= r).min(self.len() - 1);
        let i = i.max(1);
        Some(self.segment_eval(i - 1, r))
    }

    /// Interpolant on [radii[i], radii[i+1]] evaluated at r.
    pub fn segment_eval(&self, i: usize, r: f64) -> (f64, f64) {
        let h = self.radii[i + 1] - self.radii[i];
        hermite5(
            h,
            self.values[i],
            self.slopes[i],
            self.curvatures[i],
            self.values[i + 1],
            self.slopes[i + 1],
            self.curvatures[i + 1],
            (r - self.radii[i]) / h,
        )
    }

    /// Reparameterize as r ↦ r/c, u ↦ k·u. Exact on stored data.
    pub fn rescaled(&self, c: f64, k: f64) -> Trajectory {
        Trajectory {
            params: self.params,
            amplitude: k * self.amplitude,
            origin_curvature: k * c * c * self.origin_curvature,
            radii: self.radii.iter().map(|r| r / c).collect(),
            values: self.values.iter().map(|u| k * u).collect(),
            slopes: self.slopes.iter().map(|d| k * c * d).collect(),
            curvatures: self.curvatures.iter().map(|x| k * c * c * x).collect(),
            terminal_event: self.terminal_event,
            terminal_radius: self.terminal_radius / c,
            rhs_evals: self.rhs_evals,
        }
    }

    /// Copy of the trajectory cut at r_end (interpolated end point), marked
    /// ReachedRmax. Curvature at the new end comes from the equation.
    pub fn truncated(&self, r_end: f64) -> Trajectory {
        if r_end >= self.last_radius() {
            return self.clone();
        }
        let k = self.radii.partition_point(|&x| x < r_end).max(1);
        let (u, du) = self.eval(r_end).expect("r_end inside trajectory");
        let mut out = Trajectory {
            radii: self.radii[..k].to_vec(),
            values: self.values[..k].to_vec(),
            slopes: self.slopes[..k].to_vec(),
            curvatures: self.curvatures[..k].to_vec(),
            terminal_event: TerminalEvent::ReachedRmax,
            terminal_radius: r_end,
            ..self.clone()
        };
        let n = self.params.dim();
        let curv = -(n - 1.0) / r_end * du - self.params.nonlinearity().f(u);
        if r_end > *out.radii.last().unwrap() {
            out.radii.push(r_end);
            out.values.push(u);
            out.slopes.push(du);
            out.curvatures.push(curv);
        }
        out
    }

    /// ½u'² + F(u) at every stored point.
    pub fn energies(&self) -> Vec<f64> {
        let nl = self.params.nonlinearity();
        self.values
            .iter()
            .zip(&self.slopes)
            .map(|(u, d)| 0.5 * d * d + nl.antiderivative(*u))
            .collect()
    }

    /// u + r u'/(N−2) at the last point; vanishes at infinity for a solution
    /// with u ~ B r^{2−N}.
    pub fn harmonic_remainder(&self) -> f64 {
        let n = self.params.dim();
        self.last_value() + self.last_radius() * self.last_slope() / (n - 2.0)
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

#[inline]
fn axpy(y: State, terms: &[(f64, State)], h: f64) -> State {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct Rhs<'a> {
    nl: &'a Nonlinearity,
    nm1: f64,
}

impl Rhs<'_> {
    #[inline]
    fn eval(&self, r: f64, y: State) -> State {
        [y[1], -self.nm1 / r * y[1] - self.nl.f(y[0])]
    }
}

/// One DP5 step. Returns (y_new, derivative at the new point, error estimate).
fn dp5_step(rhs: &Rhs, r: f64, y: State, k1: State, h: f64) -> (State, State, State) {
    let k2 = rhs.eval(r + C2 * h, axpy(y, &[(A21, k1)], h));
    let k3 = rhs.eval(r + C3 * h, axpy(y, &[(A31, k1), (A32, k2)], h));
    let k4 = rhs.eval(r + C4 * h, axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h));
    let k5 = rhs.eval(
        r + C5 * h,
        axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h),
    );
    let k6 = rhs.eval(
        r + h,
        axpy(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h),
    );
    let y_new = axpy(y, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)], h);
    let k7 = rhs.eval(r + h, y_new);
    let err = axpy(
        [0.0, 0.0],
        &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)],
        h,
    );
    (y_new, k7, err)
}

/// Bisection for the smallest s in (0, 1] with `hit(s)`, given !hit(0) and hit(1).
fn refine_event(h: f64, tol: f64, hit: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        if (hi - lo) * h <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if hit(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Integrate the regular solution with u(0) = a outward until the first event.
pub fn integrate(params: &ProblemParams, a: f64, r_max: f64, tol: &StepControls) -> Result<Trajectory> {
    tol.validate()?;
    let r0 = handoff_radius(params, a);
    let (u0, du0) = series_start(params, a, r0)?;
    if !(r_max > r0) {
        return Err(Error::InvalidArgument(format!(
            "r_max = {r_max:e} must exceed the hand-off radius {r0:e}"
        )));
    }
    let nl = params.nonlinearity();
    let n = params.dim();
    let rhs = Rhs { nl: &nl, nm1: n - 1.0 };
    let f_a = nl.f(a);

    let mut traj = Trajectory {
        params: *params,
        amplitude: a,
        origin_curvature: -f_a / n,
        radii: vec![r0],
        values: vec![u0],
        slopes: vec![du0],
        curvatures: Vec::new(),
        terminal_event: TerminalEvent::ReachedRmax,
        terminal_radius: r_max,
        rhs_evals: 1,
    };
    let mut r = r0;
    let mut y = [u0, du0];
    let mut k1 = rhs.eval(r, y);
    traj.curvatures.push(k1[1]);

    // u'' ≥ 0 at the origin: the solution starts non-decreasing and rebounds.
    if f_a <= 0.0 {
        traj.terminal_event = TerminalEvent::SlopeSignFlip;
        traj.terminal_radius = r0;
        return Ok(traj);
    }

    let floor = tol.underflow * a;
    let local_scale = (f_a / a).abs().powf(-0.5).min(r_max);
    let mut h = (1e-2 * local_scale).max(10.0 * r0).min(r_max - r0);
    let mut steps = 0usize;

    loop {
        steps += 1;
        let h_min = tol.min_step * r.max(1.0);
        if steps > tol.max_steps || h < h_min {
            traj.terminal_radius = r;
            return Err(Error::IntegrationFailure {
                radius: r,
                step: h,
                partial: Box::new(traj),
            });
        }
        let last = r + h >= r_max;
        let h_try = if last { r_max - r } else { h };
        let (y_new, k7, e) = dp5_step(&rhs, r, y, k1, h_try);
        traj.rhs_evals += 6;

        let err = if y_new.iter().chain(&k7).all(|v| v.is_finite()) {
            let s0 = tol.atol + tol.rtol * y[0].abs().max(y_new[0].abs());
            let s1 = tol.atol + tol.rtol * y[1].abs().max(y_new[1].abs());
            (e[0] / s0).abs().max((e[1] / s1).abs())
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            let r_new = if last { r_max } else { r + h_try };
            let seg = |s: f64| hermite5(h_try, y[0], y[1], k1[1], y_new[0], y_new[1], k7[1], s);

            let mut event: Option<(f64, TerminalEvent)> = None;
            let mut consider = |s: f64, ev: TerminalEvent| {
                if event.is_none_or(|(s0, _)| s < s0) {
                    event = Some((s, ev));
                }
            };
            if y_new[0] <= 0.0 {
                consider(refine_event(h_try, tol.event_tol, |s| seg(s).0 <= 0.0), TerminalEvent::ZeroCrossing);
            }
            if y[1] < 0.0 && y_new[1] >= 0.0 {
                consider(refine_event(h_try, tol.event_tol, |s| seg(s).1 >= 0.0), TerminalEvent::SlopeSignFlip);
            }
            // Only a decaying exponential tail counts; an overshoot also passes
            // the floor on its way to zero, but with a much steeper slope.
            let tail_like = y_new[0] > 0.0 && -y_new[1] <= 2.0 * nl.mass.sqrt() * y_new[0];
            if y_new[0] < floor && y_new[1] < 0.0 && y[0] >= floor && tail_like {
                consider(refine_event(h_try, tol.event_tol, |s| seg(s).0 < floor), TerminalEvent::Underflow);
            }

            if let Some((s, ev)) = event {
                let (u_e, du_e) = seg(s);
                let r_e = r + s * h_try;
                let r_e = if s >= 1.0 { r_new } else { r_e };
                traj.radii.push(r_e);
                traj.values.push(u_e);
                traj.slopes.push(du_e);
                traj.curvatures.push(rhs.eval(r_e, [u_e, du_e])[1]);
                traj.rhs_evals += 1;
                traj.terminal_event = ev;
                traj.terminal_radius = r_e;
                return Ok(traj);
            }

            traj.radii.push(r_new);
            traj.values.push(y_new[0]);
            traj.slopes.push(y_new[1]);
            traj.curvatures.push(k7[1]);
            r = r_new;
            y = y_new;
            k1 = k7;
            if last {
                traj.terminal_event = TerminalEvent::ReachedRmax;
                traj.terminal_radius = r_max;
                return Ok(traj);
            }
        }

        let factor = if err == 0.0 {
            5.0
        } else if err.is_finite() {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.2
        };
        let factor = if err > 1.0 { factor.min(1.0) } else { factor };
        h = h_try * factor;
    }
}
