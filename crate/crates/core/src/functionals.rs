//! Norms, energy, variational level and the Nehari / Pokhozhaev identities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode_core::{Family, Nonlinearity, ProblemParams, Regime};
use crate::quadrature::{adaptive, gauss8, semi_infinite, sphere_area};
use crate::shooting::{RadialProfile, TailKind};

const TAIL_TOL: f64 = 1e-13;

/// A radial function on ℝᴺ that can be integrated against r^{N−1}.
pub trait RadialFunction {
    fn dim(&self) -> u32;
    fn value(&self, r: f64) -> f64;
    fn slope(&self, r: f64) -> f64;
    /// Decay power when u ~ C r^{−power} at infinity.
    fn algebraic_power(&self) -> Option<f64>;
    /// ∫_a^b g(r, u(r), u'(r)) dr; `b` may be infinite. No angular factor and
    /// no r^{N−1} weight.
    fn integrate_range(&self, a: f64, b: f64, g: &mut dyn FnMut(f64, f64, f64) -> f64) -> f64;
}

impl RadialFunction for RadialProfile {
    fn dim(&self) -> u32 {
        self.params.n()
    }

    fn value(&self, r: f64) -> f64 {
        RadialProfile::value(self, r)
    }

    fn slope(&self, r: f64) -> f64 {
        RadialProfile::slope(self, r)
    }

    fn algebraic_power(&self) -> Option<f64> {
        match self.tail.kind {
            TailKind::Algebraic => Some(self.tail.rate_or_power),
            TailKind::Exponential => None,
        }
    }

    fn integrate_range(&self, a: f64, b: f64, g: &mut dyn FnMut(f64, f64, f64) -> f64) -> f64 {
        let grid = &self.grid;
        let rm = self.tail.match_radius;
        let mut total = 0.0;
        let hi = b.min(rm);
        if a < hi {
            let r0 = grid.radii[0];
            if a < r0 {
                total += gauss8(a, hi.min(r0), |r| {
                    let (u, du) = grid.eval(r).expect("inside grid");
                    g(r, u, du)
                });
            }
            let start = grid.radii.partition_point(|&x| x <= a).saturating_sub(1);
            for i in start..grid.len() - 1 {
                let (l, rgt) = (grid.radii[i].max(a), grid.radii[i + 1].min(hi));
                if rgt <= l {
                    if grid.radii[i] >= hi {
                        break;
                    }
                    continue;
                }
                total += gauss8(l, rgt, |r| {
                    let (u, du) = grid.segment_eval(i, r);
                    g(r, u, du)
                });
            }
        }
        let lo = a.max(rm);
        if lo < b {
            let tail = &self.tail;
            let mut f = |r: f64| g(r, tail.value(r), tail.slope(r));
            total += if b.is_finite() {
                adaptive(lo, b, TAIL_TOL, &mut f)
            } else {
                semi_infinite(lo, TAIL_TOL, &mut f)
            };
        }
        total
    }
}

/// ∫ |u|^s over ℝᴺ.
pub fn radial_norm(u: &dyn RadialFunction, s: f64) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm exponent {s} < 1")));
    }
    let n = u.dim();
    let nf = n as f64;
    if let Some(power) = u.algebraic_power() {
        if s * power <= nf {
            return Err(Error::Divergent {
                exponent: s,
                power,
                dim: n,
            });
        }
    }
    let w = nf - 1.0;
    Ok(sphere_area(n) * u.integrate_range(0.0, f64::INFINITY, &mut |r, v, _| v.abs().powf(s) * r.powf(w)))
}

/// ‖∇u‖₂².
pub fn dirichlet_norm(u: &dyn RadialFunction) -> Result<f64> {
    let n = u.dim();
    let nf = n as f64;
    if let Some(power) = u.algebraic_power() {
        if 2.0 * (power + 1.0) <= nf {
            return Err(Error::Divergent {
                exponent: 2.0,
                power: power + 1.0,
                dim: n,
            });
        }
    }
    let w = nf - 1.0;
    Ok(sphere_area(n) * u.integrate_range(0.0, f64::INFINITY, &mut |r, _, du| du * du * r.powf(w)))
}

/// ∫_{B_ρ} |u|^s.
pub fn ball_mass(u: &dyn RadialFunction, s: f64, rho: f64) -> f64 {
    let n = u.dim();
    let w = n as f64 - 1.0;
    sphere_area(n) * u.integrate_range(0.0, rho, &mut |r, v, _| v.abs().powf(s) * r.powf(w))
}

/// The four integrals entering the energy. `l2` is None when ∫u² diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: Option<f64>,
    pub lp: f64,
    pub lq: f64,
    pub dirichlet: f64,
}

impl Norms {
    pub fn compute(u: &dyn RadialFunction, p: f64, q: f64) -> Result<Norms> {
        let l2 = match radial_norm(u, 2.0) {
            Ok(v) => Some(v),
            Err(Error::Divergent { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Norms {
            l2,
            lp: radial_norm(u, p)?,
            lq: radial_norm(u, q)?,
            dirichlet: dirichlet_norm(u)?,
        })
    }

    /// m·∫u², zero when m = 0 regardless of convergence.
    fn mass_term(&self, m: f64) -> Result<f64> {
        if m == 0.0 {
            return Ok(0.0);
        }
        self.l2
            .map(|v| m * v)
            .ok_or_else(|| Error::InconsistentSolution("L2 norm diverges with a mass term".into()))
    }
}

/// E = ½‖∇u‖² + (m/2)‖u‖₂² − c_p‖u‖ₚᵖ/p + c_q‖u‖_q^q/q.
pub fn energy(nl: &Nonlinearity, norms: &Norms) -> Result<f64> {
    Ok(0.5 * norms.dirichlet + 0.5 * norms.mass_term(nl.mass)? - nl.coef_p * norms.lp / nl.p
        + nl.coef_q * norms.lq / nl.q)
}

/// Signed relative residuals (Nehari, Pokhozhaev):
/// ‖∇u‖² = ∫f(u)u and ‖∇u‖² = p*∫F(u).
pub fn identity_residuals(nl: &Nonlinearity, p_star: f64, norms: &Norms) -> Result<(f64, f64)> {
    let d = norms.dirichlet;
    if d == 0.0 {
        return Ok((0.0, 0.0));
    }
    let m = norms.mass_term(nl.mass)?;
    let nehari = nl.coef_p * norms.lp - nl.coef_q * norms.lq - m;
    let pokh = p_star * (nl.coef_p * norms.lp / nl.p - nl.coef_q * norms.lq / nl.q - 0.5 * m);
    Ok(((d - nehari) / d, (d - pokh) / d))
}

/// S from E = (½ − 1/p*) S^{N/2}.
pub fn extract_level(energy: f64, n: u32) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::InconsistentSolution(format!("non-positive energy {energy:e}")));
    }
    let p_star = crate::ode_core::critical_exponent(n);
    Ok((energy / (0.5 - 1.0 / p_star)).powf(2.0 / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSolution {
    pub profile: RadialProfile,
    pub norm_l2_sq: Option<f64>,
    pub norm_lp_p: f64,
    pub norm_lq_q: f64,
    pub dirichlet_sq: f64,
    pub energy: f64,
    pub level_s: f64,
    pub nehari_residual: f64,
    pub pokhozhaev_residual: f64,
}

impl GroundStateSolution {
    pub fn from_profile(profile: RadialProfile) -> Result<Self> {
        let params = profile.params;
        let nl = params.nonlinearity();
        let norms = Norms::compute(&profile, params.p(), params.q())?;
        let energy = energy(&nl, &norms)?;
        let (nehari, pokh) = identity_residuals(&nl, params.p_star(), &norms)?;
        let level_s = extract_level(energy, params.n())?;
        Ok(GroundStateSolution {
            profile,
            norm_l2_sq: norms.l2,
            norm_lp_p: norms.lp,
            norm_lq_q: norms.lq,
            dirichlet_sq: norms.dirichlet,
            energy,
            level_s,
            nehari_residual: nehari,
            pokhozhaev_residual: pokh,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.profile.params
    }

    pub fn norms(&self) -> Norms {
        Norms {
            l2: self.norm_l2_sq,
            lp: self.norm_lp_p,
            lq: self.norm_lq_q,
            dirichlet: self.dirichlet_sq,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.nehari_residual.abs().max(self.pokhozhaev_residual.abs())
    }

    pub fn identities_hold(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }

    /// σ = S − S* for the critical family.
    pub fn sigma(&self, s_star: f64) -> f64 {
        self.level_s - s_star
    }
}

/// w(y) = u(√S·y).
pub fn to_minimizer_frame(u: &RadialProfile, s: f64) -> Result<RadialProfile> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("level must be positive, got {s}")));
    }
    Ok(u.rescaled(s.sqrt(), 1.0))
}

/// p*∫F(w) in the minimizer frame; None when the amplitude exceeds 1, where
/// the bounded truncation of the nonlinearity would no longer coincide with it.
pub fn minimizer_constraint(w: &RadialProfile, norms: &Norms) -> Result<Option<f64>> {
    if w.amplitude > 1.0 {
        return Ok(None);
    }
    let nl = w.params.nonlinearity();
    let m = norms.mass_term(nl.mass)?;
    Ok(Some(
        w.params.p_star() * (nl.coef_p * norms.lp / nl.p - nl.coef_q * norms.lq / nl.q - 0.5 * m),
    ))
}

pub fn kappa(p: f64, q: f64) -> f64 {
    q * (p - 2.0) / (2.0 * (q - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub kappa: f64,
    /// ‖w‖_q^q against κ ε ‖w‖₂².
    pub lq: f64,
    pub kappa_eps_l2: f64,
    /// ‖w‖ₚᵖ against 1 + (κ+1) ε ‖w‖₂².
    pub lp: f64,
    pub one_plus: f64,
    pub residual_q: f64,
    pub residual_p: f64,
}

/// ‖w‖_q^q = κε‖w‖₂² and ‖w‖ₚᵖ = 1 + (κ+1)ε‖w‖₂² in the minimizer frame at p = p*.
pub fn kappa_identities(w: &RadialProfile, eps: f64) -> Result<KappaReport> {
    let params = &w.params;
    if params.family() != Family::PEps || params.regime() != Regime::Critical {
        return Err(Error::InvalidArgument(
            "kappa identities need the critical P_eps family".into(),
        ));
    }
    let norms = Norms::compute(w, params.p(), params.q())?;
    let l2 = norms
        .l2
        .ok_or_else(|| Error::InconsistentSolution("L2 norm diverges".into()))?;
    let k = kappa(params.p(), params.q());
    let kappa_eps_l2 = k * eps * l2;
    let one_plus = 1.0 + (k + 1.0) * eps * l2;
    Ok(KappaReport {
        kappa: k,
        lq: norms.lq,
        kappa_eps_l2,
        lp: norms.lp,
        one_plus,
        residual_q: (norms.lq - kappa_eps_l2) / kappa_eps_l2,
        residual_p: (norms.lp - one_plus) / one_plus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    pub name: String,
    pub computed: f64,
    pub closed_form: f64,
    pub residual: f64,
}

fn entry(name: &str, computed: f64, closed_form: f64) -> LimitEntry {
    LimitEntry {
        name: name.into(),
        computed,
        closed_form,
        residual: (computed - closed_form) / closed_form,
    }
}

/// Closed-form norms of the ε = 0 limit profile in its minimizer frame.
///
/// P_zero: ‖w₀‖ₚᵖ = (q−p*)p/((q−p)p*), ‖w₀‖_q^q = (p−p*)q/((q−p)p*).
/// R_zero: ‖w‖₂² = 2(p*−p)/(p*(p−2)), ‖w‖ₚᵖ = (p*−2)p/((p−2)p*).
pub fn limit_identities(w0: &RadialProfile) -> Result<Vec<LimitEntry>> {
    let params = &w0.params;
    let (p, q, ps) = (params.p(), params.q(), params.p_star());
    let norms = Norms::compute(w0, p, q)?;
    match params.family() {
        Family::PZero => Ok(vec![
            entry("Lp_p", norms.lp, (q - ps) * p / ((q - p) * ps)),
            entry("Lq_q", norms.lq, (p - ps) * q / ((q - p) * ps)),
        ]),
        Family::RZero => {
            let l2 = norms
                .l2
                .ok_or_else(|| Error::InconsistentSolution("L2 norm diverges".into()))?;
            Ok(vec![
                entry("L2_2", l2, 2.0 * (ps - p) / (ps * (p - 2.0))),
                entry("Lp_p", norms.lp, (ps - 2.0) * p / ((p - 2.0) * ps)),
            ])
        }
        f => Err(Error::InvalidArgument(format!("limit identities need P_zero or R_zero, got {f}"))),
    }
}
