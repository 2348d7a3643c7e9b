//! Closed-form Emden–Fowler (Aubin–Talenti) profiles and the Sobolev
//! constants they realise.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{ball_mass, dirichlet_norm, radial_norm, RadialFunction};
use crate::ode_core::critical_exponent;
use crate::quadrature::gl16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EfFrame {
    /// U_λ, solving −ΔU = U^{p*−1}.
    U,
    /// W_λ(x) = U_λ(√S*·x), normalised in L^{p*}.
    W,
}

/// U₁(r) = (1 + r²/(N(N−2)))^{−(N−2)/2}.
pub fn u1(n: u32, r: f64) -> f64 {
    let nf = n as f64;
    (1.0 + r * r / (nf * (nf - 2.0))).powf(-(nf - 2.0) / 2.0)
}

fn u1_slope(n: u32, r: f64) -> f64 {
    let nf = n as f64;
    let c = nf * (nf - 2.0);
    -(nf - 2.0) / c * r * (1.0 + r * r / c).powf(-nf / 2.0)
}

/// U_λ(r) = λ^{−(N−2)/2} U₁(r/λ).
pub fn eval_u(n: u32, lambda: f64, r: f64) -> f64 {
    lambda.powf(-(n as f64 - 2.0) / 2.0) * u1(n, r / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdenFowlerProfile {
    pub n: u32,
    pub lambda: f64,
    pub frame: EfFrame,
    /// S*, needed for the W frame.
    pub s_star: f64,
}

impl EmdenFowlerProfile {
    pub fn new(n: u32, lambda: f64, frame: EfFrame) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("dimension N = {n} < 3")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        let s_star = sobolev_constant(n)?;
        Ok(EmdenFowlerProfile {
            n,
            lambda,
            frame,
            s_star,
        })
    }

    /// U_λ without computing S*.
    fn bare_u(n: u32, lambda: f64) -> Self {
        EmdenFowlerProfile {
            n,
            lambda,
            frame: EfFrame::U,
            s_star: f64::NAN,
        }
    }

    /// Radial stretch c with profile(r) = λ^{−(N−2)/2} U₁(c·r/λ).
    fn stretch(&self) -> f64 {
        match self.frame {
            EfFrame::U => 1.0,
            EfFrame::W => self.s_star.sqrt(),
        }
    }

    fn height(&self) -> f64 {
        self.lambda.powf(-(self.n as f64 - 2.0) / 2.0)
    }

    /// Natural length b with 1 + (c r/λ)²/(N(N−2)) = 1 + (r/b)².
    fn length(&self) -> f64 {
        let nf = self.n as f64;
        self.lambda * (nf * (nf - 2.0)).sqrt() / self.stretch()
    }
}

impl RadialFunction for EmdenFowlerProfile {
    fn dim(&self) -> u32 {
        self.n
    }

    fn value(&self, r: f64) -> f64 {
        self.height() * u1(self.n, self.stretch() * r / self.lambda)
    }

    fn slope(&self, r: f64) -> f64 {
        let c = self.stretch() / self.lambda;
        self.height() * c * u1_slope(self.n, c * r)
    }

    fn algebraic_power(&self) -> Option<f64> {
        Some(self.n as f64 - 2.0)
    }

    /// Substitution r = b·tan θ, composite 16-point panels on [θ_a, θ_b]
    /// graded geometrically toward π/2.
    fn integrate_range(&self, a: f64, b: f64, g: &mut dyn FnMut(f64, f64, f64) -> f64) -> f64 {
        let len = self.length();
        let ta = (a / len).atan();
        let tb = if b.is_finite() { (b / len).atan() } else { FRAC_PI_2 };
        if tb <= ta {
            return 0.0;
        }
        let rule = gl16();
        let mut f = |t: f64| {
            let r = len * t.tan();
            let sec2 = 1.0 / t.cos().powi(2);
            g(r, self.value(r), self.slope(r)) * len * sec2
        };
        let mut total = 0.0;
        // Breakpoints π/2 − (π/2)·2^{−k}, clipped to [θ_a, θ_b].
        let mut lo = ta;
        for k in 1..=64 {
            let bp = FRAC_PI_2 - FRAC_PI_2 * 0.5f64.powi(k);
            if bp <= lo {
                continue;
            }
            let hi = bp.min(tb);
            for j in 0..4 {
                let l = lo + (hi - lo) * j as f64 / 4.0;
                let h = lo + (hi - lo) * (j + 1) as f64 / 4.0;
                total += rule.integrate(l, h, &mut f);
            }
            lo = hi;
            if lo >= tb {
                break;
            }
        }
        total
    }
}

/// Both quadrature routes to S*: (‖∇U₁‖₂²)^{2/N} and (‖U₁‖ₚᵖ)^{2/N}.
pub fn sobolev_constant_routes(n: u32) -> Result<(f64, f64)> {
    sobolev_routes_at(n, 1.0)
}

fn sobolev_routes_at(n: u32, lambda: f64) -> Result<(f64, f64)> {
    let u = EmdenFowlerProfile::bare_u(n, lambda);
    let e = 2.0 / n as f64;
    let d = dirichlet_norm(&u)?.powf(e);
    let l = radial_norm(&u, critical_exponent(n))?.powf(e);
    Ok((d, l))
}

/// Best Sobolev constant S* in dimension N.
pub fn sobolev_constant(n: u32) -> Result<f64> {
    sobolev_constant_at(n, 1.0)
}

/// S* computed from U_λ; independent of λ.
pub fn sobolev_constant_at(n: u32, lambda: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("dimension N = {n} < 3")));
    }
    let (d, l) = sobolev_routes_at(n, lambda)?;
    let rel = ((d - l) / d).abs();
    if rel > 1e-6 {
        return Err(Error::InternalConsistency(format!(
            "Sobolev constant routes disagree: {d} vs {l} (relative {rel:e})"
        )));
    }
    Ok(d)
}

/// Q₀(λ) = ∫_{B₁}|W_λ|^{p*}.
pub fn q0(n: u32, lambda: f64) -> Result<f64> {
    let w = EmdenFowlerProfile::new(n, lambda, EfFrame::W)?;
    Ok(ball_mass(&w, critical_exponent(n), 1.0))
}

/// Q* = Q₀(1).
pub fn q_star(n: u32) -> Result<f64> {
    q0(n, 1.0)
}
