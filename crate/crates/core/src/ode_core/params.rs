use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which radial equation is integrated.
///
/// * `PEps`  : −Δu + εu − u^{p−1} + u^{q−1} = 0
/// * `PZero` : the ε = 0 limit of `PEps`, p > p*
/// * `REps`  : −Δv + v = v^{p−1} − ε^{(q−p)/(p−2)} v^{q−1} (canonical rescaling)
/// * `RZero` : −Δv + v = v^{p−1}, p < p*
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "P_eps")]
    PEps,
    #[serde(rename = "P_zero")]
    PZero,
    #[serde(rename = "R_zero")]
    RZero,
    #[serde(rename = "R_eps")]
    REps,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::PEps => "P_eps",
            Family::PZero => "P_zero",
            Family::RZero => "R_zero",
            Family::REps => "R_eps",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P_eps" | "p_eps" | "peps" => Ok(Family::PEps),
            "P_zero" | "p_zero" | "pzero" => Ok(Family::PZero),
            "R_zero" | "r_zero" | "rzero" => Ok(Family::RZero),
            "R_eps" | "r_eps" | "reps" => Ok(Family::REps),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }
}

/// Position of p relative to the critical Sobolev exponent p* = 2N/(N−2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Relative tolerance used to decide p == p*.
const CRITICAL_TOL: f64 = 1e-12;

pub fn critical_exponent(n: u32) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

pub fn regime_of(n: u32, p: f64) -> Regime {
    let ps = critical_exponent(n);
    if ((p - ps) / ps).abs() <= CRITICAL_TOL {
        Regime::Critical
    } else if p < ps {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// Decay law of a ground state at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decay {
    /// u ~ C r^{−(N−1)/2} e^{−rate·r}
    Exponential { rate: f64 },
    /// u ~ C r^{−power}, power = N − 2
    Algebraic { power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ProblemParams {
    n: u32,
    p: f64,
    q: f64,
    eps: f64,
    family: Family,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: u32,
    p: f64,
    q: f64,
    eps: f64,
    family: Family,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ProblemParams::new(raw.family, raw.n, raw.p, raw.q, raw.eps)
    }
}

impl From<ProblemParams> for RawParams {
    fn from(p: ProblemParams) -> Self {
        RawParams {
            n: p.n,
            p: p.p,
            q: p.q,
            eps: p.eps,
            family: p.family,
        }
    }
}

impl ProblemParams {
    pub fn new(family: Family, n: u32, p: f64, q: f64, eps: f64) -> Result<Self> {
        if ![p, q, eps].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!("dimension N = {n} < 3")));
        }
        if !(p > 2.0 && q > p) {
            return Err(Error::InvalidArgument(format!(
                "exponents must satisfy q > p > 2 (p = {p}, q = {q})"
            )));
        }
        if eps < 0.0 {
            return Err(Error::InvalidArgument(format!("eps = {eps} < 0")));
        }
        let ps = critical_exponent(n);
        match family {
            Family::PZero => {
                if eps != 0.0 {
                    return Err(Error::InvalidArgument("family P_zero requires eps = 0".into()));
                }
                if regime_of(n, p) != Regime::Supercritical {
                    return Err(Error::InvalidArgument(format!(
                        "family P_zero requires p > p* = {ps}"
                    )));
                }
            }
            Family::RZero => {
                if eps != 0.0 {
                    return Err(Error::InvalidArgument("family R_zero requires eps = 0".into()));
                }
                if regime_of(n, p) != Regime::Subcritical {
                    return Err(Error::InvalidArgument(format!(
                        "family R_zero requires p < p* = {ps}"
                    )));
                }
            }
            Family::REps => {
                if eps <= 0.0 {
                    return Err(Error::InvalidArgument("family R_eps requires eps > 0".into()));
                }
            }
            Family::PEps => {}
        }
        Ok(ProblemParams {
            n,
            p,
            q,
            eps,
            family,
        })
    }

    /// Original problem at p = p*(N).
    pub fn critical(n: u32, q: f64, eps: f64) -> Result<Self> {
        Self::new(Family::PEps, n, critical_exponent(n), q, eps)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn p_star(&self) -> f64 {
        critical_exponent(self.n)
    }

    pub fn regime(&self) -> Regime {
        regime_of(self.n, self.p)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.family, self.n, self.p, self.q, eps)
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        let (coef_q, mass) = match self.family {
            Family::PEps | Family::PZero => (1.0, self.eps),
            Family::RZero => (0.0, 1.0),
            Family::REps => (self.eps.powf((self.q - self.p) / (self.p - 2.0)), 1.0),
        };
        Nonlinearity {
            p: self.p,
            q: self.q,
            coef_p: 1.0,
            coef_q,
            mass,
        }
    }

    pub fn decay(&self) -> Decay {
        match self.family {
            Family::PEps if self.eps > 0.0 => Decay::Exponential {
                rate: self.eps.sqrt(),
            },
            Family::PEps | Family::PZero => Decay::Algebraic {
                power: self.dim() - 2.0,
            },
            Family::RZero | Family::REps => Decay::Exponential { rate: 1.0 },
        }
    }
}

impl fmt::Display for ProblemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (N={}, p={}, q={}, eps={:e})",
            self.family, self.n, self.p, self.q, self.eps
        )
    }
}

/// f(u) = coef_p |u|^{p−2}u − coef_q |u|^{q−2}u − mass·u, so that the radial
/// equation reads u'' + (N−1)/r u' + f(u) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub p: f64,
    pub q: f64,
    pub coef_p: f64,
    pub coef_q: f64,
    pub mass: f64,
}

fn signed_pow(u: f64, e: f64) -> f64 {
    u.abs().powf(e).copysign(u)
}

impl Nonlinearity {
    /// Pure critical power −ΔU = U^{p*−1}.
    pub fn emden_fowler(n: u32) -> Self {
        let ps = critical_exponent(n);
        Nonlinearity {
            p: ps,
            q: ps + 1.0,
            coef_p: 1.0,
            coef_q: 0.0,
            mass: 0.0,
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        let mut v = self.coef_p * signed_pow(u, self.p - 1.0) - self.mass * u;
        if self.coef_q != 0.0 {
            v -= self.coef_q * signed_pow(u, self.q - 1.0);
        }
        v
    }

    pub fn df(&self, u: f64) -> f64 {
        let a = u.abs();
        let mut v = self.coef_p * (self.p - 1.0) * a.powf(self.p - 2.0) - self.mass;
        if self.coef_q != 0.0 {
            v -= self.coef_q * (self.q - 1.0) * a.powf(self.q - 2.0);
        }
        v
    }

    /// F(u) = ∫₀ᵘ f.
    pub fn antiderivative(&self, u: f64) -> f64 {
        let a = u.abs();
        let mut v = self.coef_p * a.powf(self.p) / self.p - 0.5 * self.mass * u * u;
        if self.coef_q != 0.0 {
            v -= self.coef_q * a.powf(self.q) / self.q;
        }
        v
    }

    /// f(u)/u for u > 0.
    pub fn ratio(&self, u: f64) -> f64 {
        let mut v = self.coef_p * u.powf(self.p - 2.0) - self.mass;
        if self.coef_q != 0.0 {
            v -= self.coef_q * u.powf(self.q - 2.0);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ProblemParams::new(Family::PEps, 2, 3.0, 4.0, 0.1).is_err());
        assert!(ProblemParams::new(Family::PEps, 3, 4.0, 4.0, 0.1).is_err());
        assert!(ProblemParams::new(Family::PEps, 3, 2.0, 4.0, 0.1).is_err());
        assert!(ProblemParams::new(Family::PEps, 3, 4.0, 6.0, -0.1).is_err());
        assert!(ProblemParams::new(Family::PZero, 3, 4.0, 6.0, 0.0).is_err());
        assert!(ProblemParams::new(Family::PZero, 3, 8.0, 12.0, 0.1).is_err());
        assert!(ProblemParams::new(Family::PZero, 3, 8.0, 12.0, 0.0).is_ok());
        assert!(ProblemParams::new(Family::RZero, 3, 6.0, 8.0, 0.0).is_err());
        assert!(ProblemParams::new(Family::RZero, 3, 4.0, 6.0, 0.0).is_ok());
        assert!(ProblemParams::new(Family::PEps, 3, f64::NAN, 6.0, 0.0).is_err());
    }

    #[test]
    fn p_star_and_regime() {
        let p = ProblemParams::critical(5, 6.0, 1e-3).unwrap();
        assert_eq!(p.p_star(), 10.0 / 3.0);
        assert_eq!(p.regime(), Regime::Critical);
        assert_eq!(regime_of(3, 4.0), Regime::Subcritical);
        assert_eq!(regime_of(3, 8.0), Regime::Supercritical);
    }

    #[test]
    fn serde_validates() {
        let p = ProblemParams::new(Family::PEps, 3, 4.0, 6.0, 0.1).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: ProblemParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let bad = s.replace("\"n\":3", "\"n\":2");
        assert!(serde_json::from_str::<ProblemParams>(&bad).is_err());
    }

    #[test]
    fn antiderivative_matches_nonlinearity() {
        let nl = ProblemParams::new(Family::PEps, 5, 10.0 / 3.0, 6.0, 0.01)
            .unwrap()
            .nonlinearity();
        let h = 1e-6;
        for &u in &[0.1, 0.4, 0.8] {
            let fd = (nl.antiderivative(u + h) - nl.antiderivative(u - h)) / (2.0 * h);
            assert!((fd - nl.f(u)).abs() < 1e-8);
            let fd2 = (nl.f(u + h) - nl.f(u - h)) / (2.0 * h);
            assert!((fd2 - nl.df(u)).abs() < 1e-7);
        }
    }
}
