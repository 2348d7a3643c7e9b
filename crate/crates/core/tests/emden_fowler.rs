use std::f64::consts::PI;

use gslab_core::emden_fowler::{
    eval_u, q0, q_star, sobolev_constant, sobolev_constant_at, sobolev_constant_routes, u1, EfFrame,
    EmdenFowlerProfile,
};
use gslab_core::functionals::{ball_mass, dirichlet_norm, radial_norm, RadialFunction};
use gslab_core::ode_core::critical_exponent;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

/// S* = πN(N−2)(Γ(N/2)/Γ(N))^{2/N}.
fn s_star_closed(n: u32) -> f64 {
    let nf = n as f64;
    PI * nf * (nf - 2.0) * (gamma(nf / 2.0) / gamma(nf)).powf(2.0 / nf)
}

/// Composite Simpson for ∫₀^ρ |W₁|^{p*} r^{N−1} dr times the sphere area.
fn q_star_simpson(n: u32) -> f64 {
    let w = EmdenFowlerProfile::new(n, 1.0, EfFrame::W).unwrap();
    let ps = critical_exponent(n);
    let m = 200_000;
    let h = 1.0 / m as f64;
    let mut s = 0.0;
    for i in 0..=m {
        let r = i as f64 * h;
        let wt = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        s += wt * w.value(r).powf(ps) * r.powi(n as i32 - 1);
    }
    let nf = n as f64;
    let area = 2.0 * PI.powf(nf / 2.0) / gamma(nf / 2.0);
    area * s * h / 3.0
}

#[test]
fn sobolev_constant_matches_gamma_formula() {
    for n in 3..=8 {
        let want = s_star_closed(n);
        let (d, l) = sobolev_constant_routes(n).unwrap();
        assert!((d - want).abs() < 1e-10 * want, "N={n}: {d} vs {want}");
        assert!((l - want).abs() < 1e-10 * want, "N={n}: {l} vs {want}");
    }
}

#[test]
fn u1_reference_values() {
    assert_eq!(u1(3, 0.0), 1.0);
    assert!((u1(4, 8f64.sqrt()) - 0.5).abs() < 1e-15);
    assert!((eval_u(3, 4.0, 0.0) - 0.5).abs() < 1e-15);
}

#[test]
fn w1_has_unit_critical_norm() {
    for n in 3..=6 {
        let w = EmdenFowlerProfile::new(n, 1.0, EfFrame::W).unwrap();
        let ps = critical_exponent(n);
        assert!((radial_norm(&w, ps).unwrap() - 1.0).abs() < 1e-12);
        let s = sobolev_constant(n).unwrap();
        assert!((dirichlet_norm(&w).unwrap() - s).abs() < 1e-10 * s);
    }
}

#[test]
fn q_star_matches_simpson_oracle() {
    for n in 3..=6 {
        let q = q_star(n).unwrap();
        let oracle = q_star_simpson(n);
        assert!((q - oracle).abs() < 1e-9, "N={n}: {q} vs {oracle}");
        assert!(q > 0.0 && q < 1.0);
    }
}

#[test]
fn l2_norm_finite_only_from_dimension_five() {
    for n in [3, 4] {
        let w = EmdenFowlerProfile::new(n, 1.0, EfFrame::W).unwrap();
        assert!(radial_norm(&w, 2.0).is_err());
    }
    let w = EmdenFowlerProfile::new(5, 1.0, EfFrame::W).unwrap();
    assert!(radial_norm(&w, 2.0).unwrap().is_finite());
}

#[test]
fn invalid_inputs() {
    assert!(EmdenFowlerProfile::new(2, 1.0, EfFrame::U).is_err());
    assert!(EmdenFowlerProfile::new(3, 0.0, EfFrame::U).is_err());
    assert!(sobolev_constant(2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sobolev_constant_independent_of_lambda(n in 3u32..7, lam in 0.01f64..100.0) {
        let s = sobolev_constant_at(n, lam).unwrap();
        prop_assert!((s - s_star_closed(n)).abs() < 1e-9 * s);
    }

    /// ∫_{B₁}|W_λ|^{p*} = ∫_{B_{1/λ}}|W₁|^{p*}, decreasing in λ.
    #[test]
    fn concentration_mass_scales(n in 3u32..7, lam in 0.1f64..10.0) {
        let w1 = EmdenFowlerProfile::new(n, 1.0, EfFrame::W).unwrap();
        let ps = critical_exponent(n);
        let a = q0(n, lam).unwrap();
        let b = ball_mass(&w1, ps, 1.0 / lam);
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!(q0(n, 1.1 * lam).unwrap() < a);
    }
}
