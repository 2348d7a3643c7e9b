use gslab_core::ode_core::{
    handoff_radius, integrate, rhs_eval, series_start, Family, ProblemParams, StepControls, TerminalEvent,
};
use gslab_core::Error;
use proptest::prelude::*;

/// Fixed-step RK4 for u'' = −(N−1)/r u' − f(u), started from the two-term series.
fn rk4(n: f64, f: impl Fn(f64) -> f64, a: f64, r_end: f64, h: f64) -> Vec<(f64, f64, f64)> {
    let r0 = 1e-3;
    let c2 = -f(a) / (2.0 * n);
    let mut y = (a + c2 * r0 * r0, 2.0 * c2 * r0);
    let mut r = r0;
    let acc = |r: f64, y: (f64, f64)| -(n - 1.0) / r * y.1 - f(y.0);
    let mut out = vec![(r, y.0, y.1)];
    while r < r_end - 1e-12 {
        let k1 = (y.1, acc(r, y));
        let y2 = (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1);
        let k2 = (y2.1, acc(r + 0.5 * h, y2));
        let y3 = (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1);
        let k3 = (y3.1, acc(r + 0.5 * h, y3));
        let y4 = (y.0 + h * k3.0, y.1 + h * k3.1);
        let k4 = (y4.1, acc(r + h, y4));
        y.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        r += h;
        out.push((r, y.0, y.1));
    }
    out
}

#[test]
fn rhs_matches_hand_evaluation() {
    let p = ProblemParams::new(Family::PEps, 3, 4.0, 6.0, 0.1).unwrap();
    // −(2/1)·(−0.5) − (0.5³ − 0.5⁵ − 0.1·0.5)
    let expected = 1.0 - (0.125 - 0.03125 - 0.05);
    assert!((rhs_eval(&p, 1.0, 0.5, -0.5).unwrap() - expected).abs() < 1e-15);
    assert!(matches!(rhs_eval(&p, 0.0, 0.5, 0.0), Err(Error::InvalidArgument(_))));
    assert!(rhs_eval(&p, 1.0, f64::NAN, 0.0).is_err());
}

#[test]
fn series_matches_taylor_coefficients() {
    let p = ProblemParams::new(Family::REps, 4, 3.0, 5.0, 0.2).unwrap();
    let nl = p.nonlinearity();
    let a = 1.3;
    let r = 1e-2;
    let (u, du) = series_start(&p, a, r).unwrap();
    // u = a − f r²/(2N) + f f' r⁴/(8N(N+2))
    let (f, fp) = (nl.f(a), nl.df(a));
    let want = a - f * r * r / 8.0 + f * fp * r.powi(4) / 192.0;
    assert!((u - want).abs() < 1e-15);
    assert!((du - (-f * r / 4.0 + f * fp * r.powi(3) / 48.0)).abs() < 1e-15);
    assert!(series_start(&p, -1.0, r).is_err());
}

#[test]
fn handoff_radius_is_small_against_curvature_length() {
    for (fam, p, q, eps) in [
        (Family::PEps, 4.0, 6.0, 1e-3),
        (Family::RZero, 4.0, 6.0, 0.0),
        (Family::PZero, 8.0, 12.0, 0.0),
    ] {
        let p = ProblemParams::new(fam, 3, p, q, eps).unwrap();
        for a in [0.01, 0.5, 5.0] {
            let r0 = handoff_radius(&p, a);
            let len = p.nonlinearity().f(a).abs().powf(-0.5);
            assert!(r0 > 0.0 && r0 <= 1e-4 * len.max(1.0) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn integrator_agrees_with_fixed_step_oracle() {
    let p = ProblemParams::new(Family::RZero, 3, 4.0, 6.0, 0.0).unwrap();
    let nl = p.nonlinearity();
    let a = 4.0;
    let t = integrate(&p, a, 6.0, &StepControls::default()).unwrap();
    let oracle = rk4(3.0, |u| nl.f(u), a, t.last_radius().min(6.0), 1e-4);
    for &(r, u, du) in oracle.iter().step_by(2500).skip(1) {
        let (v, dv) = t.eval(r).unwrap();
        assert!((v - u).abs() < 1e-7, "r = {r}: {v} vs {u}");
        assert!((dv - du).abs() < 1e-6, "r = {r}: {dv} vs {du}");
    }
}

#[test]
fn events_match_dichotomy() {
    let p = ProblemParams::new(Family::RZero, 3, 4.0, 6.0, 0.0).unwrap();
    let tol = StepControls::default();
    let over = integrate(&p, 4.5, 50.0, &tol).unwrap();
    assert_eq!(over.terminal_event, TerminalEvent::ZeroCrossing);
    assert!(over.last_value().abs() < 1e-8);
    let under = integrate(&p, 4.2, 50.0, &tol).unwrap();
    assert_eq!(under.terminal_event, TerminalEvent::SlopeSignFlip);
    assert!(under.last_slope().abs() < 1e-8);
}

#[test]
fn negative_force_at_origin_flips_immediately() {
    // f(a) < 0 above the upper zero of f.
    let p = ProblemParams::new(Family::PEps, 3, 4.0, 6.0, 0.1).unwrap();
    let t = integrate(&p, 2.0, 10.0, &StepControls::default()).unwrap();
    assert_eq!(t.terminal_event, TerminalEvent::SlopeSignFlip);
}

#[test]
fn invalid_controls_rejected() {
    let p = ProblemParams::new(Family::RZero, 3, 4.0, 6.0, 0.0).unwrap();
    let bad = StepControls {
        rtol: -1.0,
        ..StepControls::default()
    };
    assert!(matches!(integrate(&p, 1.0, 5.0, &bad), Err(Error::InvalidArgument(_))));
    assert!(integrate(&p, 1.0, -5.0, &StepControls::default()).is_err());
}

#[test]
fn step_budget_exhaustion_reports_partial_trajectory() {
    let p = ProblemParams::new(Family::RZero, 3, 4.0, 6.0, 0.0).unwrap();
    let tiny = StepControls {
        max_steps: 5,
        ..StepControls::default()
    };
    match integrate(&p, 4.3, 50.0, &tiny) {
        Err(Error::IntegrationFailure { partial, .. }) => assert!(!partial.is_empty()),
        other => panic!("expected integration failure, got {other:?}"),
    }
}

#[test]
fn params_validation() {
    assert!(ProblemParams::new(Family::PEps, 2, 4.0, 6.0, 0.1).is_err());
    assert!(ProblemParams::new(Family::PEps, 3, 6.0, 4.0, 0.1).is_err());
    assert!(ProblemParams::new(Family::PEps, 3, 4.0, 6.0, -0.1).is_err());
    assert!(ProblemParams::new(Family::PEps, 3, 2.0, 6.0, 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// d/dr(½u'² + F(u)) = −(N−1)/r·u'² ≤ 0.
    #[test]
    fn energy_is_non_increasing(a in 0.5f64..8.0, n in 3u32..6) {
        let p = ProblemParams::new(Family::RZero, n, 3.0, 5.0, 0.0).unwrap();
        let t = integrate(&p, a, 40.0, &StepControls::default()).unwrap();
        let e = t.energies();
        let scale = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for w in e.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * scale);
        }
    }

    #[test]
    fn rescaling_round_trip(a in 1.5f64..5.0, c in 0.1f64..10.0, k in 0.1f64..10.0) {
        let p = ProblemParams::new(Family::RZero, 3, 4.0, 6.0, 0.0).unwrap();
        let t = integrate(&p, a, 20.0, &StepControls::default()).unwrap();
        let s = t.rescaled(c, k);
        let r = 0.5 * t.last_radius();
        let (u, du) = t.eval(r).unwrap();
        let (v, dv) = s.eval(r / c).unwrap();
        prop_assert!((v - k * u).abs() <= 1e-12 * (k * u).abs());
        prop_assert!((dv - k * c * du).abs() <= 1e-10 * (k * c * du).abs() + 1e-14 * k * c * a);
        let back = s.rescaled(1.0 / c, 1.0 / k);
        let (w, _) = back.eval(r).unwrap();
        prop_assert!((w - u).abs() <= 1e-12 * u.abs());
    }

    #[test]
    fn integration_is_deterministic(a in 0.1f64..3.0) {
        let p = ProblemParams::new(Family::PEps, 3, 4.0, 6.0, 0.05).unwrap();
        let t1 = integrate(&p, a, 30.0, &StepControls::default()).unwrap();
        let t2 = integrate(&p, a, 30.0, &StepControls::default()).unwrap();
        prop_assert_eq!(t1, t2);
    }

    #[test]
    fn params_serde_round_trip(n in 3u32..7, p in 2.1f64..5.0, dq in 0.1f64..5.0, eps in 1e-6f64..1.0) {
        let pp = ProblemParams::new(Family::PEps, n, p, p + dq, eps).unwrap();
        let s = serde_json::to_string(&pp).unwrap();
        let back: ProblemParams = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(pp, back);
    }
}
