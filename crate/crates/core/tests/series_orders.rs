use autores::series::{build_case, c_function, n_function, residual_norm, Branch, SeriesCase, SeriesSolution};
use autores::{find_roots, ModelParams, PhaseParams, RootOptions};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn slope(s: &SeriesSolution, m: &ModelParams) -> f64 {
    let f = |t: f64| {
        let (a, b) = residual_norm(s, m, t).unwrap();
        a.abs().max(b.abs())
    };
    (f(1e6) / f(1e3)).log10() / 3.0
}

fn double_point() -> (ModelParams, f64) {
    let (sig, d) = (1.0f64, 0.8f64);
    let nu = 2.0 * PI - 2.0 * sig - (sig.cos() / (2.0 * d)).acos();
    let kap = sig.sin() - d * (2.0 * sig + nu).sin();
    let m = ModelParams { lambda: 1.0, nu, alpha: vec![1.0, 3.0], beta: vec![d, 0.1], gamma: vec![kap, 0.05] };
    (m, sig)
}

fn triple_points() -> Vec<(ModelParams, f64)> {
    let (kap, lam) = (0.5f64, 0.8f64);
    let d = -((0.75 - kap * kap) / 3.0).sqrt();
    let sl = lam.sqrt();
    let sn = -kap * (1.0 + 32.0 * d * d) / (9.0 * d);
    [sn.asin(), PI - sn.asin()]
        .into_iter()
        .map(|nu| {
            let roots = find_roots(&PhaseParams::new(d, nu, kap), &RootOptions::default()).unwrap();
            let r = roots.iter().find(|r| r.multiplicity == 3).expect("triple root");
            let m = ModelParams {
                lambda: lam,
                nu,
                alpha: vec![1.0, 0.3, -0.2],
                beta: vec![d / sl, 0.15, 0.1],
                gamma: vec![kap / sl, 0.05, -0.07],
            };
            (m, r.sigma)
        })
        .collect()
}

#[test]
fn simple_orders_with_generic_tails() {
    let p = PhaseParams::new(0.9, 0.7, 2.0f64.sin() - 0.9 * (4.0f64 + 0.7).sin());
    let lam = 1.3f64;
    let sl = lam.sqrt();
    let m = ModelParams {
        lambda: lam,
        nu: p.nu,
        alpha: vec![1.0, 0.3, -0.2],
        beta: vec![p.delta / sl, 0.15, 0.1],
        gamma: vec![p.kappa / sl, 0.05, -0.07],
    };
    for k in 0..=3 {
        let s = build_case(&m, 2.0, SeriesCase::Simple, k).unwrap();
        let got = slope(&s, &m);
        let want = -(k as f64 + 1.0) / 2.0;
        assert!((got - want).abs() < 0.15, "K={k}: slope {got}, expected {want}");
    }
}

#[test]
fn corrupted_coefficient_caps_the_order() {
    let p = PhaseParams::new(-2.0, 5.0 * PI / 6.0, 1.0);
    let m = ModelParams::from_phase(1.0, &p);
    let mut s = build_case(&m, PI, SeriesCase::Simple, 3).unwrap();
    s.psi[1] += 0.1;
    assert!((slope(&s, &m) + 1.0).abs() < 0.15);
}

#[test]
fn double_orders_both_branches() {
    let (m, sig) = double_point();
    for b in [Branch::Plus, Branch::Minus] {
        for k in 0..=3 {
            let s = build_case(&m, sig, SeriesCase::Double(b), k).unwrap();
            let got = slope(&s, &m);
            let want = -(k as f64 + 1.0) / 2.0;
            assert!((got - want).abs() < 0.15, "{b:?} K={k}: slope {got}");
        }
    }
}

#[test]
fn double_branches_differ_only_in_sign_of_first_phase_term() {
    let (m, sig) = double_point();
    let p = build_case(&m, sig, SeriesCase::Double(Branch::Plus), 3).unwrap();
    let n = build_case(&m, sig, SeriesCase::Double(Branch::Minus), 3).unwrap();
    assert_eq!(p.psi_k(0), n.psi_k(0));
    assert!((p.psi_k(1) + n.psi_k(1)).abs() < 1e-15);
    let phi = (2.0 * c_function(sig, &m) / autores::eval_p(sig, &m.phase(), 2).unwrap()).sqrt();
    assert!((p.psi_k(1) - phi).abs() < 1e-12);
}

#[test]
fn triple_orders() {
    // ψ₃ = ψ₅ = 0, so odd orders add nothing; each step in ψ adds τ^{-1/6}.
    let expect = [-1.0, -1.0, -7.0 / 6.0, -7.0 / 6.0, -1.5, -1.5];
    for (m, sig) in triple_points() {
        for (k, want) in expect.iter().enumerate() {
            let s = build_case(&m, sig, SeriesCase::Triple, k).unwrap();
            let got = slope(&s, &m);
            assert!((got - want).abs() < 0.06, "K={k}: slope {got}, expected {want}");
            assert!((s.rho_k(3) + sig.cos() / (4.0 * m.lambda)).abs() < 1e-12);
            assert_eq!((s.rho_k(1), s.rho_k(2), s.psi_k(1)), (0.0, 0.0, 0.0));
        }
    }
}

#[test]
fn quadruple_orders() {
    let m = ModelParams {
        lambda: 1.0,
        nu: FRAC_PI_2,
        alpha: vec![1.0, 1.0],
        beta: vec![-0.25, 0.15],
        gamma: vec![0.75, 0.05],
    };
    let expect = [-1.0, -1.25, -1.25, -1.5, -1.75];
    for b in [Branch::Plus, Branch::Minus] {
        for (k, want) in expect.iter().enumerate() {
            let s = build_case(&m, FRAC_PI_2, SeriesCase::Quadruple(b), k).unwrap();
            let got = slope(&s, &m);
            assert!((got - want).abs() < 0.07, "{b:?} K={k}: slope {got}, expected {want}");
        }
    }
}

#[test]
fn residual_shrinks_with_order() {
    let p = PhaseParams::new(-2.0, 5.0 * PI / 6.0, 1.0);
    let m = ModelParams::from_phase(1.0, &p);
    let mut last = f64::INFINITY;
    for k in 0..=3 {
        let s = build_case(&m, PI, SeriesCase::Simple, k).unwrap();
        let (a, b) = residual_norm(&s, &m, 1e6).unwrap();
        let r = a.abs().max(b.abs());
        assert!(r < last);
        last = r;
    }
}

#[test]
fn compatibility_functions_keep_sign_for_plain_tails() {
    for lam in [0.51, 1.0, 3.0] {
        for nu in [0.0, 1.0, 2.5] {
            let m = ModelParams::constant(lam, nu, 0.3, 0.4);
            for i in 0..10_000 {
                let s = i as f64 * 2.0 * PI / 10_000.0;
                assert!(c_function(s, &m) < 0.0);
                assert!(n_function(s, &m) != 0.0);
            }
        }
    }
}

proptest! {
    #[test]
    fn simple_series_leading_terms(delta in -3.0f64..3.0, nu in 0.0f64..PI, kappa in 0.05f64..2.0, lam in 0.2f64..4.0) {
        let p = PhaseParams::new(delta, nu, kappa);
        let m = ModelParams::from_phase(lam, &p);
        for r in find_roots(&p, &RootOptions::default()).unwrap() {
            if r.multiplicity != 1 { continue; }
            let s = build_case(&m, r.sigma, SeriesCase::Simple, 3).unwrap();
            prop_assert!((s.rho_k(-1) - lam.sqrt()).abs() < 1e-12);
            prop_assert_eq!(s.rho_k(0), 0.0);
            prop_assert_eq!(s.psi_k(1), 0.0);
            let a1 = (delta * (2.0 * r.sigma + nu).cos() - r.sigma.cos()) / lam.sqrt();
            prop_assert!((s.rho_k(1) - a1 / (2.0 * lam.sqrt())).abs() < 1e-12);
        }
    }
}
