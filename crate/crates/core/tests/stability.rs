mod common;

use std::f64::consts::PI;

use autores::phase::angle_dist;
use autores::stability::{hamiltonian, linear_matrix, Frac, LyapunovFrame, StableCase};
use autores::{
    build_series, classify_stability, exponent_power_fit, find_roots, integrate_perturbation, linearization_exponents,
    lyapunov_value, verify_decrease, Branch, Error, ModelParams, PerturbOptions, PhaseParams, PhaseRoot, Reference,
    RootOptions, SeriesCase, SeriesSolution, Status,
};
use common::{fig6_black, stability_fixtures, Fixture};
use proptest::prelude::*;

fn root_near(p: &PhaseParams, sigma: f64) -> PhaseRoot {
    find_roots(p, &RootOptions::default())
        .unwrap()
        .into_iter()
        .find(|r| angle_dist(r.sigma, sigma) < 1e-6)
        .unwrap_or_else(|| panic!("no root near {sigma}"))
}

fn simple(p: &PhaseParams, sigma: f64) -> (ModelParams, PhaseRoot, SeriesSolution) {
    let m = ModelParams::from_phase(1.0, p);
    let root = root_near(p, sigma);
    let s = build_series(&m, &root, Branch::Plus, SeriesCase::Simple.max_order()).unwrap();
    (m, root, s)
}

fn stable_fixture(case: StableCase) -> Fixture {
    stability_fixtures()
        .into_iter()
        .find(|f| classify_stability(&f.root, &f.series, &f.model).unwrap().case == Some(case))
        .unwrap()
}

#[test]
fn simple_root_verdicts_follow_the_slope() {
    let p = PhaseParams::new(0.0, 0.0, 0.5);
    let (m, r, s) = simple(&p, 5.0 * PI / 6.0);
    let v = classify_stability(&r, &s, &m).unwrap();
    assert_eq!(v.status, Status::Stable);
    assert_eq!(v.weights, (Frac(0, 1), Frac(0, 1)));
    assert_eq!(v.case, Some(StableCase::I));

    let (m, r, s) = simple(&p, PI / 6.0);
    assert_eq!(classify_stability(&r, &s, &m).unwrap().status, Status::Unstable);
}

#[test]
fn quadruple_branches_split_into_weighted_and_unstable() {
    let p = common::quadruple_point();
    let m = common::model_for(&p);
    let root = root_near(&p, PI / 2.0);
    assert_eq!(root.multiplicity, 4);
    let plus = build_series(&m, &root, Branch::Plus, 3).unwrap();
    let minus = build_series(&m, &root, Branch::Minus, 3).unwrap();
    let v = classify_stability(&root, &plus, &m).unwrap();
    assert_eq!(v.status, Status::StableWeighted);
    assert_eq!(v.weights, (Frac(5, 8), Frac(1, 4)));
    assert_eq!(classify_stability(&root, &minus, &m).unwrap().status, Status::Unstable);
}

#[test]
fn weighted_verdicts_use_the_listed_weights() {
    let allowed = [(Frac(3, 4), Frac(1, 2)), (Frac(2, 3), Frac(1, 3)), (Frac(5, 8), Frac(1, 4))];
    let mut seen = [false; 3];
    for f in stability_fixtures() {
        let v = classify_stability(&f.root, &f.series, &f.model).unwrap();
        match v.status {
            Status::StableWeighted => {
                let k = allowed.iter().position(|w| *w == v.weights).expect("listed weights");
                assert_eq!(k + 2, f.root.multiplicity as usize);
                seen[k] = true;
            }
            _ => assert_eq!(v.weights, (Frac(0, 1), Frac(0, 1))),
        }
    }
    assert_eq!(seen, [true; 3]);
}

#[test]
fn mismatched_root_and_series_are_rejected() {
    let p = PhaseParams::new(0.0, 0.0, 0.5);
    let (m, stable, s) = simple(&p, 5.0 * PI / 6.0);
    let other = root_near(&p, PI / 6.0);
    assert!(matches!(classify_stability(&other, &s, &m), Err(Error::Contract(_))));

    let mut doubled = stable;
    doubled.multiplicity = 2;
    assert!(matches!(classify_stability(&doubled, &s, &m), Err(Error::Contract(_))));
    assert!(matches!(linearization_exponents(&other, &s, &m, 100.0), Err(Error::Contract(_))));
}

#[test]
fn case_one_exponents_grow_like_the_square_root() {
    let (m, r, s) = simple(&fig6_black(), PI);
    let tau = 1e6;
    let (zp, zm) = linearization_exponents(&r, &s, &m, tau).unwrap();
    let scale = tau.sqrt() * (4.0 * m.lambda).powf(0.25) * r.derivs[1].sqrt();
    for z in [zp, zm] {
        assert!((z.im.abs() / scale - 1.0).abs() < 0.05, "{z} vs {scale}");
    }
    assert!(zp.im * zm.im < 0.0);
}

#[test]
fn unstable_simple_root_is_a_saddle() {
    let p = fig6_black();
    let sigma = find_roots(&p, &RootOptions::default()).unwrap().into_iter().find(|r| r.derivs[1] < 0.0).unwrap().sigma;
    let (m, r, s) = simple(&p, sigma);
    let (zp, zm) = linearization_exponents(&r, &s, &m, 1e4).unwrap();
    assert!(zp.im == 0.0 && zm.im == 0.0);
    assert!(zp.re > 0.0 && zm.re < 0.0);
}

#[test]
fn trace_tends_to_minus_twice_the_damping() {
    for f in stability_fixtures() {
        let limit = -2.0 * f.model.kappa() / f.model.lambda.sqrt();
        let gap = |tau: f64| {
            let pt = f.series.point(tau).unwrap();
            let l = linear_matrix(&f.model, tau, pt.rho, pt.psi);
            (l[0][0] + l[1][1] - limit).abs()
        };
        let (near, far) = (gap(1e4), gap(1e8));
        assert!(far < 0.05 && far < near, "{}: {near:e} -> {far:e}", f.name);
    }
}

#[test]
fn exponent_powers_match_the_case() {
    for f in stability_fixtures() {
        let want = [0.5, 0.25, 1.0 / 6.0, 0.125][f.root.multiplicity as usize - 1];
        let v = classify_stability(&f.root, &f.series, &f.model).unwrap();
        assert_eq!(v.exponent_model.power.value(), want);
        let fit = exponent_power_fit(&f.root, &f.series, &f.model, (1e3, 1e6), 25).unwrap();
        assert!((fit - want).abs() < 0.02, "{}: fit {fit}, want {want}", f.name);
    }
}

#[test]
fn lyapunov_vanishes_at_the_origin() {
    for f in stability_fixtures() {
        let Ok(frame) = LyapunovFrame::new(&f.root, &f.series, &f.model) else { continue };
        for tau in [50.0, 1e3, 1e5] {
            assert_eq!(lyapunov_value(&frame, 0.0, 0.0, tau).unwrap(), 0.0);
        }
    }
}

#[test]
fn unstable_roots_have_no_frame() {
    let p = PhaseParams::new(0.0, 0.0, 0.5);
    let (m, r, s) = simple(&p, PI / 6.0);
    assert!(matches!(LyapunovFrame::new(&r, &s, &m), Err(Error::Contract(_))));
    assert!(LyapunovFrame::indefinite(&r, &s, &m).unwrap().omega_sq < 0.0);
}

#[test]
fn lyapunov_rejects_points_outside_its_domain() {
    let f = stable_fixture(StableCase::I);
    let frame = LyapunovFrame::new(&f.root, &f.series, &f.model).unwrap();
    assert!(matches!(lyapunov_value(&frame, 0.0, 0.0, 10.0), Err(Error::Domain(_))));
    assert!(matches!(lyapunov_value(&frame, 0.5, 0.0, 100.0), Err(Error::Domain(_))));
}

fn ball_points(n: usize, radius: f64) -> impl Iterator<Item = (f64, f64)> {
    (0..n).map(move |k| {
        let a = 2.0 * PI * k as f64 / n as f64;
        let r = radius * (0.2 + 0.8 * ((k * 7919) % n) as f64 / n as f64);
        (r * a.cos(), r * a.sin())
    })
}

#[test]
fn lyapunov_is_sandwiched_by_its_quadratic_form() {
    let kappa = 0.5;
    let tau: f64 = 1e3;
    for case in [StableCase::I, StableCase::II, StableCase::III, StableCase::IV] {
        let f = stable_fixture(case);
        let frame = LyapunovFrame::new(&f.root, &f.series, &f.model).unwrap();
        for (sr, sq) in ball_points(400, 0.05) {
            let (r, q) = (sr * tau.powf(-frame.w1), sq * tau.powf(-frame.w2));
            let v = lyapunov_value(&frame, r, q, tau).unwrap();
            let w = frame.w(sr, sq);
            assert!((1.0 - kappa) * w <= v && v <= (1.0 + kappa) * w, "{:?} at ({sr}, {sq}): V={v:e}, W={w:e}", case);
        }
    }
}

#[test]
fn lyapunov_is_quadratic_at_small_amplitude() {
    let tau: f64 = 1e4;
    for case in [StableCase::I, StableCase::II, StableCase::III, StableCase::IV] {
        let f = stable_fixture(case);
        let frame = LyapunovFrame::new(&f.root, &f.series, &f.model).unwrap();
        let (sr, sq) = (0.03, -0.04);
        let (r, q) = (sr * tau.powf(-frame.w1), sq * tau.powf(-frame.w2));
        let quad = |s: f64| lyapunov_value(&frame, s * r, s * q, tau).unwrap() / (s * s);
        // The cubic remainder is odd in s, so averaging ±s cancels it.
        let limit = |s: f64| 0.5 * (quad(s) + quad(-s));
        let (a, b) = (limit(1e-2), limit(5e-3));
        let extrapolated = (4.0 * b - a) / 3.0;
        let w = frame.w(sr, sq);
        assert!((extrapolated - w).abs() < 0.2 * w, "{case:?}: {extrapolated:e} vs {w:e}");
        assert!((a - b).abs() < 1e-3 * w, "{case:?}: not converging");
    }
}

#[test]
fn hamiltonian_vanishes_to_second_order() {
    let f = stable_fixture(StableCase::I);
    let pt = f.series.point(200.0).unwrap();
    let h = |s: f64| hamiltonian(&f.model, 200.0, pt.rho, pt.psi, s * 1e-3, s * 2e-3);
    assert_eq!(h(0.0), 0.0);
    let ratio = h(1e-3) / h(2e-3);
    assert!((ratio - 0.25).abs() < 1e-3, "{ratio}");
}

fn perturbed(
    f: &Fixture,
    kick: (f64, f64),
    reference: Reference,
    o: &PerturbOptions,
) -> autores::simulator::PerturbationRun {
    integrate_perturbation(&f.model, &f.series, common::TAU0, kick, 300.0, reference, o).unwrap()
}

#[test]
fn lyapunov_decreases_along_case_one_and_two_runs() {
    for case in [StableCase::I, StableCase::II] {
        let f = stable_fixture(case);
        let frame = LyapunovFrame::new(&f.root, &f.series, &f.model).unwrap();
        let run = perturbed(&f, (1e-3, 1e-3), Reference::Integrated, &PerturbOptions::default());
        for kappa in [0.25, 0.5, 0.9] {
            let rep = verify_decrease(&frame, &run, kappa).unwrap();
            assert!(rep.passed, "{case:?} kappa {kappa}: {rep:?}");
            assert_eq!(rep.fraction, 1.0);
            assert!(rep.samples > 1000);
        }
    }
}

#[test]
fn zero_perturbation_satisfies_the_decrease_trivially() {
    let f = stable_fixture(StableCase::I);
    let frame = LyapunovFrame::new(&f.root, &f.series, &f.model).unwrap();
    let run = perturbed(&f, (0.0, 0.0), Reference::Integrated, &PerturbOptions::default());
    assert!(run.r.iter().chain(&run.psi).all(|x| *x == 0.0));
    let rep = verify_decrease(&frame, &run, 0.5).unwrap();
    assert!(rep.passed);
    assert_eq!(rep.negligible, rep.samples);
}

#[test]
fn unstable_run_is_flagged_as_leaving_the_ball() {
    let p = fig6_black();
    let sigma = find_roots(&p, &RootOptions::default()).unwrap().into_iter().find(|r| r.derivs[1] < 0.0).unwrap().sigma;
    let (m, root, series) = simple(&p, sigma);
    let frame = LyapunovFrame::indefinite(&root, &series, &m).unwrap();
    let run =
        integrate_perturbation(&m, &series, 60.0, (1e-6, 1e-6), 300.0, Reference::Series, &PerturbOptions::default())
            .unwrap();
    let rep = verify_decrease(&frame, &run, 0.5).unwrap();
    assert!(rep.exited_at.is_some(), "{rep:?}");
    assert!(!rep.passed);
}

#[test]
fn decrease_rejects_margins_outside_the_unit_interval() {
    let f = stable_fixture(StableCase::I);
    let frame = LyapunovFrame::new(&f.root, &f.series, &f.model).unwrap();
    let run = perturbed(&f, (1e-3, 1e-3), Reference::Integrated, &PerturbOptions::default());
    assert!(verify_decrease(&frame, &run, 1.0).is_err());
    assert!(verify_decrease(&frame, &run, 0.0).is_err());
}

#[test]
fn perturbations_behave_as_the_verdict_says() {
    let fx = stability_fixtures();
    assert!(fx.len() >= 20);
    for f in &fx {
        let a = common::perturbation_agrees(f);
        assert!(a.agrees, "{} {:?}: {}", f.name, a.status, a.detail);
    }
}

#[test]
fn series_reference_does_not_escape_for_stable_roots() {
    let o = PerturbOptions { escape: Some(0.1), ..Default::default() };
    for case in [StableCase::I, StableCase::II, StableCase::III, StableCase::IV] {
        let f = stable_fixture(case);
        let run = perturbed(&f, (1e-3, 1e-3), Reference::Series, &o);
        assert!(run.escaped_at.is_none(), "{case:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn lyapunov_is_positive_on_the_punctured_ball(
        which in 0usize..4,
        angle in 0.0..(2.0 * PI),
        radius in 1e-6f64..0.2,
        log_tau in 50f64.ln()..1e5f64.ln(),
    ) {
        thread_local! {
            static FRAMES: Vec<LyapunovFrame> = [StableCase::I, StableCase::II, StableCase::III, StableCase::IV]
                .into_iter()
                .map(|c| {
                    let f = stable_fixture(c);
                    LyapunovFrame::new(&f.root, &f.series, &f.model).unwrap()
                })
                .collect();
        }
        let tau = log_tau.exp();
        let v = FRAMES.with(|fr| {
            let frame = &fr[which];
            let (sr, sq) = (radius * angle.cos(), radius * angle.sin());
            lyapunov_value(frame, sr * tau.powf(-frame.w1), sq * tau.powf(-frame.w2), tau).unwrap()
        });
        prop_assert!(v > 0.0, "V = {v:e}");
    }
}
