#![allow(dead_code)]

use std::f64::consts::PI;

use autores::partition::{CurveBranch, Partition};
use autores::series::{c_function, SeriesSolution};
use autores::{build_series, find_roots, Branch, ModelParams, PhaseParams, PhaseRoot, RootOptions, SeriesCase};

pub struct Fixture {
    pub name: String,
    pub model: ModelParams,
    pub root: PhaseRoot,
    pub branch: Branch,
    pub series: SeriesSolution,
}

pub fn fig6_black() -> PhaseParams {
    PhaseParams::new(-2.0, 5.0 * PI / 6.0, 1.0)
}

pub fn fig6_blue() -> PhaseParams {
    PhaseParams::new(-1.5, PI / 6.0, 0.25)
}

/// Triple point on the κ²+3δ²=3/4 ellipse; `upper` picks ν = π − arcsin(·).
pub fn triple_point(kappa: f64, upper: bool) -> PhaseParams {
    let delta = -((0.75 - kappa * kappa) / 3.0).sqrt();
    let sn = -kappa * (1.0 + 32.0 * delta * delta) / (9.0 * delta);
    let nu = if upper { PI - sn.asin() } else { sn.asin() };
    PhaseParams::new(delta, nu, kappa)
}

pub fn quadruple_point() -> PhaseParams {
    PhaseParams::new(-0.25, PI / 2.0, 0.75)
}

/// Tails that make every multiple root at `p` admit a real series: a `γ₁` tail
/// forcing `C(σ)` to the sign of `P″` at double roots, and `Q > 0` at the
/// quadruple point.
pub fn model_for(p: &PhaseParams) -> ModelParams {
    let mut m = ModelParams::from_phase(1.0, p);
    let roots = find_roots(p, &RootOptions::default()).unwrap();
    if roots.iter().any(|r| r.multiplicity == 4) {
        m.alpha = vec![1.0, 1.0];
        m.beta.push(0.15);
        m.gamma.push(0.05);
    } else if let Some(r) = roots.iter().find(|r| r.multiplicity == 2) {
        let target = 0.5 * r.derivs[2].signum();
        m.gamma.push(c_function(r.sigma, &m) - target);
    }
    m
}

fn push_all(out: &mut Vec<Fixture>, name: &str, p: &PhaseParams) {
    let m = model_for(p);
    for root in find_roots(p, &RootOptions::default()).unwrap() {
        for branch in [Branch::Plus, Branch::Minus] {
            if branch == Branch::Minus && matches!(root.multiplicity, 1 | 3) {
                continue;
            }
            let case = SeriesCase::for_multiplicity(root.multiplicity, branch).unwrap();
            if let Ok(series) = build_series(&m, &root, branch, case.max_order()) {
                out.push(Fixture {
                    name: format!("{name} sigma={:.4} m={} {:?}", root.sigma, root.multiplicity, branch),
                    model: m.clone(),
                    root,
                    branch,
                    series,
                });
            }
        }
    }
}

/// Double points sampled along the traced `s₋`, `s₊` curves at `kappa`.
pub fn double_points(kappa: f64, per_curve: usize) -> Vec<PhaseParams> {
    let part = Partition::new(kappa).unwrap();
    let mut out = Vec::new();
    for b in [CurveBranch::SMinus, CurveBranch::SPlus] {
        let Some(c) = part.curve(b) else { continue };
        let pts: Vec<[f64; 2]> = c.points().filter(|[d, nu]| d.abs() > 0.3 && *nu > 0.2 && *nu < PI - 0.2).collect();
        for k in 0..per_curve {
            let [d, nu] = pts[(k * 2 + 1) * pts.len() / (2 * per_curve)];
            let p = PhaseParams::new(d, nu, kappa);
            let roots = find_roots(&p, &RootOptions::default()).unwrap();
            if roots.iter().filter(|r| r.multiplicity == 2).count() == 1 {
                out.push(p);
            }
        }
    }
    out
}

/// Roots of all four kinds with their series, used by the stability checks.
pub fn stability_fixtures() -> Vec<Fixture> {
    let mut out = Vec::new();
    push_all(&mut out, "fig6-black", &fig6_black());
    push_all(&mut out, "delta0", &PhaseParams::new(0.0, 0.0, 0.5));
    for kappa in [0.4, 0.9] {
        for (i, p) in double_points(kappa, 2).iter().enumerate() {
            push_all(&mut out, &format!("double k={kappa} #{i}"), p);
        }
    }
    for kappa in [0.3, 0.5] {
        push_all(&mut out, &format!("triple k={kappa} lower"), &triple_point(kappa, false));
        push_all(&mut out, &format!("triple k={kappa} upper"), &triple_point(kappa, true));
    }
    push_all(&mut out, "quadruple", &quadruple_point());
    out
}

pub const TAU0: f64 = 20.0;
pub const KICK: f64 = 1e-3;

pub struct Agreement {
    pub status: autores::Status,
    pub agrees: bool,
    pub detail: String,
}

/// Injects a `KICK`-sized perturbation at `TAU0` and checks it against the verdict:
/// stable roots keep `τ^{w₁}|R|`, `τ^{w₂}|Ψ|` within 10× their initial values
/// over `[100, 2000]`; unstable roots push the perturbation past `0.1` by `τ = 2000`.
pub fn perturbation_agrees(f: &Fixture) -> Agreement {
    use autores::{classify_stability, integrate_perturbation, PerturbOptions, Reference, Status};
    let v = classify_stability(&f.root, &f.series, &f.model).unwrap();
    let (w1, w2) = (v.weights.0.value(), v.weights.1.value());
    if v.status == Status::Unstable {
        let o = PerturbOptions { escape: Some(0.1), ..Default::default() };
        let run =
            integrate_perturbation(&f.model, &f.series, TAU0, (KICK, KICK), 2000.0, Reference::Series, &o).unwrap();
        return Agreement {
            status: v.status,
            agrees: run.escaped_at.is_some(),
            detail: format!("escaped_at {:?}", run.escaped_at),
        };
    }
    let run = integrate_perturbation(
        &f.model,
        &f.series,
        TAU0,
        (KICK, KICK),
        2000.0,
        Reference::Integrated,
        &PerturbOptions::default(),
    )
    .unwrap();
    let (r0, q0) = (TAU0.powf(w1) * KICK, TAU0.powf(w2) * KICK);
    let (mut sr, mut sq) = (0.0f64, 0.0f64);
    for i in 0..run.tau.len() {
        if run.tau[i] >= 100.0 {
            sr = sr.max(run.tau[i].powf(w1) * run.r[i].abs());
            sq = sq.max(run.tau[i].powf(w2) * run.psi[i].abs());
        }
    }
    let agrees = run.escaped_at.is_none() && sr <= 10.0 * r0 && sq <= 10.0 * q0;
    Agreement {
        status: v.status,
        agrees,
        detail: format!("sup R ratio {:.3e}, sup Psi ratio {:.3e}, decayed_at {:?}", sr / r0, sq / q0, run.decayed_at),
    }
}
