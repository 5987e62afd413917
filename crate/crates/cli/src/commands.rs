use std::fmt;

use autores::partition::{special_points, Partition};
use autores::phase::angle_dist;
use autores::series::residual_norm;
use autores::simulator::angle_gap;
use autores::stability::LyapunovFrame;
use autores::{
    basin_sample, build_series, classify_region, classify_stability, design_excitation, detect_capture,
    exponent_power_fit, find_roots, integrate, integrate_perturbation, linearization_exponents, multiple_root_domain,
    simulate_full_oscillator, verify_decrease, Branch, CaptureOptions, DesignSpec, InitGrid, Mode, ModelParams,
    OscillatorParams, PerturbOptions, PhaseParams, PhaseRoot, Reference, RootOptions, SeriesCase, SeriesSolution,
    SimOptions, Status,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{fmt_f64, report, Table};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<autores::Error> for CliError {
    fn from(e: autores::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("i/o failure: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// What a command produced: a report for stdout, or data files.
pub enum Outcome {
    Report(Value),
    Files { tables: Vec<Table>, json: Vec<(String, Value)> },
}

impl Outcome {
    pub fn tables(tables: Vec<Table>) -> Self {
        Outcome::Files { tables, json: Vec::new() }
    }
}

pub fn execute(cmd: &Command) -> CliResult<Outcome> {
    match cmd {
        Command::Roots(a) => roots(a),
        Command::Region(a) => region(a),
        Command::Curves(a) => curves(a),
        Command::Domain(a) => domain(a),
        Command::Series(a) => series(a),
        Command::Residual(a) => residual(a),
        Command::Stability(a) => stability(a),
        Command::Simulate(a) => simulate(a),
        Command::Oscillator(a) => oscillator(a),
        Command::Basin(a) => basin(a),
        Command::Design(a) => design(a),
        Command::Figure(a) => crate::figures::figure(a.name),
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        usage(format!("--{name} must be positive, got {v}"))
    }
}

fn span(lo_name: &str, lo: f64, hi_name: &str, hi: f64) -> CliResult<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        usage(format!("--{lo_name} ({lo}) must be below --{hi_name} ({hi})"))
    }
}

fn root_options(tol_root: f64, tol_sep: f64) -> CliResult<RootOptions> {
    positive("tol-root", tol_root)?;
    if !(tol_root < tol_sep) {
        return usage(format!("--tol-root ({tol_root}) must be below --tol-sep ({tol_sep})"));
    }
    Ok(RootOptions::with_tolerances(tol_root, tol_sep))
}

pub fn root_json(r: &PhaseRoot) -> Value {
    json!({ "sigma": r.sigma, "multiplicity": r.multiplicity, "derivs": r.derivs })
}

fn phase_params(t: &mut Table, p: &PhaseParams) {
    t.param("delta", fmt_f64(p.delta)).param("nu", fmt_f64(p.nu)).param("kappa", fmt_f64(p.kappa));
}

fn roots(a: &RootsArgs) -> CliResult<Outcome> {
    let p = PhaseParams::new(a.phase.delta, a.phase.nu, a.phase.kappa);
    let rs = find_roots(&p, &root_options(a.tol_root, a.tol_sep)?)?;
    Ok(Outcome::Report(report(
        "roots",
        json!({
            "params": { "delta": p.delta, "nu": p.nu, "kappa": p.kappa, "tol_root": a.tol_root, "tol_sep": a.tol_sep },
            "count": rs.len(),
            "roots": rs.iter().map(root_json).collect::<Vec<_>>(),
        }),
    )))
}

fn region(a: &PhaseArgs) -> CliResult<Outcome> {
    let p = PhaseParams::new(a.delta, a.nu, a.kappa);
    let label = classify_region(&p)?;
    let rs = find_roots(&p, &RootOptions::default())?;
    Ok(Outcome::Report(report(
        "region",
        json!({
            "params": { "delta": p.delta, "nu": p.nu, "kappa": p.kappa },
            "region": label,
            "distinct_roots": rs.len(),
        }),
    )))
}

pub fn curve_table(name: &str, command: &str, kappa: f64, resolution: usize) -> CliResult<Table> {
    positive("kappa", kappa)?;
    if resolution < 2 {
        return usage("--resolution must be at least 2");
    }
    let part = Partition::with_resolution(kappa, resolution)?;
    let mut t = Table::new(name, command, &["branch", "delta", "nu", "piece"]);
    t.param("kappa", fmt_f64(kappa)).param("resolution", resolution);
    special_results(&mut t, kappa)?;
    for c in &part.curves {
        for (k, piece) in c.pieces.iter().enumerate() {
            for [d, n] in &piece.points {
                t.push(vec![c.branch.name().into(), (*d).into(), (*n).into(), k.into()]);
            }
        }
    }
    Ok(t)
}

pub fn special_results(t: &mut Table, kappa: f64) -> CliResult<()> {
    let sp = special_points(kappa)?;
    t.result("regime", format!("{:?}", sp.regime));
    for (i, n) in sp.n.iter().enumerate() {
        t.result(&format!("n{}", i + 1), fmt_f64(*n));
    }
    t.result("m1", fmt_f64(sp.m1)).result("m2", fmt_f64(sp.m2));
    if let Some(m3) = sp.m3 {
        t.result("m3", fmt_f64(m3));
    }
    if let Some(d) = sp.delta_star {
        t.result("delta_star", fmt_f64(d));
    }
    Ok(())
}

fn curves(a: &CurvesArgs) -> CliResult<Outcome> {
    let name = format!("curves_kappa{}", fmt_f64(a.kappa));
    Ok(Outcome::tables(vec![curve_table(&name, "curves", a.kappa, a.resolution)?]))
}

pub fn domain_table(name: &str, command: &str, a: &DomainArgs) -> CliResult<Table> {
    span("delta-min", a.delta_min, "delta-max", a.delta_max)?;
    span("kappa-min", a.kappa_min, "kappa-max", a.kappa_max)?;
    let mask = multiple_root_domain((a.delta_min, a.delta_max), (a.kappa_min, a.kappa_max), a.nx, a.ny)?;
    let mut t = Table::new(name, command, &[]);
    t.param("delta-min", fmt_f64(a.delta_min))
        .param("delta-max", fmt_f64(a.delta_max))
        .param("kappa-min", fmt_f64(a.kappa_min))
        .param("kappa-max", fmt_f64(a.kappa_max))
        .param("nx", a.nx)
        .param("ny", a.ny);
    let inside = mask.cells.iter().filter(|c| **c).count();
    t.result("fraction", fmt_f64(inside as f64 / mask.cells.len() as f64));
    t.extra.extend(mask.header().lines().map(|l| l.trim_start_matches("# ").to_string()));
    t.extra.push("rows: kappa ascending; columns: delta ascending; 1 = multiple roots exist".into());
    for i in 0..mask.ny {
        t.push((0..mask.nx).map(|j| mask.get(i, j).into()).collect());
    }
    Ok(t)
}

fn domain(a: &DomainArgs) -> CliResult<Outcome> {
    Ok(Outcome::tables(vec![domain_table("domain", "domain", a)?]))
}

pub fn build_model(a: &ModelArgs) -> CliResult<ModelParams> {
    positive("lambda", a.lambda)?;
    positive("kappa", a.kappa)?;
    let mut m = ModelParams::from_phase(a.lambda, &PhaseParams::new(a.delta, a.nu, a.kappa));
    m.alpha.extend(&a.alpha_tail);
    m.beta.extend(&a.beta_tail);
    m.gamma.extend(&a.gamma_tail);
    m.validate()?;
    Ok(m)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn model_params(t: &mut Table, a: &ModelArgs) {
    t.param("lambda", fmt_f64(a.lambda));
    phase_params(t, &PhaseParams::new(a.delta, a.nu, a.kappa));
    for (k, v) in [("alpha-tail", &a.alpha_tail), ("beta-tail", &a.beta_tail), ("gamma-tail", &a.gamma_tail)] {
        if !v.is_empty() {
            t.param(k, join(v));
        }
    }
}

fn model_json(a: &ModelArgs) -> Value {
    json!({
        "lambda": a.lambda, "delta": a.delta, "nu": a.nu, "kappa": a.kappa,
        "alpha_tail": a.alpha_tail, "beta_tail": a.beta_tail, "gamma_tail": a.gamma_tail,
    })
}

fn branch(b: BranchArg) -> Branch {
    match b {
        BranchArg::Plus => Branch::Plus,
        BranchArg::Minus => Branch::Minus,
    }
}

/// The root nearest `sigma` and its series.
pub fn series_near(
    m: &ModelParams,
    sigma: f64,
    b: Branch,
    order: Option<usize>,
    opts: &RootOptions,
) -> CliResult<(PhaseRoot, SeriesSolution)> {
    let rs = find_roots(&m.phase(), opts)?;
    let Some(root) =
        rs.iter().copied().min_by(|a, b| angle_dist(a.sigma, sigma).total_cmp(&angle_dist(b.sigma, sigma)))
    else {
        return usage("the phase function has no roots at these parameters");
    };
    if angle_dist(root.sigma, sigma) > 0.1 {
        let at: Vec<String> = rs.iter().map(|r| format!("{:.6}", r.sigma)).collect();
        return usage(format!("no root within 0.1 of sigma={sigma}; roots at [{}]", at.join(", ")));
    }
    let case = SeriesCase::for_multiplicity(root.multiplicity, b)
        .ok_or_else(|| CliError::Usage(format!("multiplicity {} unsupported", root.multiplicity)))?;
    let s = build_series(m, &root, b, order.unwrap_or(case.max_order()))?;
    Ok((root, s))
}

fn pick(m: &ModelParams, r: &RootPick) -> CliResult<(PhaseRoot, SeriesSolution)> {
    series_near(m, r.sigma, branch(r.branch), r.order, &root_options(r.tol_root, r.tol_sep)?)
}

fn pick_params(t: &mut Table, r: &RootPick) {
    t.param("sigma", fmt_f64(r.sigma)).param("branch", format!("{:?}", r.branch).to_lowercase());
    if let Some(k) = r.order {
        t.param("order", k);
    }
    t.param("tol-root", fmt_f64(r.tol_root)).param("tol-sep", fmt_f64(r.tol_sep));
}

pub fn series_record(s: &SeriesSolution) -> Value {
    json!({
        "case": s.case,
        "sigma": s.sigma,
        "step": s.step(),
        "order": s.order,
        "rho_lead": s.rho_lead,
        "rho": s.rho,
        "psi": s.psi,
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

fn series(a: &SeriesArgs) -> CliResult<Outcome> {
    positive("tau-min", a.tau_min)?;
    span("tau-min", a.tau_min, "tau-max", a.tau_max)?;
    if a.samples < 2 {
        return usage("--samples must be at least 2");
    }
    let m = build_model(&a.model)?;
    let (root, s) = pick(&m, &a.root)?;
    let mut t = Table::new("series", "series", &["tau", "rho", "psi", "rho_dev"]);
    model_params(&mut t, &a.model);
    pick_params(&mut t, &a.root);
    t.param("tau-min", fmt_f64(a.tau_min)).param("tau-max", fmt_f64(a.tau_max)).param("samples", a.samples);
    t.result("root_sigma", fmt_f64(root.sigma))
        .result("multiplicity", root.multiplicity)
        .result("case", format!("{:?}", s.case))
        .result("order", s.order);
    for tau in linspace(a.tau_min, a.tau_max, a.samples) {
        let p = s.point(tau)?;
        t.push(vec![tau.into(), p.rho.into(), p.psi.into(), p.rho_dev.into()]);
    }
    let mut record = series_record(&s);
    record["params"] = model_json(&a.model);
    Ok(Outcome::Files { tables: vec![t], json: vec![("series_coeffs".into(), report("series", record))] })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn residual(a: &ResidualArgs) -> CliResult<Outcome> {
    positive("tau-min", a.tau_min)?;
    span("tau-min", a.tau_min, "tau-max", a.tau_max)?;
    if a.points < 2 {
        return usage("--points must be at least 2");
    }
    let m = build_model(&a.model)?;
    let (_, s) = pick(&m, &a.root)?;
    let mut t = Table::new("residual", "residual", &["tau", "res_rho", "res_psi", "norm"]);
    model_params(&mut t, &a.model);
    pick_params(&mut t, &a.root);
    t.param("tau-min", fmt_f64(a.tau_min)).param("tau-max", fmt_f64(a.tau_max)).param("points", a.points);
    let taus = logspace(a.tau_min, a.tau_max, a.points);
    let mut norms = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let (r, q) = residual_norm(&s, &m, tau)?;
        let n = r.abs().max(q.abs());
        norms.push(n);
        t.push(vec![tau.into(), r.into(), q.into(), n.into()]);
    }
    let expected = -((s.order + 1) as f64) * s.step();
    t.result("case", format!("{:?}", s.case)).result("order", s.order);
    t.result("loglog_slope", fmt_f64(loglog_slope(&taus, &norms))).result("expected_slope", fmt_f64(expected));
    Ok(Outcome::tables(vec![t]))
}

fn stability(a: &StabilityArgs) -> CliResult<Outcome> {
    let m = build_model(&a.model)?;
    let (root, s) = pick(&m, &a.root)?;
    let verdict = classify_stability(&root, &s, &m)?;
    let fit = exponent_power_fit(&root, &s, &m, (1e3, 1e6), 25)?;
    let (zp, zm) = linearization_exponents(&root, &s, &m, 1e4)?;
    let mut body = json!({
        "params": model_json(&a.model),
        "root": root_json(&root),
        "series": series_record(&s),
        "verdict": verdict,
        "exponent_power_fit": fit,
        "exponents_at_1e4": [[zp.re, zp.im], [zm.re, zm.im]],
    });
    if a.verify {
        positive("tau0", a.tau0)?;
        span("tau0", a.tau0, "tau-end", a.tau_end)?;
        let kick = (a.kick, a.kick);
        if verdict.status == Status::Unstable {
            let o = PerturbOptions { escape: Some(0.1), ..Default::default() };
            let run = integrate_perturbation(&m, &s, a.tau0, kick, a.tau_end, Reference::Series, &o)?;
            body["perturbation"] = json!({ "reference": "series", "kick": a.kick, "escaped_at": run.escaped_at });
        } else {
            let frame = LyapunovFrame::new(&root, &s, &m)?;
            let o = PerturbOptions::default();
            let run = integrate_perturbation(&m, &s, a.tau0, kick, a.tau_end, Reference::Integrated, &o)?;
            let rep = verify_decrease(&frame, &run, a.kappa_margin)?;
            body["perturbation"] = json!({ "reference": "integrated", "kick": a.kick, "decayed_at": run.decayed_at });
            body["decrease"] = serde_json::to_value(&rep).expect("report serializes");
        }
    }
    Ok(Outcome::Report(report("stability", body)))
}

fn sim_options(mode: ModeArg, rtol: f64, atol: f64, samples: usize) -> CliResult<SimOptions> {
    positive("rtol", rtol)?;
    positive("atol", atol)?;
    if samples < 2 {
        return usage("--samples must be at least 2");
    }
    let mode = match mode {
        ModeArg::Polar => Mode::Polar,
        ModeArg::Cartesian => Mode::Cartesian,
    };
    Ok(SimOptions { mode, rtol, atol, samples, ..Default::default() })
}

fn simulate(a: &SimulateArgs) -> CliResult<Outcome> {
    let m = build_model(&a.model)?;
    let o = sim_options(a.mode, a.rtol, a.atol, a.samples)?;
    let mut t = Table::new("trajectory", "simulate", &["tau", "rho", "psi"]);
    model_params(&mut t, &a.model);
    let init = match (a.from_series, a.rho0, a.psi0) {
        (Some(sigma), _, _) => {
            t.param("from-series", fmt_f64(sigma));
            let (_, s) = series_near(&m, sigma, Branch::Plus, None, &RootOptions::default())?;
            s.point(a.tau0).map(|p| (p.rho, p.psi))?
        }
        (None, Some(r), Some(p)) => {
            t.param("rho0", fmt_f64(r)).param("psi0", fmt_f64(p));
            (r, p)
        }
        _ => return usage("give --rho0 and --psi0, or --from-series"),
    };
    t.param("tau0", fmt_f64(a.tau0)).param("tau-end", fmt_f64(a.tau_end));
    t.param("mode", format!("{:?}", a.mode).to_lowercase());
    t.param("rtol", fmt_f64(a.rtol)).param("atol", fmt_f64(a.atol)).param("samples", a.samples);
    let tr = integrate(&m, init, (a.tau0, a.tau_end), &o)?;
    capture_results(&mut t, &tr, m.lambda)?;
    for i in 0..tr.len() {
        t.push(vec![tr.tau[i].into(), tr.rho[i].into(), tr.psi[i].into()]);
    }
    Ok(Outcome::tables(vec![t]))
}

pub fn capture_results(t: &mut Table, tr: &autores::Trajectory, lambda: f64) -> CliResult<autores::Capture> {
    let c = detect_capture(tr, lambda, &CaptureOptions::default())?;
    t.result("captured", c.captured);
    t.result("sigma_est", c.sigma_est.map_or("none".into(), fmt_f64));
    t.result("steps_accepted", tr.meta.stats.accepted).result("steps_rejected", tr.meta.stats.rejected);
    Ok(c)
}

fn oscillator(a: &OscillatorArgs) -> CliResult<Outcome> {
    let m = build_model(&a.model)?;
    positive("epsilon", a.epsilon)?;
    positive("tau0", a.tau0)?;
    span("tau0", a.tau0, "tau-end", a.tau_end)?;
    positive("dt", a.dt)?;
    positive("rtol", a.rtol)?;
    positive("atol", a.atol)?;
    let p = OscillatorParams::for_model(a.epsilon, &m);
    let (t0, t1) = (4.0 * a.tau0 / a.epsilon, 4.0 * a.tau_end / a.epsilon);
    let mut t = Table::new("oscillator", "oscillator", &["t", "x", "xdot"]);
    model_params(&mut t, &a.model);
    t.param("epsilon", fmt_f64(a.epsilon));
    let init = match a.from_series {
        Some(sigma) => {
            t.param("from-series", fmt_f64(sigma));
            let (_, s) = series_near(&m, sigma, Branch::Plus, None, &RootOptions::default())?;
            let pt = s.point(a.tau0)?;
            p.lift(t0, pt.rho, pt.psi)
        }
        None => [0.0, 0.0],
    };
    t.param("tau0", fmt_f64(a.tau0)).param("tau-end", fmt_f64(a.tau_end)).param("dt", fmt_f64(a.dt));
    t.param("rtol", fmt_f64(a.rtol)).param("atol", fmt_f64(a.atol));
    let run = simulate_full_oscillator(&p, init, (t0, t1), a.dt, a.rtol, a.atol)?;
    t.result("vartheta", fmt_f64(p.vartheta)).result("nu_oscillator", fmt_f64(p.nu));
    t.result("t0", fmt_f64(t0)).result("t_end", fmt_f64(t1));
    t.result("steps_accepted", run.stats.accepted);
    for i in 0..run.t.len() {
        t.push(vec![run.t[i].into(), run.x[i].into(), run.xdot[i].into()]);
    }
    Ok(Outcome::tables(vec![t]))
}

fn basin(a: &BasinArgs) -> CliResult<Outcome> {
    let m = build_model(&a.model)?;
    span("rho-min", a.rho_min, "rho-max", a.rho_max)?;
    span("psi-min", a.psi_min, "psi-max", a.psi_max)?;
    positive("tau0", a.tau0)?;
    span("tau0", a.tau0, "tau-end", a.tau_end)?;
    let grid = InitGrid {
        rho: (a.rho_min, a.rho_max),
        psi: (a.psi_min, a.psi_max),
        n_rho: a.n_rho,
        n_psi: a.n_psi,
        jitter_seed: a.seed,
    };
    let mask = basin_sample(&m, &grid, (a.tau0, a.tau_end), &SimOptions::default(), &CaptureOptions::default())?;
    let mut t = Table::new("basin", "basin", &["i_psi", "j_rho", "rho0", "psi0", "captured"]);
    model_params(&mut t, &a.model);
    t.param("rho-min", fmt_f64(a.rho_min)).param("rho-max", fmt_f64(a.rho_max));
    t.param("psi-min", fmt_f64(a.psi_min)).param("psi-max", fmt_f64(a.psi_max));
    t.param("n-rho", a.n_rho).param("n-psi", a.n_psi);
    if let Some(s) = a.seed {
        t.param("seed", s);
    }
    t.param("tau0", fmt_f64(a.tau0)).param("tau-end", fmt_f64(a.tau_end));
    t.result("fraction", fmt_f64(mask.fraction));
    t.extra.push("rho_min rho_max psi_min psi_max n_rho n_psi".into());
    t.extra.push(format!(
        "{} {} {} {} {} {}",
        fmt_f64(a.rho_min),
        fmt_f64(a.rho_max),
        fmt_f64(a.psi_min),
        fmt_f64(a.psi_max),
        a.n_rho,
        a.n_psi
    ));
    for i in 0..grid.n_psi {
        for j in 0..grid.n_rho {
            let (r, p) = grid.point(i, j);
            t.push(vec![i.into(), j.into(), r.into(), p.into(), mask.get(i, j).into()]);
        }
    }
    Ok(Outcome::tables(vec![t]))
}

fn design(a: &DesignArgs) -> CliResult<Outcome> {
    let spec = DesignSpec { sigma_target: a.sigma, kappa: a.kappa, delta: a.delta };
    let d = design_excitation(&spec)?;
    let roots = find_roots(&d.phase(), &RootOptions::default())?;
    let hit = roots.iter().any(|r| angle_gap(r.sigma, d.sigma) < 1e-8 && r.multiplicity == 1);
    Ok(Outcome::Report(report(
        "design",
        json!({
            "spec": spec,
            "design": d,
            "roots": roots.iter().map(root_json).collect::<Vec<_>>(),
            "target_is_simple_root": hit,
        }),
    )))
}
