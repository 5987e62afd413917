//! Datasets behind each figure, with the caption parameter values.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use autores::partition::{p_functions, Partition};
use autores::{find_roots, integrate, Branch, Error, ModelParams, PhaseParams, RootOptions, SimOptions};

use crate::args::{DomainArgs, FigureName};
use crate::commands::{capture_results, curve_table, domain_table, series_near, special_results, CliResult, Outcome};
use crate::output::{fmt_f64, Cell, Table};

const PANEL_KAPPAS: [f64; 4] = [0.4, 0.9, 1.0, 1.6];
const DELTA_RANGE: (f64, f64) = (-3.0, 3.0);
const DELTA_SAMPLES: usize = 1200;
const CURVE_RESOLUTION: usize = 2000;

pub fn figure(name: FigureName) -> CliResult<Outcome> {
    let tables = match name {
        FigureName::Fig1 => PANEL_KAPPAS.iter().map(|&k| p_table(k)).collect::<CliResult<_>>()?,
        FigureName::Fig2 => PANEL_KAPPAS
            .iter()
            .map(|&k| curve_table(&format!("fig2_kappa{}", fmt_f64(k)), "figure fig2", k, CURVE_RESOLUTION))
            .collect::<CliResult<_>>()?,
        FigureName::Fig3 | FigureName::Fig33 | FigureName::Fig34 => {
            let tag = match name {
                FigureName::Fig3 => "fig3",
                FigureName::Fig33 => "fig33",
                _ => "fig34",
            };
            [(0.4, FRAC_PI_2), (0.9, FRAC_PI_2), (1.6, FRAC_PI_4)]
                .iter()
                .zip(["a", "b", "c"])
                .map(|(&(k, nu), panel)| root_panel(tag, panel, k, nu))
                .collect::<CliResult<_>>()?
        }
        FigureName::Fig35 => {
            let k = 0.3f64.sqrt();
            [(0.5, lower_triple_nu(0.5)), (0.75, FRAC_PI_2), (k, 2.79)]
                .iter()
                .zip(["a", "b", "c"])
                .map(|(&(k, nu), panel)| root_panel("fig35", panel, k, nu))
                .collect::<CliResult<_>>()?
        }
        FigureName::Fig4 => {
            let a = DomainArgs { delta_min: -3.0, delta_max: 3.0, kappa_min: 0.01, kappa_max: 2.0, nx: 301, ny: 201 };
            vec![domain_table("fig4", "figure fig4", &a)?]
        }
        FigureName::Fig6 => fig6()?,
    };
    Ok(Outcome::tables(tables))
}

/// `ν` of the triple point with the smaller `ν` at this `κ`, on `κ² + 3δ² = 3/4`.
pub fn lower_triple_nu(kappa: f64) -> f64 {
    let delta = -((0.75 - kappa * kappa) / 3.0).sqrt();
    (-kappa * (1.0 + 32.0 * delta * delta) / (9.0 * delta)).asin()
}

/// Midpoint grid, so `δ = 0` (where `p₁, p₂` are singular) is never sampled.
fn delta_grid() -> impl Iterator<Item = f64> {
    let (lo, hi) = DELTA_RANGE;
    (0..DELTA_SAMPLES).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / DELTA_SAMPLES as f64)
}

fn p_table(kappa: f64) -> CliResult<Table> {
    let mut t = Table::new(format!("fig1_kappa{}", fmt_f64(kappa)), "figure fig1", &["delta", "p1", "p2"]);
    t.param("kappa", fmt_f64(kappa));
    special_results(&mut t, kappa)?;
    for d in delta_grid() {
        let (p1, p2) = p_functions(d, kappa)?;
        t.push(vec![d.into(), p1.into(), p2.into()]);
    }
    Ok(t)
}

fn root_count(kappa: f64, nu: f64, delta: f64) -> CliResult<usize> {
    Ok(find_roots(&PhaseParams::new(delta, nu, kappa), &RootOptions::default())?.len())
}

/// Pins the root-count jump near `delta` by bisection and reports the
/// multiple roots there. `None` when the count does not change across it.
fn multiple_roots_at(kappa: f64, nu: f64, delta: f64) -> CliResult<Option<(f64, Vec<(f64, u8)>)>> {
    let h = 2e-3;
    let (mut lo, mut hi) = (delta - h, delta + h);
    let (n_lo, n_hi) = (root_count(kappa, nu, lo)?, root_count(kappa, nu, hi)?);
    if n_lo == n_hi {
        return Ok(None);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if root_count(kappa, nu, mid)? == n_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    let loose = RootOptions::with_tolerances(1e-6, 1e-3);
    let roots = find_roots(&PhaseParams::new(d, nu, kappa), &loose)?;
    Ok(Some((d, roots.iter().filter(|r| r.multiplicity >= 2).map(|r| (r.sigma, r.multiplicity)).collect())))
}

fn root_panel(tag: &str, panel: &str, kappa: f64, nu: f64) -> CliResult<Table> {
    let columns = ["delta", "region", "n_roots", "k", "sigma", "multiplicity", "p1", "p2", "p3", "p4"];
    let mut t = Table::new(format!("{tag}{panel}"), format!("figure {tag}"), &columns);
    t.param("kappa", fmt_f64(kappa)).param("nu", fmt_f64(nu));
    t.param("delta-min", fmt_f64(DELTA_RANGE.0)).param("delta-max", fmt_f64(DELTA_RANGE.1));
    t.param("samples", DELTA_SAMPLES).param("curve-resolution", CURVE_RESOLUTION);
    let part = Partition::with_resolution(kappa, CURVE_RESOLUTION)?;
    let mut found: Vec<(f64, f64, u8)> = Vec::new();
    for c in &part.curves {
        let mut xs = c.crossings(nu);
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        t.result(
            &format!("{}_crossings", c.branch.name()),
            xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";"),
        );
        for x in xs {
            if let Some((d, rs)) = multiple_roots_at(kappa, nu, x)? {
                found.extend(rs.into_iter().map(|(s, m)| (d, s, m)));
            }
        }
    }
    // Triple and quadruple roots sit where the curves turn in ν, which a
    // crossing test can miss; they lie on κ² + 3δ² = 3/4.
    if kappa * kappa < 0.75 {
        let e = ((0.75 - kappa * kappa) / 3.0).sqrt();
        for d in [-e, e] {
            let rs = find_roots(&PhaseParams::new(d, nu, kappa), &RootOptions::default())?;
            found.extend(rs.iter().filter(|r| r.multiplicity >= 3).map(|r| (d, r.sigma, r.multiplicity)));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    found.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6);
    let listed: Vec<String> = found.iter().map(|(d, s, m)| format!("{}:{}:{}", fmt_f64(*d), fmt_f64(*s), m)).collect();
    t.result("multiple_roots_delta_sigma_multiplicity", listed.join(";"));
    for d in delta_grid() {
        let region = match part.classify(d, nu) {
            Ok(l) => format!("{l:?}"),
            Err(Error::Singular(_)) => String::new(),
            Err(e) => return Err(e.into()),
        };
        let roots = find_roots(&PhaseParams::new(d, nu, kappa), &RootOptions::default())?;
        if roots.is_empty() {
            let mut row = vec![d.into(), region.as_str().into(), 0usize.into()];
            row.resize(columns.len(), Cell::Empty);
            t.push(row);
        }
        for (k, r) in roots.iter().enumerate() {
            let mut row = vec![
                d.into(),
                region.as_str().into(),
                roots.len().into(),
                k.into(),
                r.sigma.into(),
                r.multiplicity.into(),
            ];
            row.extend(r.derivs[1..].iter().map(|v| Cell::Num(*v)));
            t.push(row);
        }
    }
    Ok(t)
}

struct Run {
    name: &'static str,
    phase: PhaseParams,
    sigma: f64,
    tau0: f64,
    tau_end: f64,
}

/// Black and blue start at `τ₀ = 20`; the `σ = 0` run (gray) only settles
/// onto its branch from a later start.
fn fig6_runs() -> [Run; 3] {
    [
        Run {
            name: "fig6_black",
            phase: PhaseParams::new(-2.0, 5.0 * PI / 6.0, 1.0),
            sigma: PI,
            tau0: 20.0,
            tau_end: 1000.0,
        },
        Run {
            name: "fig6_gray",
            phase: PhaseParams::new(-2.0 / 3f64.sqrt(), 2.0 * PI / 3.0, 1.0),
            sigma: 0.0,
            tau0: 200.0,
            tau_end: 2000.0,
        },
        Run {
            name: "fig6_blue",
            phase: PhaseParams::new(-1.5, PI / 6.0, 0.25),
            sigma: FRAC_PI_2,
            tau0: 20.0,
            tau_end: 1000.0,
        },
    ]
}

fn fig6() -> CliResult<Vec<Table>> {
    let o = SimOptions::default();
    fig6_runs()
        .iter()
        .map(|r| {
            let m = ModelParams::from_phase(1.0, &r.phase);
            let (_, s) = series_near(&m, r.sigma, Branch::Plus, None, &RootOptions::default())?;
            let p = s.point(r.tau0)?;
            let tr = integrate(&m, (p.rho, p.psi), (r.tau0, r.tau_end), &o)?;
            let mut t = Table::new(r.name, "figure fig6", &["tau", "rho", "psi"]);
            t.param("lambda", 1).param("delta", fmt_f64(r.phase.delta)).param("nu", fmt_f64(r.phase.nu));
            t.param("kappa", fmt_f64(r.phase.kappa)).param("from-series", fmt_f64(r.sigma));
            t.param("tau0", fmt_f64(r.tau0)).param("tau-end", fmt_f64(r.tau_end));
            t.param("mode", "polar").param("rtol", fmt_f64(o.rtol)).param("atol", fmt_f64(o.atol));
            t.param("samples", o.samples);
            capture_results(&mut t, &tr, m.lambda)?;
            for i in 0..tr.len() {
                t.push(vec![tr.tau[i].into(), tr.rho[i].into(), tr.psi[i].into()]);
            }
            Ok(t)
        })
        .collect()
}
