//! The phase function `P(σ;δ,ν,κ) = δ sin(2σ+ν) − sin σ + κ`, its derivatives,
//! and root finding with multiplicity classification.
//!
//! Roots are located by a derivative cascade: zeros of `P⁽⁴⁾` come from a grid
//! scan, and each lower derivative is monotone between consecutive zeros of the
//! next one, so plain bisection on those arcs finds every sign change. Tangential
//! zeros (even multiplicity) show up as zeros of a higher derivative at which the
//! lower ones are all below `tol_root`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::model::PhaseParams;

/// A root of the phase function with its derivative chain `P⁽⁰⁾..P⁽⁴⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRoot {
    pub sigma: f64,
    pub multiplicity: u8,
    pub derivs: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    pub tol_root: f64,
    pub tol_sep: f64,
    /// Grid intervals for the top-level scan of `P⁽⁴⁾`.
    pub scan_intervals: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub bracket_tol: f64,
    pub max_iter: usize,
    /// Simple roots closer than this are treated as one coalescing cluster.
    pub merge_dist: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol_root: 1e-9,
            tol_sep: 1e-4,
            scan_intervals: 4096,
            bracket_tol: 1e-13,
            max_iter: 200,
            merge_dist: 1e-6,
        }
    }
}

impl RootOptions {
    pub fn with_tolerances(tol_root: f64, tol_sep: f64) -> Self {
        Self { tol_root, tol_sep, ..Self::default() }
    }
}

/// `dʲP/dσʲ` for `j = order`, in closed form. Orders above 4 are rejected.
pub fn eval_p(sigma: f64, p: &PhaseParams, order: usize) -> Result<f64> {
    if order > 4 {
        return Err(Error::Domain(format!("derivative order {order} outside 0..=4")));
    }
    Ok(deriv(sigma, p, order))
}

/// Derivative of any order; the pattern is periodic with period 4 in `j`.
pub(crate) fn deriv(sigma: f64, p: &PhaseParams, j: usize) -> f64 {
    let (s2, c2) = (2.0 * sigma + p.nu).sin_cos();
    let (s1, c1) = sigma.sin_cos();
    let scale = p.delta * f64::powi(2.0, j as i32);
    let constant = if j == 0 { p.kappa } else { 0.0 };
    match j % 4 {
        0 => scale * s2 - s1 + constant,
        1 => scale * c2 - c1,
        2 => -scale * s2 + s1,
        _ => -scale * c2 + c1,
    }
}

/// `[P, P′, P″, P‴, P⁗]` at `sigma`.
pub fn derivs(sigma: f64, p: &PhaseParams) -> [f64; 5] {
    let (s2, c2) = (2.0 * sigma + p.nu).sin_cos();
    let (s1, c1) = sigma.sin_cos();
    let d = p.delta;
    [d * s2 - s1 + p.kappa, 2.0 * d * c2 - c1, -4.0 * d * s2 + s1, -8.0 * d * c2 + c1, 16.0 * d * s2 - s1]
}

fn wrap(sigma: f64) -> f64 {
    let s = sigma.rem_euclid(TAU);
    if TAU - s < 1e-13 {
        0.0
    } else {
        s
    }
}

/// Circular distance on `[0, 2π)`.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, opts: &RootOptions) -> Result<f64> {
    let (a0, b0) = (lo, hi);
    let mut flo = f(lo);
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= opts.bracket_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::Bracket { msg: "bisection did not converge".into(), lo: a0, hi: b0 })
}

/// Zeros of `f` on the circle, given sorted breakpoints between which `f` is monotone.
fn zeros_on_arcs(f: &dyn Fn(f64) -> f64, breaks: &[f64], opts: &RootOptions) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let n = breaks.len();
    for i in 0..n {
        let a = breaks[i];
        let b = if i + 1 < n { breaks[i + 1] } else { breaks[0] + TAU };
        if b <= a {
            continue;
        }
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            out.push(wrap(a));
        } else if fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            out.push(wrap(bisect(f, a, b, opts)?));
        }
    }
    Ok(out)
}

fn grid_zeros(f: &dyn Fn(f64) -> f64, opts: &RootOptions) -> Result<Vec<f64>> {
    let n = opts.scan_intervals.max(8);
    let h = TAU / n as f64;
    let mut out = Vec::new();
    let mut prev = f(0.0);
    for i in 0..n {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let fb = f(b);
        if prev == 0.0 {
            out.push(wrap(a));
        } else if fb != 0.0 && (prev < 0.0) != (fb < 0.0) {
            out.push(wrap(bisect(f, a, b, opts)?));
        }
        prev = fb;
    }
    Ok(normalize(out))
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    v
}

/// Zeros of `P⁽ʲ⁾` for `j = 4, 3, 2, 1, 0` (index = derivative order).
fn cascade(p: &PhaseParams, opts: &RootOptions) -> Result<[Vec<f64>; 5]> {
    let f4 = |s: f64| deriv(s, p, 4);
    let z4 = grid_zeros(&f4, opts)?;
    let mut levels: [Vec<f64>; 5] = Default::default();
    levels[4] = z4;
    for j in (0..4).rev() {
        let f = |s: f64| deriv(s, p, j);
        let breaks = &levels[j + 1];
        let z = if breaks.is_empty() { grid_zeros(&f, opts)? } else { normalize(zeros_on_arcs(&f, breaks, opts)?) };
        levels[j] = z;
    }
    Ok(levels)
}

fn multiplicity(d: &[f64; 5], tol_root: f64) -> u8 {
    (1..=4).find(|&j| d[j].abs() > tol_root).unwrap_or(4) as u8
}

/// Newton steps on `P⁽ᵐ⁻¹⁾`, kept only while they shrink the residual.
fn polish(sigma: f64, m: u8, p: &PhaseParams) -> f64 {
    let j = (m - 1) as usize;
    let mut s = sigma;
    for _ in 0..8 {
        let f = deriv(s, p, j);
        let df = deriv(s, p, j + 1);
        if f == 0.0 || df == 0.0 {
            break;
        }
        let step = f / df;
        if step.abs() > 1e-3 {
            break;
        }
        let t = s - step;
        if deriv(t, p, j).abs() >= f.abs() {
            break;
        }
        s = t;
    }
    wrap(s)
}

fn flat_between(a: f64, b: f64, p: &PhaseParams, tol: f64) -> bool {
    let mut d = (b - a).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    (1..8).all(|i| deriv(a + d * i as f64 / 8.0, p, 0).abs() < tol)
}

/// All roots of `P` in `[0, 2π)`, sorted by σ, with multiplicities.
pub fn find_roots(p: &PhaseParams, opts: &RootOptions) -> Result<Vec<PhaseRoot>> {
    if !(opts.tol_root > 0.0 && opts.tol_sep > 0.0 && opts.tol_root < opts.tol_sep) {
        return Err(Error::Domain("require 0 < tol_root < tol_sep".into()));
    }
    if !(p.delta.is_finite() && p.nu.is_finite() && p.kappa.is_finite()) {
        return Err(Error::Domain("non-finite phase parameters".into()));
    }
    let levels = cascade(p, opts)?;
    let tol = opts.tol_root;

    let mut cand: Vec<f64> = levels[0].clone();
    for (j, zs) in levels.iter().enumerate().skip(1).take(3) {
        for &s in zs {
            let d = derivs(s, p);
            if d[..j].iter().all(|v| v.abs() < tol) {
                cand.push(s);
            }
        }
    }
    let cand = normalize(cand);
    if cand.is_empty() {
        return Ok(Vec::new());
    }

    // Group circularly adjacent candidates that belong to one coalescing cluster.
    let n = cand.len();
    let joined = |i: usize| {
        let (a, b) = (cand[i], cand[(i + 1) % n]);
        angle_dist(a, b) < opts.merge_dist || flat_between(a, b, p, tol)
    };
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    if n == 1 {
        clusters.push(cand.clone());
    } else {
        let start = (0..n).find(|&i| !joined(i)).map(|i| (i + 1) % n);
        match start {
            None => clusters.push(cand.clone()),
            Some(s0) => {
                let mut cur = Vec::new();
                for k in 0..n {
                    let i = (s0 + k) % n;
                    cur.push(cand[i]);
                    if !joined(i) {
                        clusters.push(std::mem::take(&mut cur));
                    }
                }
            }
        }
    }

    let mut roots: Vec<PhaseRoot> = clusters
        .into_iter()
        .map(|c| {
            let best = c
                .iter()
                .map(|&s| {
                    let d = derivs(s, p);
                    (s, multiplicity(&d, tol), d[0].abs())
                })
                .max_by(|a, b| a.1.cmp(&b.1).then(b.2.total_cmp(&a.2)))
                .expect("cluster is non-empty");
            let sigma = polish(best.0, best.1, p);
            let d = derivs(sigma, p);
            PhaseRoot { sigma, multiplicity: multiplicity(&d, tol), derivs: d }
        })
        .filter(|r| r.derivs[0].abs() < tol)
        .collect();
    roots.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    Ok(roots)
}

/// Roots with default tolerances.
pub fn roots(p: &PhaseParams) -> Result<Vec<PhaseRoot>> {
    find_roots(p, &RootOptions::default())
}

/// Number of sign changes of `P` on a uniform grid of `samples` points.
pub fn sign_changes(p: &PhaseParams, samples: usize) -> usize {
    let h = TAU / samples as f64;
    let mut prev = deriv(0.0, p, 0);
    let mut count = 0;
    for i in 1..=samples {
        let v = deriv(i as f64 * h, p, 0);
        if (v < 0.0) != (prev < 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quadruple_point_derivatives() {
        let p = PhaseParams::new(-0.25, FRAC_PI_2, 0.75);
        let d = derivs(FRAC_PI_2, &p);
        for v in &d[..4] {
            assert!(v.abs() < 1e-15);
        }
        assert!((d[4] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn eval_matches_closed_form() {
        let p = PhaseParams::new(0.5, 0.0, 0.2);
        let v = eval_p(PI / 6.0, &p, 0).unwrap();
        assert!((v - (0.5 * (PI / 3.0).sin() - 0.5 + 0.2)).abs() < 1e-15);
        assert!((v - 0.13301).abs() < 1e-5);
        assert!(eval_p(0.0, &p, 5).is_err());
        assert_eq!(eval_p(0.0, &PhaseParams::new(0.0, 1.0, 0.0), 0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_pattern_matches_explicit_array() {
        let p = PhaseParams::new(-1.3, 0.7, 0.4);
        for &s in &[0.0, 0.3, 2.0, 5.9] {
            let d = derivs(s, &p);
            for (j, v) in d.iter().enumerate() {
                assert!((deriv(s, &p, j) - v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sine_roots() {
        let r = roots(&PhaseParams::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].sigma.abs() < 1e-12 && r[0].multiplicity == 1);
        assert!((r[1].sigma - PI).abs() < 1e-12 && r[1].multiplicity == 1);

        let r = roots(&PhaseParams::new(0.0, 0.0, 0.5)).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].sigma - PI / 6.0).abs() < 1e-12);
        assert!((r[1].sigma - 5.0 * PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn quadruple_root_found_once() {
        let r = roots(&PhaseParams::new(-0.25, FRAC_PI_2, 0.75)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 4);
        assert!((r[0].sigma - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn double_root_at_tangency() {
        // sin σ = 1 touches at π/2 when δ = 0, κ = 1.
        let r = roots(&PhaseParams::new(0.0, 0.3, 1.0)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].sigma - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn no_roots_when_kappa_large() {
        assert!(roots(&PhaseParams::new(0.1, 0.3, 2.0)).unwrap().is_empty());
    }

    #[test]
    fn tolerance_precondition() {
        let p = PhaseParams::new(0.0, 0.0, 0.5);
        assert!(find_roots(&p, &RootOptions::with_tolerances(1e-3, 1e-4)).is_err());
    }

    #[test]
    fn tiny_budget_reports_bracket() {
        let p = PhaseParams::new(0.3, 0.2, 0.5);
        let opts = RootOptions { max_iter: 3, ..RootOptions::default() };
        match find_roots(&p, &opts) {
            Err(Error::Bracket { lo, hi, .. }) => assert!(hi > lo),
            other => panic!("expected bracket error, got {other:?}"),
        }
    }
}
