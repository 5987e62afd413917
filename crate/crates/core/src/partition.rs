//! Partition of the `(δ, ν)` plane by the number of roots of the phase function.
//!
//! A double root `P = P′ = 0` exists iff `sin ν = p_j(δ, κ)`, where
//! `p_j = (κ(2z_j² − 1) − z_j³)/δ` and `z_j = (4κ ∓ √(4κ² + 12δ² − 3))/3`
//! is the sine of the double root. The curves `s₋`, `s₀`, `s₊` are pieces of
//! these surfaces over δ-intervals that depend on the κ regime.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::model::PhaseParams;
use crate::phase::{find_roots, RootOptions};

const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    OmegaPlus,
    OmegaMinus,
    OmegaZero,
    OmegaStar,
    Boundary,
}

impl RegionLabel {
    /// Number of distinct simple roots in the region (`None` on a boundary).
    pub fn root_count(self) -> Option<usize> {
        match self {
            RegionLabel::OmegaPlus | RegionLabel::OmegaMinus => Some(4),
            RegionLabel::OmegaZero => Some(2),
            RegionLabel::OmegaStar => Some(0),
            RegionLabel::Boundary => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveBranch {
    SMinus,
    SZero,
    SPlus,
}

impl CurveBranch {
    pub fn name(self) -> &'static str {
        match self {
            CurveBranch::SMinus => "s_minus",
            CurveBranch::SZero => "s_zero",
            CurveBranch::SPlus => "s_plus",
        }
    }
}

/// Which root function a curve piece lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    P1,
    P2,
    /// The segment `δ = 0` that joins `s₀` at `κ = 1`.
    DeltaZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePiece {
    pub surface: Surface,
    /// Polyline of `(δ, ν)` points.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub branch: CurveBranch,
    pub kappa: f64,
    pub pieces: Vec<CurvePiece>,
}

impl BifurcationCurve {
    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.pieces.iter().flat_map(|p| p.points.iter().copied())
    }

    /// δ-coordinates where the curve crosses the horizontal line at `nu`.
    pub fn crossings(&self, nu: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            for w in piece.points.windows(2) {
                let ([d0, n0], [d1, n1]) = (w[0], w[1]);
                if (n0 - nu) * (n1 - nu) <= 0.0 && n0 != n1 {
                    let t = (nu - n0) / (n1 - n0);
                    out.push(d0 + t * (d1 - d0));
                } else if n0 == nu && n1 == nu {
                    out.push(d0);
                }
            }
        }
        out
    }

    /// Euclidean distance from `(delta, nu)` to the polyline.
    pub fn distance(&self, delta: f64, nu: f64) -> f64 {
        let q = [delta, nu];
        let mut best = f64::INFINITY;
        for piece in &self.pieces {
            if piece.points.len() == 1 {
                best = best.min(seg_dist2(piece.points[0], piece.points[0], q));
            }
            for w in piece.points.windows(2) {
                // Skip segments whose bounding box is already farther than `best`.
                let gap = |lo: f64, hi: f64, x: f64| (lo - x).max(x - hi).max(0.0);
                let gx = gap(w[0][0].min(w[1][0]), w[0][0].max(w[1][0]), delta);
                let gy = gap(w[0][1].min(w[1][1]), w[0][1].max(w[1][1]), nu);
                if gx * gx + gy * gy < best {
                    best = best.min(seg_dist2(w[0], w[1], q));
                }
            }
        }
        best.sqrt()
    }
}

fn seg_dist2(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let (wx, wy) = (p[0] - a[0], p[1] - a[1]);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 { ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (wx - t * vx).powi(2) + (wy - t * vy).powi(2)
}

fn discriminant(delta: f64, kappa: f64) -> f64 {
    4.0 * kappa * kappa + 12.0 * delta * delta - 3.0
}

/// The candidate sines `(z₁, z₂)` of a double root; `None` when the discriminant is negative.
pub fn z_functions(delta: f64, kappa: f64) -> (Option<f64>, Option<f64>) {
    let d = discriminant(delta, kappa);
    if d < -SNAP {
        return (None, None);
    }
    let r = d.max(0.0).sqrt();
    (Some((4.0 * kappa - r) / 3.0), Some((4.0 * kappa + r) / 3.0))
}

fn p_from_z(delta: f64, kappa: f64, z: Option<f64>) -> Option<f64> {
    let z = z?;
    if z.abs() > 1.0 + SNAP {
        return None;
    }
    let z = z.clamp(-1.0, 1.0);
    Some((kappa * (2.0 * z * z - 1.0) - z * z * z) / delta)
}

/// `(p₁, p₂)`; each `None` where the matching `z_j` is undefined or outside `[-1, 1]`.
pub fn p_functions(delta: f64, kappa: f64) -> Result<(Option<f64>, Option<f64>)> {
    if delta == 0.0 {
        return Err(Error::Singular("p_j is undefined at delta = 0".into()));
    }
    let (z1, z2) = z_functions(delta, kappa);
    Ok((p_from_z(delta, kappa, z1), p_from_z(delta, kappa, z2)))
}

fn p_j(j: usize, delta: f64, kappa: f64) -> Option<f64> {
    if delta == 0.0 {
        return None;
    }
    let (a, b) = p_functions(delta, kappa).ok()?;
    if j == 1 {
        a
    } else {
        b
    }
}

/// Numerator of `p₁`; even in δ, so roots of `p₁` come in `±` pairs.
fn p1_numerator(delta: f64, kappa: f64) -> Option<f64> {
    let z = z_functions(delta, kappa).0?;
    if z.abs() > 1.0 + SNAP {
        return None;
    }
    Some(kappa * (2.0 * z * z - 1.0) - z * z * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `0 < κ < 3/4`
    Low,
    /// `3/4 ≤ κ < 1`
    Mid,
    /// `κ = 1`
    One,
    /// `κ > 1`
    High,
}

impl Regime {
    /// Regime of κ, snapping values within 1e-12 of 3/4 or 1 onto the boundary.
    pub fn of(kappa: f64) -> (Regime, f64) {
        let k = if (kappa - 0.75).abs() < SNAP {
            0.75
        } else if (kappa - 1.0).abs() < SNAP {
            1.0
        } else {
            kappa
        };
        let r = if k < 0.75 {
            Regime::Low
        } else if k < 1.0 {
            Regime::Mid
        } else if k == 1.0 {
            Regime::One
        } else {
            Regime::High
        };
        (r, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoints {
    pub kappa: f64,
    pub regime: Regime,
    /// Roots of `p₁(·, κ) = 0`, ascending. Named `n₁ < n₃ < n₄ < n₂` for κ > 1.
    pub n: Vec<f64>,
    pub m1: f64,
    pub m2: f64,
    /// Present for κ ≥ 3/4.
    pub m3: Option<f64>,
    /// Present for κ < √3/2.
    pub delta_star: Option<f64>,
}

impl SpecialPoints {
    pub fn n1(&self) -> f64 {
        self.n[0]
    }
    pub fn n2(&self) -> f64 {
        *self.n.last().expect("p1 has roots")
    }
    pub fn n3(&self) -> Option<f64> {
        (self.n.len() >= 3).then(|| self.n[1])
    }
    pub fn n4(&self) -> Option<f64> {
        (self.n.len() >= 4).then(|| self.n[2])
    }
}

fn bisect_root(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The constants `n_i`, `m_i`, `δ*` bounding the curve pieces.
pub fn special_points(kappa: f64) -> Result<SpecialPoints> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let (regime, k) = Regime::of(kappa);
    let lo = ((3.0 - 4.0 * k * k) / 12.0).max(0.0).sqrt();
    let hi = k + 1.0;
    let g = |d: f64| p1_numerator(d, k).unwrap_or(f64::NAN);
    let samples = 20_000;
    let mut pos = Vec::new();
    let step = (hi - lo.max(1e-6)) / samples as f64;
    // Near δ = 0 the numerator is O(δ²) at κ = 1 and rounding noise would fake sign changes.
    let start = lo.max(1e-6);
    let mut prev = (start, g(start));
    for i in 1..=samples {
        let d = lo.max(1e-6) + i as f64 * step;
        let v = g(d);
        if prev.1.is_finite() && v.is_finite() && (prev.1 < 0.0) != (v < 0.0) {
            pos.push(bisect_root(&g, prev.0, d));
        }
        prev = (d, v);
    }
    let mut n: Vec<f64> = pos.iter().flat_map(|&d| [-d, d]).collect();
    if regime == Regime::One {
        // p₁ has a removable zero at δ = 0 when κ = 1.
        n.push(0.0);
    }
    n.sort_by(|a, b| a.total_cmp(b));
    let s2 = 2f64.sqrt();
    let m1 = if k < 0.75 { k - 1.0 } else { -(s2 * k + (2.0 * k * k - 1.0).max(0.0).sqrt()) / 8f64.sqrt() };
    let delta_star = (k < 3f64.sqrt() / 2.0).then(|| -((3.0 - 4.0 * k * k) / 12.0).sqrt());
    if n.len() < 2 {
        return Err(Error::Bracket { msg: "could not locate the zeros of p1".into(), lo, hi });
    }
    Ok(SpecialPoints { kappa: k, regime, n, m1, m2: k + 1.0, m3: (k >= 0.75).then_some(k - 1.0), delta_star })
}

/// Samples of one preimage branch (`upper` = `π − arcsin p`) over `[a, b]`.
fn trace_piece(j: usize, a: f64, b: f64, kappa: f64, upper: bool, base: usize, max_gap: f64) -> Vec<Vec<[f64; 2]>> {
    let (a, b) = (a.min(b), a.max(b));
    let eval = |d: f64| -> Option<[f64; 2]> {
        let p = p_j(j, d, kappa)?;
        if !(-SNAP..=1.0 + 1e-9).contains(&p) {
            return None;
        }
        // asin is ill-conditioned at the ends; snap so the curve reaches ν = 0 and π/2 exactly.
        let s = if p > 1.0 - 1e-9 {
            FRAC_PI_2
        } else if p < 1e-12 {
            0.0
        } else {
            p.asin()
        };
        let nu = if upper { PI - s } else { s };
        (nu < PI).then_some([d, nu])
    };
    let mut pts: Vec<(f64, Option<[f64; 2]>)> = (0..=base)
        .map(|i| {
            let d = a + (b - a) * i as f64 / base as f64;
            (d, eval(d))
        })
        .collect();
    // Insert midpoints until consecutive points are close in the (δ, ν) plane.
    for _ in 0..40 {
        let mut next = Vec::with_capacity(pts.len() * 2);
        let mut changed = false;
        for w in pts.windows(2) {
            next.push(w[0]);
            if let (Some(p), Some(q)) = (w[0].1, w[1].1) {
                if (p[0] - q[0]).hypot(p[1] - q[1]) > max_gap && (w[1].0 - w[0].0) > 1e-14 {
                    let d = 0.5 * (w[0].0 + w[1].0);
                    next.push((d, eval(d)));
                    changed = true;
                }
            }
        }
        next.push(*pts.last().expect("non-empty"));
        pts = next;
        if !changed {
            break;
        }
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (_, p) in pts {
        match p {
            Some(p) => cur.push(p),
            None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn pieces_on(j: usize, a: f64, b: f64, kappa: f64, res: usize) -> Vec<CurvePiece> {
    let surface = if j == 1 { Surface::P1 } else { Surface::P2 };
    [false, true]
        .into_iter()
        .flat_map(|upper| trace_piece(j, a, b, kappa, upper, res, 2e-3))
        .map(|points| CurvePiece { surface, points })
        .collect()
}

/// Traced `s₋`, `s₀`, `s₊` curves for the regime of κ. `delta_resolution`
/// is the number of base δ-samples per piece before adaptive refinement.
pub fn bifurcation_curves(kappa: f64, delta_resolution: usize) -> Result<Vec<BifurcationCurve>> {
    let sp = special_points(kappa)?;
    let k = sp.kappa;
    let res = delta_resolution.max(8);
    let curve = |branch, pieces| BifurcationCurve { branch, kappa: k, pieces };
    let s_plus = curve(CurveBranch::SPlus, pieces_on(1, sp.n2(), sp.m2, k, res));
    let mut out = Vec::new();
    match sp.regime {
        Regime::Low => {
            let ds = sp.delta_star.expect("delta_star defined for kappa < 3/4");
            let mut pieces = pieces_on(1, sp.n1(), ds, k, res);
            pieces.extend(pieces_on(2, sp.m1, ds, k, res));
            out.push(curve(CurveBranch::SMinus, pieces));
        }
        Regime::Mid => {
            let m3 = sp.m3.expect("m3 defined for kappa >= 3/4");
            out.push(curve(CurveBranch::SMinus, pieces_on(1, sp.n1(), sp.m1, k, res)));
            out.push(curve(CurveBranch::SZero, pieces_on(1, sp.m1, m3, k, res)));
        }
        Regime::One => {
            let n3 = sp.n3().expect("three zeros at kappa = 1");
            out.push(curve(CurveBranch::SMinus, pieces_on(1, sp.n1(), sp.m1, k, res)));
            let mut pieces = pieces_on(1, sp.m1, n3, k, res);
            let line = (0..=res).map(|i| [0.0, PI * i as f64 / (res + 1) as f64]).collect();
            pieces.push(CurvePiece { surface: Surface::DeltaZero, points: line });
            out.push(curve(CurveBranch::SZero, pieces));
        }
        Regime::High => {
            let (n3, n4) = (sp.n3().expect("n3"), sp.n4().expect("n4"));
            let m3 = sp.m3.expect("m3");
            out.push(curve(CurveBranch::SMinus, pieces_on(1, sp.n1(), sp.m1, k, res)));
            let mut pieces = pieces_on(1, sp.m1, n3, k, res);
            pieces.extend(pieces_on(1, m3, n4, k, res));
            out.push(curve(CurveBranch::SZero, pieces));
        }
    }
    out.push(s_plus);
    Ok(out)
}

/// The curves of one κ together with their special points, for repeated queries.
#[derive(Debug, Clone)]
pub struct Partition {
    pub special: SpecialPoints,
    pub curves: Vec<BifurcationCurve>,
}

impl Partition {
    pub fn new(kappa: f64) -> Result<Self> {
        Self::with_resolution(kappa, 400)
    }

    pub fn with_resolution(kappa: f64, delta_resolution: usize) -> Result<Self> {
        Ok(Self { special: special_points(kappa)?, curves: bifurcation_curves(kappa, delta_resolution)? })
    }

    pub fn kappa(&self) -> f64 {
        self.special.kappa
    }

    pub fn curve(&self, b: CurveBranch) -> Option<&BifurcationCurve> {
        self.curves.iter().find(|c| c.branch == b)
    }

    /// Distance from `(delta, nu)` to the nearest emitted curve.
    pub fn distance_to_curves(&self, delta: f64, nu: f64) -> f64 {
        self.curves.iter().map(|c| c.distance(delta, nu)).fold(f64::INFINITY, f64::min)
    }

    /// Region from the root count, with `Ω₊`/`Ω₋` decided by which of `s₊`,
    /// `s₋` lies nearer to the point.
    pub fn classify(&self, delta: f64, nu: f64) -> Result<RegionLabel> {
        let p = PhaseParams::new(delta, nu, self.kappa());
        let roots = find_roots(&p, &RootOptions::default())?;
        if roots.iter().any(|r| r.multiplicity >= 2) {
            return Ok(RegionLabel::Boundary);
        }
        Ok(match roots.len() {
            0 => RegionLabel::OmegaStar,
            4 => self.plus_or_minus(delta, nu),
            _ => RegionLabel::OmegaZero,
        })
    }

    fn plus_or_minus(&self, delta: f64, nu: f64) -> RegionLabel {
        let near = |b| self.curve(b).map(|c| c.distance(delta, nu)).unwrap_or(f64::INFINITY);
        let (dp, dm) = (near(CurveBranch::SPlus), near(CurveBranch::SMinus));
        if dp.is_finite() || dm.is_finite() {
            if dp <= dm {
                RegionLabel::OmegaPlus
            } else {
                RegionLabel::OmegaMinus
            }
        } else if delta > 0.0 {
            RegionLabel::OmegaPlus
        } else {
            RegionLabel::OmegaMinus
        }
    }

    /// Region from the set definitions alone (no root finding): right of the
    /// outermost `s₊` crossing, left of the outermost `s₋` crossing, the
    /// explicit `Ω*` inequalities, and `Ω₀` for the rest.
    pub fn region_geometric(&self, delta: f64, nu: f64) -> RegionLabel {
        let extreme = |b, max: bool| {
            let xs = self.curve(b).map(|c| c.crossings(nu)).unwrap_or_default();
            xs.into_iter().reduce(|a, x| if max == (x > a) { x } else { a })
        };
        if let Some(dp) = extreme(CurveBranch::SPlus, true) {
            if delta > dp {
                return RegionLabel::OmegaPlus;
            }
        }
        if let Some(dm) = extreme(CurveBranch::SMinus, false) {
            if delta < dm {
                return RegionLabel::OmegaMinus;
            }
        }
        if self.in_omega_star(delta, nu) {
            return RegionLabel::OmegaStar;
        }
        RegionLabel::OmegaZero
    }

    fn in_omega_star(&self, delta: f64, nu: f64) -> bool {
        let sp = &self.special;
        let k = sp.kappa;
        let window = |d: f64| {
            p_j(1, d, k).map(|p| {
                let a = p.clamp(-1.0, 1.0).asin();
                (a, PI - a)
            })
        };
        let inside = |lo: f64, hi: f64| delta >= lo && delta <= hi;
        match sp.regime {
            Regime::Low => false,
            Regime::Mid | Regime::One => {
                let hi = if sp.regime == Regime::Mid { sp.m3.expect("m3") } else { sp.n3().expect("n3") };
                inside(sp.m1, hi) && window(delta).is_some_and(|(a, b)| a < nu && nu < b)
            }
            Regime::High => {
                let (n3, n4, m3) = (sp.n3().expect("n3"), sp.n4().expect("n4"), sp.m3.expect("m3"));
                if inside(sp.m1, n3) {
                    window(delta).is_some_and(|(a, b)| a < nu && nu < b)
                } else if inside(n3, m3) {
                    true
                } else if inside(m3, n4) {
                    window(delta).is_some_and(|(a, b)| nu < a || nu > b)
                } else {
                    false
                }
            }
        }
    }
}

/// One-shot region classification (builds the curves for this κ).
pub fn classify_region(p: &PhaseParams) -> Result<RegionLabel> {
    p.validate()?;
    Partition::new(p.kappa)?.classify(p.delta, p.nu)
}

/// Membership in the multiple-root existence set
/// `({0≤p₁≤1} ∪ {0≤p₂≤1}) ∩ ({|z₁|≤1} ∪ {|z₂|≤1}) ∩ {κ²+3δ² ≥ 3/4}`.
pub fn in_multiple_root_domain(delta: f64, kappa: f64) -> bool {
    if kappa * kappa + 3.0 * delta * delta < 0.75 - SNAP {
        return false;
    }
    let (z1, z2) = z_functions(delta, kappa);
    let z_ok = |z: Option<f64>| z.is_some_and(|z| z.abs() <= 1.0 + SNAP);
    if !(z_ok(z1) || z_ok(z2)) {
        return false;
    }
    let p_ok = |p: Option<f64>| p.is_some_and(|p| (-SNAP..=1.0 + SNAP).contains(&p));
    match p_functions(delta, kappa) {
        Ok((p1, p2)) => p_ok(p1) || p_ok(p2),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMask {
    pub delta_min: f64,
    pub delta_max: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: row `i` is `κ_i`, column `j` is `δ_j`; both axes include their endpoints.
    pub cells: Vec<bool>,
}

impl GridMask {
    pub fn delta_at(&self, j: usize) -> f64 {
        axis(self.delta_min, self.delta_max, self.nx, j)
    }
    pub fn kappa_at(&self, i: usize) -> f64 {
        axis(self.kappa_min, self.kappa_max, self.ny, i)
    }
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.nx + j]
    }
    pub fn header(&self) -> String {
        format!(
            "# delta_min delta_max kappa_min kappa_max nx ny\n# {} {} {} {} {} {}",
            self.delta_min, self.delta_max, self.kappa_min, self.kappa_max, self.nx, self.ny
        )
    }
}

fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// The multiple-root existence set sampled on an inclusive `(δ, κ)` grid.
pub fn multiple_root_domain(delta: (f64, f64), kappa: (f64, f64), nx: usize, ny: usize) -> Result<GridMask> {
    if nx < 2 || ny < 2 {
        return Err(Error::Domain("grid resolution must be at least 2 per axis".into()));
    }
    let cells = (0..ny * nx)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nx, idx % nx);
            in_multiple_root_domain(axis(delta.0, delta.1, nx, j), axis(kappa.0, kappa.1, ny, i))
        })
        .collect();
    Ok(GridMask { delta_min: delta.0, delta_max: delta.1, kappa_min: kappa.0, kappa_max: kappa.1, nx, ny, cells })
}
