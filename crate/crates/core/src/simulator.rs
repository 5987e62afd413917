//! Direct integration of the averaged system, of perturbations around a
//! locked solution, and of the underlying chirped oscillator.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sum_tail, ModelParams};
use crate::ode::{dopri5, dopri5_scaled, DenseSolution, OdeOptions, StepStats};
use crate::series::SeriesSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Polar,
    /// State `(u, v) = (ρ cos ψ, ρ sin ψ)`, smooth through `ρ = 0`.
    Cartesian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    pub mode: Mode,
    /// Polar runs abort once `ρ` drops to this level.
    pub rho_min: f64,
    /// Number of equally spaced output samples.
    pub samples: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-11, mode: Mode::Polar, rho_min: 1e-6, samples: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub method: String,
    pub rtol: f64,
    pub atol: f64,
    pub mode: Mode,
    pub stats: StepStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// Right-hand side of the averaged system in polar form.
pub fn polar_rhs(m: &ModelParams, tau: f64, rho: f64, psi: f64) -> [f64; 2] {
    let (a, b, g) = (m.alpha(tau), m.beta(tau), m.gamma(tau));
    let ph = 2.0 * psi + m.nu;
    [
        -g * rho + a * psi.sin() - b * rho * ph.sin(),
        rho * rho - m.lambda * tau + (a * psi.cos() - b * rho * ph.cos()) / rho,
    ]
}

/// Right-hand side in `(u, v)`: constant α-forcing in `v̇`, β-term linear,
/// `(u² + v² − λτ)` rotation.
pub fn cartesian_rhs(m: &ModelParams, tau: f64, u: f64, v: f64) -> [f64; 2] {
    let (a, b, g) = (m.alpha(tau), m.beta(tau), m.gamma(tau));
    let (sn, cn) = m.nu.sin_cos();
    let w = u * u + v * v - m.lambda * tau;
    [-g * u - v * w - b * (u * sn + v * cn), -g * v + u * w + a - b * (u * cn - v * sn)]
}

fn check_span(span: (f64, f64)) -> Result<()> {
    if !(span.0 > 0.0 && span.1 > span.0 && span.1.is_finite()) {
        return Err(Error::Domain(format!("need 0 < tau_start < tau_end, got {span:?}")));
    }
    Ok(())
}

fn check_finite(m: &ModelParams) -> Result<()> {
    let ok = |v: &[f64]| v.iter().all(|x| x.is_finite());
    if !(m.lambda.is_finite() && m.nu.is_finite() && ok(&m.alpha) && ok(&m.beta) && ok(&m.gamma)) {
        return Err(Error::Domain("non-finite model coefficient".into()));
    }
    Ok(())
}

/// Shifts `psi` by a multiple of 2π so that it lies within π of `near`.
fn unwrap_to(psi: f64, near: f64) -> f64 {
    psi + TAU * ((near - psi) / TAU).round()
}

pub fn integrate(m: &ModelParams, init: (f64, f64), span: (f64, f64), o: &SimOptions) -> Result<Trajectory> {
    check_span(span)?;
    check_finite(m)?;
    let (rho0, psi0) = init;
    if !(rho0 > 0.0) {
        return Err(Error::Domain(format!("rho0 must be positive, got {rho0}")));
    }
    let opts = OdeOptions::tol(o.rtol, o.atol);
    let n = o.samples.max(2);
    let (tau, rho, psi, stats) = match o.mode {
        Mode::Polar => {
            let rho_min = o.rho_min;
            let sol = dopri5(
                |t, y: &[f64; 2], d| *d = polar_rhs(m, t, y[0], y[1]),
                span.0,
                [rho0, psi0],
                span.1,
                &opts,
                |_, y| y[0] <= rho_min,
            )?;
            if sol.stopped {
                return Err(Error::AmplitudeFloor { tau: sol.t_end, rho: sol.y_end[0] });
            }
            let (ts, ys) = sol.sample(n);
            (ts, ys.iter().map(|y| y[0]).collect(), ys.iter().map(|y| y[1]).collect(), sol.stats)
        }
        Mode::Cartesian => {
            let sol = dopri5(
                |t, y: &[f64; 2], d| *d = cartesian_rhs(m, t, y[0], y[1]),
                span.0,
                [rho0 * psi0.cos(), rho0 * psi0.sin()],
                span.1,
                &opts,
                |_, _| false,
            )?;
            let (ts, ys) = sol.sample(n);
            let mut prev = psi0;
            let mut rho = Vec::with_capacity(n);
            let mut psi = Vec::with_capacity(n);
            for y in &ys {
                rho.push(y[0].hypot(y[1]));
                prev = unwrap_to(y[1].atan2(y[0]), prev);
                psi.push(prev);
            }
            (ts, rho, psi, sol.stats)
        }
    };
    Ok(Trajectory {
        tau,
        rho,
        psi,
        meta: TrajectoryMeta { method: "dopri5".into(), rtol: o.rtol, atol: o.atol, mode: o.mode, stats },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureOptions {
    pub window_fraction: f64,
    pub tol_amp: f64,
    pub tol_phase_range: f64,
}

impl Default for CaptureOptions {
    fn default() -> Self {
        Self { window_fraction: 0.25, tol_amp: 0.05, tol_phase_range: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    pub captured: bool,
    pub sigma_est: Option<f64>,
}

/// Phase locking test on the trailing window: `ρ/√(λτ)` within `tol_amp`
/// of 1 and a bounded spread of `ψ`.
pub fn detect_capture(tr: &Trajectory, lambda: f64, o: &CaptureOptions) -> Result<Capture> {
    let n = tr.len();
    let w = ((n as f64) * o.window_fraction).floor() as usize;
    if w < 50 {
        return Err(Error::Domain(format!("capture window has {w} samples, need at least 50")));
    }
    let start = n - w;
    let amp_ok = (start..n).all(|i| (tr.rho[i] / (lambda * tr.tau[i]).sqrt() - 1.0).abs() < o.tol_amp);
    // Unwrapping makes the spread independent of how ψ was labelled mod 2π.
    let mut tail = Vec::with_capacity(w);
    let mut prev = tr.psi[start];
    for &p in &tr.psi[start..] {
        prev = unwrap_to(p, prev);
        tail.push(prev);
    }
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let captured = amp_ok && hi - lo < o.tol_phase_range;
    let sigma_est = captured.then(|| (tail.iter().sum::<f64>() / w as f64).rem_euclid(TAU));
    Ok(Capture { captured, sigma_est })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    /// A numerical solution started on the series at `τ₀`; the perturbation
    /// is integrated jointly in shifted form, so decay is resolved to tiny sizes.
    Integrated,
    /// The truncated series itself; `R = ρ − ρ_series`.
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbOptions {
    pub rtol: f64,
    pub atol: f64,
    pub samples: usize,
    /// Stop once `√(R² + Ψ²)` exceeds this.
    pub escape: Option<f64>,
    /// Stop once `√(R² + Ψ²)` falls below this (integrated reference only);
    /// an exactly zero perturbation runs to the end.
    pub floor: f64,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, samples: 4001, escape: None, floor: 1e-140 }
    }
}

#[derive(Debug, Clone)]
enum PerturbDense {
    Joint(DenseSolution<4>),
    Plain(DenseSolution<2>, SeriesSolution),
}

/// A perturbed solution expressed relative to a reference locked solution.
#[derive(Debug, Clone)]
pub struct PerturbationRun {
    pub tau: Vec<f64>,
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub rho_ref: Vec<f64>,
    pub psi_ref: Vec<f64>,
    pub reference: Reference,
    /// The perturbation grew past the escape threshold at this τ.
    pub escaped_at: Option<f64>,
    /// The perturbation fell below the floor at this τ.
    pub decayed_at: Option<f64>,
    pub stats: StepStats,
    dense: PerturbDense,
}

impl PerturbationRun {
    pub fn tau_start(&self) -> f64 {
        self.tau[0]
    }

    pub fn tau_end(&self) -> f64 {
        *self.tau.last().unwrap()
    }

    /// `(R, Ψ, ρ*, ψ*)` from the dense output.
    pub fn at(&self, tau: f64) -> [f64; 4] {
        match &self.dense {
            PerturbDense::Joint(d) => {
                let y = d.eval(tau);
                [y[2], y[3], y[0], y[1]]
            }
            PerturbDense::Plain(d, s) => {
                let y = d.eval(tau);
                let p = s.point(tau).expect("tau > 0");
                [y[0] - p.rho, y[1] - p.psi, p.rho, p.psi]
            }
        }
    }

    pub fn norm(&self) -> Vec<f64> {
        self.r.iter().zip(&self.psi).map(|(r, p)| r.hypot(*p)).collect()
    }
}

/// `cos(a + x) − cos a`, accurate for small `x`.
fn dcos(a: f64, x: f64) -> f64 {
    -2.0 * (a + 0.5 * x).sin() * (0.5 * x).sin()
}

/// `sin(a + x) − sin a`, accurate for small `x`.
fn dsin(a: f64, x: f64) -> f64 {
    2.0 * (a + 0.5 * x).cos() * (0.5 * x).sin()
}

/// The shifted system for `(R, Ψ)` around `(ρ*, ψ*)`, written with
/// difference formulas so that it vanishes exactly at the origin.
pub fn shifted_rhs(m: &ModelParams, tau: f64, rs: f64, ps: f64, r: f64, q: f64) -> [f64; 2] {
    let (a, b, g) = (m.alpha(tau), m.beta(tau), m.gamma(tau));
    let ph = 2.0 * ps + m.nu;
    let dr = -g * r + a * dsin(ps, q) - b * (rs * dsin(ph, 2.0 * q) + r * (ph + 2.0 * q).sin());
    // cos(ψ*+Ψ)/(ρ*+R) − cos ψ*/ρ* = [ρ* Δcos − R cos ψ*] / (ρ*(ρ*+R))
    let frac = (rs * dcos(ps, q) - r * ps.cos()) / (rs * (rs + r));
    let dq = 2.0 * rs * r + r * r + a * frac - b * dcos(ph, 2.0 * q);
    [dr, dq]
}

/// Integrates a perturbation `(R₀, Ψ₀)` of the series solution from `τ₀` to `tau_end`.
pub fn integrate_perturbation(
    m: &ModelParams,
    series: &SeriesSolution,
    tau0: f64,
    init: (f64, f64),
    tau_end: f64,
    reference: Reference,
    o: &PerturbOptions,
) -> Result<PerturbationRun> {
    check_span((tau0, tau_end))?;
    check_finite(m)?;
    let p0 = series.point(tau0)?;
    if !(p0.rho > 0.0) {
        return Err(Error::Domain(format!("series amplitude {} at tau0 is not positive", p0.rho)));
    }
    let opts = OdeOptions::tol(o.rtol, o.atol);
    let escape = o.escape.unwrap_or(f64::INFINITY);
    let (r0, q0) = init;
    let dense = match reference {
        Reference::Integrated => {
            let floor = o.floor;
            let (rtol, atol) = (o.rtol, o.atol);
            // Relative control on the perturbation pair so it stays resolved while decaying.
            let scale = move |y0: &[f64; 4], y1: &[f64; 4]| {
                let d = y0[2].hypot(y0[3]).max(y1[2].hypot(y1[3]));
                let sp = floor * 1e-3 + rtol * d;
                [atol + rtol * y0[0].abs().max(y1[0].abs()), atol + rtol * y0[1].abs().max(y1[1].abs()), sp, sp]
            };
            let sol = dopri5_scaled(
                |t, y: &[f64; 4], d| {
                    let a = polar_rhs(m, t, y[0], y[1]);
                    let b = shifted_rhs(m, t, y[0], y[1], y[2], y[3]);
                    *d = [a[0], a[1], b[0], b[1]];
                },
                tau0,
                [p0.rho, p0.psi, r0, q0],
                tau_end,
                &opts,
                |_, y| {
                    let d = y[2].hypot(y[3]);
                    d > escape || (d > 0.0 && d < floor)
                },
                scale,
            )?;
            PerturbDense::Joint(sol)
        }
        Reference::Series => {
            let sol = dopri5(
                |t, y: &[f64; 2], d| *d = polar_rhs(m, t, y[0], y[1]),
                tau0,
                [p0.rho + r0, p0.psi + q0],
                tau_end,
                &opts,
                |t, y| {
                    let p = series.point(t).expect("tau > 0");
                    (y[0] - p.rho).hypot(y[1] - p.psi) > escape || y[0] <= 0.0
                },
            )?;
            PerturbDense::Plain(sol, series.clone())
        }
    };
    let (t_end, stopped, stats) = match &dense {
        PerturbDense::Joint(d) => (d.t_end, d.stopped, d.stats),
        PerturbDense::Plain(d, _) => (d.t_end, d.stopped, d.stats),
    };
    let mut run = PerturbationRun {
        tau: Vec::new(),
        r: Vec::new(),
        psi: Vec::new(),
        rho_ref: Vec::new(),
        psi_ref: Vec::new(),
        reference,
        escaped_at: None,
        decayed_at: None,
        stats,
        dense,
    };
    let n = o.samples.max(2);
    for i in 0..n {
        let t = tau0 + (t_end - tau0) * i as f64 / (n - 1) as f64;
        let y = run.at(t);
        run.tau.push(t);
        run.r.push(y[0]);
        run.psi.push(y[1]);
        run.rho_ref.push(y[2]);
        run.psi_ref.push(y[3]);
    }
    if stopped {
        let y = run.at(t_end);
        debug_assert!(y[0].is_finite());
        if y[0].hypot(y[1]) > escape.min(1e300) {
            run.escaped_at = Some(t_end);
        } else {
            run.decayed_at = Some(t_end);
        }
    }
    Ok(run)
}

/// Parameters of the chirped oscillator
/// `x″ + εC x′ + (1 + εB cos(2ζ − ν)) U′(x) = εA cos ζ`, `ζ = t − ϑt²`,
/// `U′(x) = x − εx³/6`. The slow amplitudes are read from a model on the
/// slow time `τ = εt/4`: `A = α(τ)`, `B = β(τ)`, `C = γ(τ)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub epsilon: f64,
    pub vartheta: f64,
    /// Drive phase `ν` as it appears in `cos(2ζ − ν)`.
    pub nu: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl OscillatorParams {
    /// The oscillator whose averaged equations are the given model:
    /// `ϑ = λε²/32` and `ν_osc = −ν`.
    pub fn for_model(epsilon: f64, m: &ModelParams) -> Self {
        Self {
            epsilon,
            vartheta: m.lambda * epsilon * epsilon / 32.0,
            nu: -m.nu,
            alpha: m.alpha.clone(),
            beta: m.beta.clone(),
            gamma: m.gamma.clone(),
        }
    }

    /// `λ = 32ϑ/ε²`.
    pub fn lambda(&self) -> f64 {
        32.0 * self.vartheta / (self.epsilon * self.epsilon)
    }

    /// The averaged model (`ν = −ν_osc`).
    pub fn averaged(&self) -> ModelParams {
        ModelParams {
            lambda: self.lambda(),
            nu: -self.nu,
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
        }
    }

    pub fn zeta(&self, t: f64) -> f64 {
        t - self.vartheta * t * t
    }

    /// State `(x, x′)` at time `t` for the averaged state `(ρ, ψ)`: `x = 2ρ cos(ζ − ψ)`.
    pub fn lift(&self, t: f64, rho: f64, psi: f64) -> [f64; 2] {
        let th = self.zeta(t) - psi;
        [2.0 * rho * th.cos(), -2.0 * rho * th.sin() * (1.0 - 2.0 * self.vartheta * t)]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.1) {
            return Err(Error::Domain(format!("epsilon must lie in (0, 0.1], got {}", self.epsilon)));
        }
        if !(self.vartheta > 0.0 && self.vartheta.is_finite()) {
            return Err(Error::Domain(format!("vartheta must be positive, got {}", self.vartheta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorRun {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub params: OscillatorParams,
    pub lambda: f64,
    pub stats: StepStats,
}

impl OscillatorRun {
    /// `E = U(x) + x′²/2` with `U = x²/2 − εx⁴/24`.
    pub fn energy(&self) -> Vec<f64> {
        let e = self.params.epsilon;
        self.x.iter().zip(&self.xdot).map(|(x, v)| x * x / 2.0 - e * x.powi(4) / 24.0 + v * v / 2.0).collect()
    }

    /// Max of `|x|` over the window `[t − width, t]` of the stored samples.
    pub fn envelope(&self, t: f64, width: f64) -> f64 {
        let lo = self.t.partition_point(|&s| s < t - width);
        let hi = self.t.partition_point(|&s| s <= t);
        self.x[lo..hi].iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

pub fn oscillator_rhs(p: &OscillatorParams, t: f64, x: f64, v: f64) -> [f64; 2] {
    let e = p.epsilon;
    let tau = e * t / 4.0;
    let tail = |c: &[f64]| if tau > 0.0 { sum_tail(c, tau) } else { c.first().copied().unwrap_or(0.0) };
    let a = tau.sqrt() * tail(&p.alpha);
    let b = tail(&p.beta);
    let c = 0.5 * tail(&p.gamma);
    let z = p.zeta(t);
    let du = x - e * x * x * x / 6.0;
    [v, -e * c * v - (1.0 + e * b * (2.0 * z - p.nu).cos()) * du + e * a * z.cos()]
}

/// Integrates the oscillator over `t_span` from `init = (x, x′)`, storing
/// samples every `dt_out`.
pub fn simulate_full_oscillator(
    p: &OscillatorParams,
    init: [f64; 2],
    t_span: (f64, f64),
    dt_out: f64,
    rtol: f64,
    atol: f64,
) -> Result<OscillatorRun> {
    p.validate()?;
    if !(t_span.1 > t_span.0 && t_span.0 >= 0.0) || !(dt_out > 0.0) {
        return Err(Error::Domain(format!("bad time span {t_span:?} or output step {dt_out}")));
    }
    let opts = OdeOptions { h_max: 0.25, ..OdeOptions::tol(rtol, atol) };
    let sol = dopri5(
        |t, y: &[f64; 2], d| *d = oscillator_rhs(p, t, y[0], y[1]),
        t_span.0,
        init,
        t_span.1,
        &opts,
        |_, _| false,
    )?;
    let n = ((t_span.1 - t_span.0) / dt_out).round() as usize + 1;
    let (t, ys) = sol.sample(n);
    Ok(OscillatorRun {
        t,
        x: ys.iter().map(|y| y[0]).collect(),
        xdot: ys.iter().map(|y| y[1]).collect(),
        lambda: p.lambda(),
        params: p.clone(),
        stats: sol.stats,
    })
}

/// Rectangle of initial data `(ρ₀, ψ₀)` at `τ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitGrid {
    pub rho: (f64, f64),
    pub psi: (f64, f64),
    pub n_rho: usize,
    pub n_psi: usize,
    /// Uniform jitter within each cell, seeded; cell centres when `None`.
    pub jitter_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMask {
    pub grid: InitGrid,
    pub tau_span: (f64, f64),
    /// Row-major over `(i_psi, j_rho)`.
    pub captured: Vec<bool>,
    pub fraction: f64,
}

impl BasinMask {
    pub fn get(&self, i_psi: usize, j_rho: usize) -> bool {
        self.captured[i_psi * self.grid.n_rho + j_rho]
    }
}

/// SplitMix64, enough for reproducible jitter without pulling in an RNG crate.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit(seed: u64, cell: u64, k: u64) -> f64 {
    (splitmix(seed ^ splitmix(cell.wrapping_mul(2).wrapping_add(k))) >> 11) as f64 / (1u64 << 53) as f64
}

impl InitGrid {
    pub fn centered(rho: f64, psi: f64, radius: f64, n: usize) -> Self {
        Self {
            rho: (rho - radius, rho + radius),
            psi: (psi - radius, psi + radius),
            n_rho: n,
            n_psi: n,
            jitter_seed: None,
        }
    }

    pub fn point(&self, i_psi: usize, j_rho: usize) -> (f64, f64) {
        let (fr, fp) = match self.jitter_seed {
            Some(s) => {
                let cell = (i_psi * self.n_rho + j_rho) as u64;
                (unit(s, cell, 0), unit(s, cell, 1))
            }
            None => (0.5, 0.5),
        };
        let at = |(lo, hi): (f64, f64), n: usize, k: usize, f: f64| lo + (hi - lo) * (k as f64 + f) / n as f64;
        (at(self.rho, self.n_rho, j_rho, fr), at(self.psi, self.n_psi, i_psi, fp))
    }
}

/// Capture test for every cell of the grid, run in parallel.
pub fn basin_sample(
    m: &ModelParams,
    grid: &InitGrid,
    tau_span: (f64, f64),
    sim: &SimOptions,
    cap: &CaptureOptions,
) -> Result<BasinMask> {
    if grid.n_rho < 2 || grid.n_psi < 2 {
        return Err(Error::Domain("basin grid needs at least 2 cells per axis".into()));
    }
    check_span(tau_span)?;
    let sim = SimOptions { mode: Mode::Cartesian, ..*sim };
    let captured = (0..grid.n_rho * grid.n_psi)
        .into_par_iter()
        .map(|c| {
            let (rho0, psi0) = grid.point(c / grid.n_rho, c % grid.n_rho);
            if !(rho0 > 0.0) {
                return Ok(false);
            }
            match integrate(m, (rho0, psi0), tau_span, &sim) {
                Ok(tr) => Ok(detect_capture(&tr, m.lambda, cap)?.captured),
                Err(e) if e.is_numerical() => Ok(false),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<bool>>>()?;
    let fraction = captured.iter().filter(|&&c| c).count() as f64 / captured.len() as f64;
    Ok(BasinMask { grid: *grid, tau_span, captured, fraction })
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Smallest distance between two angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d).min(PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig6() -> ModelParams {
        ModelParams::constant(1.0, 5.0 * PI / 6.0, -2.0, 1.0)
    }

    #[test]
    fn cartesian_rhs_is_the_chain_rule_of_polar() {
        let mut m = fig6();
        m.alpha.push(0.7);
        m.beta.push(-0.2);
        m.gamma.push(0.3);
        for &(tau, rho, psi) in &[(20.0, 4.3, 0.4), (3.0, 0.2, -2.1), (150.0, 12.0, 3.0), (50.0, 7.0, 5.5)] {
            let [dr, dp] = polar_rhs(&m, tau, rho, psi);
            let (s, c) = f64::sin_cos(psi);
            let [du, dv] = cartesian_rhs(&m, tau, rho * c, rho * s);
            assert!((du - (dr * c - rho * s * dp)).abs() < 1e-10 * (1.0 + du.abs()));
            assert!((dv - (dr * s + rho * c * dp)).abs() < 1e-10 * (1.0 + dv.abs()));
        }
    }

    #[test]
    fn shifted_rhs_is_the_difference_of_polar_fields() {
        let m = fig6();
        assert_eq!(shifted_rhs(&m, 30.0, 5.0, 3.0, 0.0, 0.0), [0.0, 0.0]);
        let (tau, rs, ps, r, q) = (30.0, 5.4, 3.1, 0.03, -0.02);
        let a = polar_rhs(&m, tau, rs + r, ps + q);
        let b = polar_rhs(&m, tau, rs, ps);
        let d = shifted_rhs(&m, tau, rs, ps, r, q);
        assert!((d[0] - (a[0] - b[0])).abs() < 1e-12);
        assert!((d[1] - (a[1] - b[1])).abs() < 1e-11, "{} vs {}", d[1], a[1] - b[1]);
    }

    #[test]
    fn oscillator_mapping_round_trips() {
        let m = fig6();
        let p = OscillatorParams::for_model(0.01, &m);
        assert!((p.lambda() - 1.0).abs() < 1e-12);
        assert_eq!(p.averaged(), m);
        let [x, v] = p.lift(100.0, 2.0, 0.3);
        let th = p.zeta(100.0) - 0.3;
        assert!((x - 4.0 * th.cos()).abs() < 1e-12);
        assert!(x.hypot(v / (1.0 - 2.0 * p.vartheta * 100.0)) - 4.0 < 1e-12);
    }

    #[test]
    fn oscillator_rejects_bad_parameters() {
        let mut p = OscillatorParams::for_model(0.01, &fig6());
        p.epsilon = 0.5;
        assert!(p.validate().is_err());
        p.epsilon = 0.01;
        p.vartheta = 0.0;
        assert!(simulate_full_oscillator(&p, [0.0, 0.0], (0.0, 10.0), 0.1, 1e-8, 1e-10).is_err());
    }

    #[test]
    fn angles_wrap_and_compare() {
        assert_eq!(wrap_angle(-1e-18), 0.0);
        assert!((wrap_angle(7.0) - (7.0 - TAU)).abs() < 1e-15);
        assert!((angle_gap(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_gap(0.0, PI) - PI).abs() < 1e-15);
    }

    #[test]
    fn grid_points_stay_in_their_cells() {
        let g = InitGrid { rho: (1.0, 2.0), psi: (0.0, 1.0), n_rho: 4, n_psi: 5, jitter_seed: Some(7) };
        for i in 0..5 {
            for j in 0..4 {
                let (r, p) = g.point(i, j);
                assert!(r >= 1.0 + j as f64 * 0.25 && r < 1.0 + (j + 1) as f64 * 0.25);
                assert!(p >= i as f64 * 0.2 && p < (i + 1) as f64 * 0.2);
                assert_eq!(g.point(i, j), (r, p));
            }
        }
        let c = InitGrid::centered(3.0, 1.0, 0.1, 2);
        let (r, p) = c.point(0, 0);
        assert!((r - 2.95).abs() < 1e-12 && (p - 0.95).abs() < 1e-12);
    }

    #[test]
    fn inputs_are_validated() {
        let m = fig6();
        let o = SimOptions::default();
        assert!(integrate(&m, (0.0, 0.0), (20.0, 30.0), &o).is_err());
        assert!(integrate(&m, (1.0, 0.0), (0.0, 30.0), &o).is_err());
        assert!(integrate(&m, (1.0, 0.0), (30.0, 20.0), &o).is_err());
        let tr = integrate(&m, (4.5, PI), (20.0, 21.0), &SimOptions { samples: 40, ..o }).unwrap();
        assert!(detect_capture(&tr, 1.0, &CaptureOptions::default()).is_err());
    }
}
