//! Stability of the locked solutions: verdicts from the root data, the
//! linearization spectrum, and numerical checks of the Lyapunov estimates.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::phase::{angle_dist, PhaseRoot};
use crate::series::{Branch, SeriesCase, SeriesSolution};
use crate::simulator::PerturbationRun;

/// Small exact fraction used for weights and exponent powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frac(pub u32, pub u32);

impl Frac {
    pub fn value(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.0, self.1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Stable,
    StableWeighted,
    Unstable,
}

/// The four stable configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StableCase {
    I,
    II,
    III,
    IV,
}

impl StableCase {
    pub fn weights(self) -> (Frac, Frac) {
        match self {
            StableCase::I => (Frac(0, 1), Frac(0, 1)),
            StableCase::II => (Frac(3, 4), Frac(1, 2)),
            StableCase::III => (Frac(2, 3), Frac(1, 3)),
            StableCase::IV => (Frac(5, 8), Frac(1, 4)),
        }
    }

    /// Growth power `p` of the eigenvalues `z± ~ ±i τ^p`.
    pub fn power(self) -> Frac {
        match self {
            StableCase::I => Frac(1, 2),
            StableCase::II => Frac(1, 4),
            StableCase::III => Frac(1, 6),
            StableCase::IV => Frac(1, 8),
        }
    }

    fn of_multiplicity(m: u8) -> StableCase {
        match m {
            1 => StableCase::I,
            2 => StableCase::II,
            3 => StableCase::III,
            _ => StableCase::IV,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExponentKind {
    /// `z± = ±c τ^p`, real and of opposite signs.
    Saddle,
    /// `z± = ±i c τ^p + O(1)`.
    Oscillatory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentModel {
    pub kind: ExponentKind,
    pub power: Frac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub status: Status,
    pub weights: (Frac, Frac),
    /// Set for the stable verdicts.
    pub case: Option<StableCase>,
    /// Which rule decided.
    pub branch: String,
    pub exponent_model: ExponentModel,
}

fn check_pair(root: &PhaseRoot, s: &SeriesSolution) -> Result<()> {
    if s.case.multiplicity() != root.multiplicity {
        return Err(Error::Contract(format!(
            "series built for multiplicity {} but the root has multiplicity {}",
            s.case.multiplicity(),
            root.multiplicity
        )));
    }
    if angle_dist(s.sigma, root.sigma) > 1e-8 {
        return Err(Error::Contract(format!("series at sigma={} but root at sigma={}", s.sigma, root.sigma)));
    }
    Ok(())
}

pub fn classify_stability(root: &PhaseRoot, s: &SeriesSolution, m: &ModelParams) -> Result<StabilityVerdict> {
    check_pair(root, s)?;
    m.validate()?;
    let d = &root.derivs;
    let case = StableCase::of_multiplicity(root.multiplicity);
    let (stable, branch) = match s.case {
        SeriesCase::Simple => (d[1] > 0.0, if d[1] > 0.0 { "simple root, P' > 0" } else { "simple root, P' < 0" }),
        SeriesCase::Double(_) => {
            let ok = s.psi_k(1) * d[2] > 0.0;
            (ok, if ok { "double root, psi_1 P'' > 0" } else { "double root, psi_1 P'' < 0" })
        }
        SeriesCase::Triple => (d[3] > 0.0, if d[3] > 0.0 { "triple root, P''' > 0" } else { "triple root, P''' < 0" }),
        SeriesCase::Quadruple(b) => {
            let ok = b == Branch::Plus;
            (ok, if ok { "quadruple root, psi_1 = +xi" } else { "quadruple root, psi_1 = -xi" })
        }
    };
    let exponent_model = ExponentModel {
        kind: if stable { ExponentKind::Oscillatory } else { ExponentKind::Saddle },
        power: case.power(),
    };
    let (status, weights, case) = if !stable {
        (Status::Unstable, (Frac(0, 1), Frac(0, 1)), None)
    } else if case == StableCase::I {
        (Status::Stable, case.weights(), Some(case))
    } else {
        (Status::StableWeighted, case.weights(), Some(case))
    };
    Ok(StabilityVerdict { status, weights, case, branch: branch.into(), exponent_model })
}

/// Matrix of the system linearized about `(ρ*, ψ*)` at `τ`.
pub fn linear_matrix(m: &ModelParams, tau: f64, rho: f64, psi: f64) -> [[f64; 2]; 2] {
    let (a, b, g) = (m.alpha(tau), m.beta(tau), m.gamma(tau));
    let ph = 2.0 * psi + m.nu;
    [
        [-g - b * ph.sin(), a * psi.cos() - 2.0 * b * rho * ph.cos()],
        [2.0 * rho - a * psi.cos() / (rho * rho), -a * psi.sin() / rho + 2.0 * b * ph.sin()],
    ]
}

/// Characteristic roots `z± = (tr Λ ± √D)/2` of the linearization along the series.
pub fn linearization_exponents(
    root: &PhaseRoot,
    s: &SeriesSolution,
    m: &ModelParams,
    tau: f64,
) -> Result<(Complex64, Complex64)> {
    check_pair(root, s)?;
    let p = s.point(tau)?;
    let l = linear_matrix(m, tau, p.rho, p.psi);
    let tr = l[0][0] + l[1][1];
    let det = l[0][0] * l[1][1] - l[0][1] * l[1][0];
    let sq = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    let half = Complex64::new(0.5 * tr, 0.0);
    Ok((half + 0.5 * sq, half - 0.5 * sq))
}

/// Least-squares slope of `log |z₊ − z₋|` against `log τ` on `n` log-spaced
/// points of `[t1, t2]`; the `O(1)` trace drops out of the difference.
pub fn exponent_power_fit(
    root: &PhaseRoot,
    s: &SeriesSolution,
    m: &ModelParams,
    span: (f64, f64),
    n: usize,
) -> Result<f64> {
    let n = n.max(2);
    let (l1, l2) = (span.0.ln(), span.1.ln());
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let lt = l1 + (l2 - l1) * i as f64 / (n - 1) as f64;
        let (zp, zm) = linearization_exponents(root, s, m, lt.exp())?;
        pts.push((lt, (zp - zm).norm().ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Scaled coordinates and quadratic form for one of the stable cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovFrame {
    pub case: StableCase,
    /// `R = τ^{-w₁} r`, `Ψ = τ^{-w₂} φ`.
    pub w1: f64,
    pub w2: f64,
    pub omega_sq: f64,
    pub gamma0: f64,
    pub sqrt_lambda: f64,
    /// Validity ball radius in `(r, φ)`.
    pub radius: f64,
    pub tau_min: f64,
    pub series: SeriesSolution,
    pub params: ModelParams,
}

impl LyapunovFrame {
    pub fn new(root: &PhaseRoot, s: &SeriesSolution, m: &ModelParams) -> Result<Self> {
        let v = classify_stability(root, s, m)?;
        let case = v
            .case
            .ok_or_else(|| Error::Contract(format!("no Lyapunov frame for an unstable solution ({})", v.branch)))?;
        Ok(Self::build(case, root, s, m))
    }

    /// The frame of the root's multiplicity without the stability check. For an
    /// unstable solution `ω² < 0` and `V` is indefinite; useful only to watch a
    /// trajectory leave the validity ball.
    pub fn indefinite(root: &PhaseRoot, s: &SeriesSolution, m: &ModelParams) -> Result<Self> {
        check_pair(root, s)?;
        m.validate()?;
        Ok(Self::build(StableCase::of_multiplicity(root.multiplicity), root, s, m))
    }

    fn build(case: StableCase, root: &PhaseRoot, s: &SeriesSolution, m: &ModelParams) -> Self {
        let d = &root.derivs;
        let omega_sq = match case {
            StableCase::I => d[1],
            StableCase::II => s.psi_k(1) * d[2],
            StableCase::III => s.psi_k(2).powi(2) * d[3] / 2.0,
            // P⁗ = 3 at the quadruple point, so P′(σ + ξτ^{-1/4}) ≈ ξ³τ^{-3/4}/2.
            StableCase::IV => s.psi_k(1).powi(3) / 2.0,
        };
        let (w1, w2) = case.weights();
        Self {
            case,
            w1: w1.value(),
            w2: w2.value(),
            omega_sq,
            gamma0: m.gamma_k(0),
            sqrt_lambda: m.lambda.sqrt(),
            radius: 0.2,
            tau_min: 50.0,
            series: s.clone(),
            params: m.clone(),
        }
    }

    pub fn with_validity(mut self, radius: f64, tau_min: f64) -> Self {
        self.radius = radius;
        self.tau_min = tau_min;
        self
    }

    pub fn power(&self) -> f64 {
        self.case.power().value()
    }

    /// `(r, φ) = (τ^{w₁} R, τ^{w₂} Ψ)`.
    pub fn scaled(&self, r: f64, q: f64, tau: f64) -> (f64, f64) {
        (tau.powf(self.w1) * r, tau.powf(self.w2) * q)
    }

    /// `W = √λ r² + ω² φ²/2`.
    pub fn w(&self, r: f64, phi: f64) -> f64 {
        self.sqrt_lambda * r * r + 0.5 * self.omega_sq * phi * phi
    }

    /// `γ_ϰ = γ₀(1 − ϰ)/(1 + ϰ)`.
    pub fn gamma_kappa(&self, kappa: f64) -> f64 {
        self.gamma0 * (1.0 - kappa) / (1.0 + kappa)
    }

    /// `V` at `(R, Ψ)` about the reference values `(ρ*, ψ*)`, no validity check.
    pub fn value_about(&self, r: f64, q: f64, tau: f64, rho_star: f64, psi_star: f64) -> f64 {
        let (sr, sq) = self.scaled(r, q, tau);
        let e = self.w1 + self.w2;
        let h = hamiltonian(&self.params, tau, rho_star, psi_star, r, q);
        let hi = tau.powf(e) * h - self.w1 * sr * sq / tau;
        tau.powf(-self.power()) * (hi - self.gamma0 * sr * sq)
    }
}

/// `sin x − x` without cancellation.
fn sin_minus_id(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        -x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x.sin() - x
    }
}

/// `cos(a + x) − cos a + x sin a`, second order in `x`.
fn cos_second(a: f64, x: f64) -> f64 {
    let s = (0.5 * x).sin();
    -2.0 * a.cos() * s * s - a.sin() * sin_minus_id(x)
}

/// The Hamiltonian part of the shifted system about `(ρ*, ψ*)`.
pub fn hamiltonian(m: &ModelParams, tau: f64, rho: f64, psi: f64, r: f64, q: f64) -> f64 {
    let (a, b, g) = (m.alpha(tau), m.beta(tau), m.gamma(tau));
    let ph = 2.0 * psi + m.nu;
    let dcos2 = -2.0 * (ph + q).sin() * q.sin();
    rho * r * r + a * cos_second(psi, q) - 0.5 * b * rho * cos_second(ph, 2.0 * q) + g * r * q + r * r * r / 3.0
        - 0.5 * b * r * dcos2
}

/// `V_i(R, Ψ, τ)` with `(ρ*, ψ*)` taken from the frame's series.
pub fn lyapunov_value(f: &LyapunovFrame, r: f64, q: f64, tau: f64) -> Result<f64> {
    if tau < f.tau_min {
        return Err(Error::Domain(format!("tau={tau} below the frame's tau_min={}", f.tau_min)));
    }
    let (sr, sq) = f.scaled(r, q, tau);
    if sr.hypot(sq) > f.radius {
        return Err(Error::Domain(format!("(r, phi)=({sr:.3e}, {sq:.3e}) outside the validity ball {}", f.radius)));
    }
    let p = f.series.point(tau)?;
    Ok(f.value_about(r, q, tau, p.rho, p.psi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecreaseReport {
    pub kappa: f64,
    pub gamma_kappa: f64,
    pub tau_min: f64,
    pub radius: f64,
    pub samples: usize,
    pub satisfied: usize,
    /// Samples where `v` was below resolution (counted as satisfied).
    pub negligible: usize,
    pub fraction: f64,
    /// First τ where the scaled perturbation left the validity ball.
    pub exited_at: Option<f64>,
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Checks `dv/dτ ≤ −2γ_ϰ v` for `v(τ) = V(R(τ), Ψ(τ), τ)` along the run,
/// with `dv/dτ` from 4th-order central differences on the dense output.
pub fn verify_decrease(f: &LyapunovFrame, run: &PerturbationRun, kappa: f64) -> Result<DecreaseReport> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("kappa margin must lie in (0, 1), got {kappa}")));
    }
    let gk = f.gamma_kappa(kappa);
    let h = 1e-3;
    let lo = f.tau_min.max(run.tau_start() + 2.0 * h);
    let hi = run.tau_end() - 2.0 * h;
    let v_at = |t: f64| {
        let y = run.at(t);
        f.value_about(y[0], y[1], t, y[2], y[3])
    };
    let mut rep = DecreaseReport {
        kappa,
        gamma_kappa: gk,
        tau_min: f.tau_min,
        radius: f.radius,
        samples: 0,
        satisfied: 0,
        negligible: 0,
        fraction: 0.0,
        exited_at: None,
        worst_ratio: f64::NEG_INFINITY,
        passed: false,
    };
    if hi > lo {
        let n = (((hi - lo) / 0.01).ceil() as usize).clamp(2, 200_000);
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let y = run.at(t);
            let (sr, sq) = f.scaled(y[0], y[1], t);
            if sr.hypot(sq) > f.radius {
                rep.exited_at = Some(t);
                break;
            }
            let v = f.value_about(y[0], y[1], t, y[2], y[3]);
            rep.samples += 1;
            // Below resolution (including v ≡ 0) the inequality holds trivially.
            if v.abs() < 1e-280 {
                rep.negligible += 1;
                rep.satisfied += 1;
                continue;
            }
            let dv = (-v_at(t + 2.0 * h) + 8.0 * v_at(t + h) - 8.0 * v_at(t - h) + v_at(t - 2.0 * h)) / (12.0 * h);
            let ratio = dv / v;
            rep.worst_ratio = rep.worst_ratio.max(ratio);
            if dv <= -2.0 * gk * v {
                rep.satisfied += 1;
            }
        }
    }
    rep.fraction = if rep.samples > 0 { rep.satisfied as f64 / rep.samples as f64 } else { 0.0 };
    rep.passed = rep.exited_at.is_none() && rep.samples > 0 && rep.satisfied == rep.samples;
    Ok(rep)
}
