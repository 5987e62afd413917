//! Truncated asymptotic series for the phase-locked solutions
//!
//! ```text
//! ρ(τ) = √λ √τ + Σ ρ_k τ^{-k·h},   ψ(τ) = σ + Σ ψ_k τ^{-k·h}
//! ```
//!
//! with lattice step `h = 1/2` at simple and double roots of `P`, `1/6` at a
//! triple root and `1/4` at the quadruple point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::phase::{derivs, PhaseRoot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesCase {
    Simple,
    Double(Branch),
    Triple,
    Quadruple(Branch),
}

impl SeriesCase {
    /// Denominator `d` of the lattice step `h = 1/d`.
    pub fn step_den(self) -> u32 {
        match self {
            SeriesCase::Simple | SeriesCase::Double(_) => 2,
            SeriesCase::Triple => 6,
            SeriesCase::Quadruple(_) => 4,
        }
    }

    pub fn multiplicity(self) -> u8 {
        match self {
            SeriesCase::Simple => 1,
            SeriesCase::Double(_) => 2,
            SeriesCase::Triple => 3,
            SeriesCase::Quadruple(_) => 4,
        }
    }

    /// Highest truncation order with closed-form coefficients.
    pub fn max_order(self) -> usize {
        match self {
            SeriesCase::Simple | SeriesCase::Double(_) => 3,
            SeriesCase::Triple => 5,
            SeriesCase::Quadruple(_) => 4,
        }
    }

    /// Number of `ρ_k` coefficients fixed once `ψ_1..ψ_order` are known.
    fn rho_len(self, order: usize) -> usize {
        match self {
            SeriesCase::Simple | SeriesCase::Double(_) => order,
            SeriesCase::Triple => (order + 3).min(7),
            SeriesCase::Quadruple(_) => (order + 2).min(6),
        }
    }

    /// The two cases available at a root of the given multiplicity.
    pub fn for_multiplicity(m: u8, branch: Branch) -> Option<Self> {
        match m {
            1 => Some(SeriesCase::Simple),
            2 => Some(SeriesCase::Double(branch)),
            3 => Some(SeriesCase::Triple),
            4 => Some(SeriesCase::Quadruple(branch)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSolution {
    pub case: SeriesCase,
    pub sigma: f64,
    /// `ρ₋₁ = √λ`.
    pub rho_lead: f64,
    /// `rho[k-1] = ρ_k`; `ρ₀ = 0` always.
    pub rho: Vec<f64>,
    /// `psi[k-1] = ψ_k`.
    pub psi: Vec<f64>,
    pub order: usize,
}

/// Values of the series and its τ-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub rho: f64,
    pub psi: f64,
    pub drho: f64,
    pub dpsi: f64,
    /// `ρ − √(λτ)`, kept separately to avoid cancellation.
    pub rho_dev: f64,
}

impl SeriesSolution {
    pub fn step(&self) -> f64 {
        1.0 / self.case.step_den() as f64
    }

    pub fn rho_k(&self, k: i32) -> f64 {
        match k {
            -1 => self.rho_lead,
            0 => 0.0,
            k if k > 0 => self.rho.get(k as usize - 1).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub fn psi_k(&self, k: usize) -> f64 {
        match k {
            0 => self.sigma,
            k => self.psi.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn point(&self, tau: f64) -> Result<SeriesPoint> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        let h = self.step();
        let lat = |c: &[f64]| {
            let mut v = 0.0;
            let mut dv = 0.0;
            for (i, &ck) in c.iter().enumerate() {
                let e = (i + 1) as f64 * h;
                let t = tau.powf(-e);
                v += ck * t;
                dv -= e * ck * t / tau;
            }
            (v, dv)
        };
        let (rho_dev, drho_dev) = lat(&self.rho);
        let (dpsi_v, dpsi) = lat(&self.psi);
        let st = tau.sqrt();
        Ok(SeriesPoint {
            rho: self.rho_lead * st + rho_dev,
            psi: self.sigma + dpsi_v,
            drho: 0.5 * self.rho_lead / st + drho_dev,
            dpsi,
            rho_dev,
        })
    }
}

/// `(ρ(τ), ψ(τ))` of the truncated series.
pub fn evaluate_series(s: &SeriesSolution, tau: f64) -> Result<(f64, f64)> {
    let p = s.point(tau)?;
    Ok((p.rho, p.psi))
}

/// The double-root compatibility function `C(σ)`; `ψ₁² P″/2 = C`.
pub fn c_function(sigma: f64, m: &ModelParams) -> f64 {
    let l = m.lambda;
    let sl = l.sqrt();
    ((2.0 * sigma).sin() - 4.0 * l * l) / (8.0 * l * sl)
        - (m.beta_k(1) * sl * (2.0 * sigma + m.nu).sin() - m.alpha_k(1) * sigma.sin() + m.gamma_k(1) * sl)
}

/// The triple-root function `N(σ)`; `ψ₂³ P‴ = N`.
pub fn n_function(sigma: f64, m: &ModelParams) -> f64 {
    6.0 * c_function(sigma, m)
}

/// `Q = 8α₁ + 4√λ(2β₁ − 2γ₁ − 1)`; `ψ₁⁴ = Q` at the quadruple point.
pub fn q_value(m: &ModelParams) -> f64 {
    8.0 * m.alpha_k(1) + 4.0 * m.lambda.sqrt() * (2.0 * m.beta_k(1) - 2.0 * m.gamma_k(1) - 1.0)
}

struct Ctx {
    l: f64,
    sl: f64,
    s: f64,
    c: f64,
    sa: f64,
    ca: f64,
    delta: f64,
    d: [f64; 5],
    a1: f64,
    a2: f64,
    b0: f64,
    b1: f64,
    b2: f64,
    g1: f64,
    g2: f64,
}

impl Ctx {
    fn new(sigma: f64, m: &ModelParams) -> Self {
        let l = m.lambda;
        let sl = l.sqrt();
        let (sa, ca) = (2.0 * sigma + m.nu).sin_cos();
        Ctx {
            l,
            sl,
            s: sigma.sin(),
            c: sigma.cos(),
            sa,
            ca,
            delta: m.delta(),
            d: derivs(sigma, &m.phase()),
            a1: m.alpha_k(1),
            a2: m.alpha_k(2),
            b0: m.beta_k(0),
            b1: m.beta_k(1),
            b2: m.beta_k(2),
            g1: m.gamma_k(1),
            g2: m.gamma_k(2),
        }
    }

    /// `A_k` for k = 1, 2, 3 (shared by the simple and double cases).
    fn a_k(&self, k: usize, rho: &[f64; 4], psi: &[f64; 4]) -> f64 {
        let Ctx { sl, c, sa, ca, delta, b1, a1, .. } = *self;
        match k {
            1 => (delta * ca - c) / sl,
            2 => -psi[1] / sl * (2.0 * delta * sa - self.s),
            _ => {
                -rho[1] * rho[1] + b1 * ca
                    - (a1 - rho[1] / sl) * c / sl
                    - psi[2] / sl * (2.0 * delta * sa - self.s)
                    - psi[1] * psi[1] / (2.0 * sl) * (4.0 * delta * ca - c)
            }
        }
    }
}

/// Builds the series at `root` for the requested case and truncation order.
///
/// The case must match the root multiplicity; `branch` selects `±φ` or `±ξ`
/// and is ignored for simple and triple roots.
pub fn build_series(m: &ModelParams, root: &PhaseRoot, branch: Branch, order: usize) -> Result<SeriesSolution> {
    m.validate()?;
    let case = SeriesCase::for_multiplicity(root.multiplicity, branch)
        .ok_or_else(|| Error::Contract(format!("multiplicity {} unsupported", root.multiplicity)))?;
    build_case(m, root.sigma, case, order)
}

/// Like [`build_series`] but with the case given explicitly.
pub fn build_case(m: &ModelParams, sigma: f64, case: SeriesCase, order: usize) -> Result<SeriesSolution> {
    if order > case.max_order() {
        return Err(Error::UnsupportedOrder { requested: order, max: case.max_order() });
    }
    let x = Ctx::new(sigma, m);
    let (rho, psi) = match case {
        SeriesCase::Simple => simple(&x)?,
        SeriesCase::Double(b) => double(&x, sigma, m, b)?,
        SeriesCase::Triple => triple(&x, sigma, m)?,
        SeriesCase::Quadruple(b) => quadruple(&x, m, b)?,
    };
    let nr = case.rho_len(order);
    Ok(SeriesSolution { case, sigma, rho_lead: x.sl, rho: rho[..nr].to_vec(), psi: psi[..order].to_vec(), order })
}

fn simple(x: &Ctx) -> Result<(Vec<f64>, Vec<f64>)> {
    let p1 = x.d[1];
    if p1 == 0.0 {
        return Err(Error::Contract("simple-root series needs P'(sigma) != 0".into()));
    }
    let mut r = [0.0; 4];
    let mut p = [0.0; 4];
    r[1] = x.a_k(1, &r, &p) / (2.0 * x.sl);
    p[1] = 0.0;
    r[2] = x.a_k(2, &r, &p) / (2.0 * x.sl);
    let b2 =
        -x.d[2] * p[1] * p[1] / 2.0 + (x.a1 - r[1] / x.sl) * x.s - x.b1 * x.sl * x.sa - (1.0 + 2.0 * x.g1) * x.sl / 2.0;
    p[2] = b2 / p1;
    r[3] = x.a_k(3, &r, &p) / (2.0 * x.sl);
    let b3 = -p[1] * p[2] * x.d[2] - r[2] / x.sl * x.s - p[1].powi(3) / 6.0 * x.d[3] + x.a1 * p[1] * x.c
        - 2.0 * p[1] * (x.b1 * x.sl + x.b0 * r[1]) * x.ca;
    p[3] = b3 / p1;
    Ok((r[1..].to_vec(), p[1..].to_vec()))
}

fn double(x: &Ctx, sigma: f64, m: &ModelParams, b: Branch) -> Result<(Vec<f64>, Vec<f64>)> {
    let p2 = x.d[2];
    let cs = c_function(sigma, m);
    if !(p2 * cs > 0.0) {
        return Err(Error::NoSolution(format!("double root needs P''(sigma)*C(sigma) > 0, got P''={p2:e}, C={cs:e}")));
    }
    let phi = (2.0 * cs / p2).sqrt();
    let mut r = [0.0; 4];
    let mut p = [0.0; 4];
    p[1] = b.sign() * phi;
    r[1] = x.a_k(1, &r, &p) / (2.0 * x.sl);
    r[2] = x.a_k(2, &r, &p) / (2.0 * x.sl);
    let w = x.b1 * x.sl + x.b0 * r[1];
    let c2 = -p[1].powi(3) / 6.0 * x.d[3] + x.a1 * p[1] * x.c - 2.0 * p[1] * w * x.ca;
    p[2] = (c2 - x.s * r[2] / x.sl) / (p2 * p[1]);
    r[3] = x.a_k(3, &r, &p) / (2.0 * x.sl);
    let c3 = r[1] / 2.0
        - x.g1 * r[1]
        - x.g2 * x.sl
        - p[2] * p[2] / 2.0 * p2
        - p[1] * p[1] * p[2] / 2.0 * x.d[3]
        - p[1].powi(4) / 24.0 * x.d[4]
        - x.a1 * (p[2] * x.c - p[1] * p[1] * x.s / 2.0)
        - (2.0 * p[2] * w + 2.0 * p[1] * x.b0 * r[2]) * x.ca
        + (2.0 * p[1] * p[1] * w + x.a2 - x.b2 * x.sl - x.b1 * r[1]) * x.sa;
    p[3] = (c3 - x.s * r[3] / x.sl) / (p2 * p[1]);
    Ok((r[1..].to_vec(), p[1..].to_vec()))
}

fn triple(x: &Ctx, sigma: f64, m: &ModelParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let p3 = x.d[3];
    if p3 == 0.0 {
        return Err(Error::Contract("triple-root series needs P'''(sigma) != 0".into()));
    }
    let n = n_function(sigma, m);
    if n == 0.0 {
        return Err(Error::NoSolution("triple root needs N(sigma) != 0".into()));
    }
    let chi = (n / p3).cbrt();
    let (sl, l, s, c) = (x.sl, x.l, x.s, x.c);
    let mut r = [0.0; 8];
    let mut p = [0.0; 6];
    p[2] = chi;
    r[3] = -c / (4.0 * l);
    let lin = 2.0 / (p3 * chi * chi);
    // (β₁√λ + β₀ρ₃) enters through the ψ-derivative of β sin(2ψ+ν), hence 2cos(2σ+ν).
    let drive = 2.0 * x.ca * (x.b1 * sl + x.b0 * r[3]) - x.a1 * c;
    r[4] = 0.0;
    p[3] = (0.0 - s * r[4] / sl) * lin;
    r[5] = chi * s / (2.0 * sl) / (2.0 * sl);
    let n4 = -chi * drive - p3 * chi * p[3] * p[3] / 2.0 - x.d[4] * chi.powi(4) / 24.0;
    p[4] = (n4 - s * r[5] / sl) * lin;
    r[6] = p[3] * s / (2.0 * sl) / (2.0 * sl);
    let n5 = -p[3] * drive - p3 * (6.0 * chi * p[3] * p[4] + p[3].powi(3)) / 6.0 - x.d[4] * chi.powi(3) * p[3] / 6.0;
    p[5] = (n5 - s * r[6] / sl) * lin;
    r[7] = (p[4] * s - chi * chi * c) / (2.0 * sl) / (2.0 * sl);
    Ok((r[1..].to_vec(), p[1..].to_vec()))
}

fn quadruple(x: &Ctx, m: &ModelParams, b: Branch) -> Result<(Vec<f64>, Vec<f64>)> {
    let q = q_value(m);
    if !(q > 0.0) {
        return Err(Error::NoSolution(format!("quadruple root needs Q > 0, got Q={q}")));
    }
    let sl = x.sl;
    let xi = q.powf(0.25);
    let mut r = [0.0; 7];
    let mut p = [0.0; 5];
    p[1] = b.sign() * xi;
    let p1_3 = p[1].powi(3);
    r[3] = p[1] / (2.0 * sl) / (2.0 * sl);
    p[2] = (0.0 - 2.0 * r[3] / sl) / p1_3;
    r[4] = p[2] / (2.0 * sl) / (2.0 * sl);
    let q3 = -x.a1 * p[1] * p[1] - 4.0 * x.b1 * sl * p[1] * p[1] + p[1].powi(6) / 24.0
        - 1.5 * p[1] * p[1] * p[2] * p[2]
        + p[1] * p[1] * r[2] / sl;
    p[3] = (q3 - 2.0 * r[4] / sl) / p1_3;
    r[5] = (p1_3 + 3.0 * p[3]) / (6.0 * sl) / (2.0 * sl);
    let q4 = -2.0 * x.a1 * p[1] * p[2] - 8.0 * x.b1 * sl * p[1] * p[2] + p[1].powi(5) * p[2] / 4.0
        - p[1] * p[2].powi(3)
        - 3.0 * p[1] * p[1] * p[2] * p[3]
        - 2.0 * p[1] * p[2] * r[2] / sl
        + p[1] * p[1] * r[3] / sl;
    p[4] = (q4 - 2.0 * r[5] / sl) / p1_3;
    r[6] = (p[1] * p[1] * p[2] + p[4] - 2.0 * sl * r[2] * r[2]) / (2.0 * sl) / (2.0 * sl);
    Ok((r[1..].to_vec(), p[1..].to_vec()))
}

/// Residuals of the averaged system at the truncated series, scaled so that
/// both are `O(1)` for a generic non-solution: the amplitude equation divided
/// by `√τ` and the phase equation divided by `ρ√τ`.
pub fn residual_norm(s: &SeriesSolution, m: &ModelParams, tau: f64) -> Result<(f64, f64)> {
    let pt = s.point(tau)?;
    if !(pt.rho > 0.0) {
        return Err(Error::Domain(format!("series amplitude non-positive at tau={tau}")));
    }
    let st = tau.sqrt();
    let (a, b, g) = (m.alpha(tau), m.beta(tau), m.gamma(tau));
    let r1 = pt.drho + g * pt.rho - a * pt.psi.sin() + b * pt.rho * (2.0 * pt.psi + m.nu).sin();
    // ρ² − λτ = (ρ − √(λτ))(ρ + √(λτ)), with the lead written as ρ₋₁√τ.
    let excess = pt.rho_dev * (2.0 * s.rho_lead * st + pt.rho_dev);
    let r2 = pt.dpsi - excess - (a * pt.psi.cos() - b * pt.rho * (2.0 * pt.psi + m.nu).cos()) / pt.rho;
    Ok((r1 / st, r2 / st))
}
