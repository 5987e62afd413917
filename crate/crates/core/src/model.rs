use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the phase function `P(σ) = δ sin(2σ+ν) − sin σ + κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub delta: f64,
    pub nu: f64,
    pub kappa: f64,
}

impl PhaseParams {
    pub fn new(delta: f64, nu: f64, kappa: f64) -> Self {
        Self { delta, nu, kappa }
    }

    /// Checks the physically meaningful range: κ > 0 and ν ∈ [0, π).
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.nu.is_finite() && self.kappa.is_finite()) {
            return Err(Error::Domain("non-finite phase parameters".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::Domain(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(0.0..std::f64::consts::PI).contains(&self.nu) {
            return Err(Error::Domain(format!("nu must lie in [0, pi), got {}", self.nu)));
        }
        Ok(())
    }
}

/// Coefficients of the averaged system
///
/// ```text
/// ρ' + γ(τ)ρ = α(τ) sin ψ − β(τ) ρ sin(2ψ+ν)
/// ρ(ψ' − ρ² + λτ) = α(τ) cos ψ − β(τ) ρ cos(2ψ+ν)
/// ```
///
/// with `α = √τ Σ α_k τ^{-k}`, `β = Σ β_k τ^{-k}`, `γ = Σ γ_k τ^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub nu: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

fn tail(c: &[f64], k: usize) -> f64 {
    c.get(k).copied().unwrap_or(0.0)
}

pub(crate) fn sum_tail(c: &[f64], tau: f64) -> f64 {
    let inv = 1.0 / tau;
    c.iter().rev().fold(0.0, |acc, &ck| acc * inv + ck)
}

impl ModelParams {
    /// Constant drive `α = √τ`, `β = β₀`, `γ = γ₀`.
    pub fn constant(lambda: f64, nu: f64, beta0: f64, gamma0: f64) -> Self {
        Self { lambda, nu, alpha: vec![1.0], beta: vec![beta0], gamma: vec![gamma0] }
    }

    /// Constant drive expressed through the phase parameters δ = β₀√λ, κ = γ₀√λ.
    pub fn from_phase(lambda: f64, p: &PhaseParams) -> Self {
        let s = lambda.sqrt();
        Self::constant(lambda, p.nu, p.delta / s, p.kappa / s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.alpha.is_empty() || (self.alpha[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("alpha tail must start with alpha_0 = 1".into()));
        }
        if self.gamma.is_empty() || self.gamma[0] == 0.0 {
            return Err(Error::Domain("gamma_0 must be nonzero".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.alpha) && finite(&self.beta) && finite(&self.gamma) && self.nu.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn alpha_k(&self, k: usize) -> f64 {
        tail(&self.alpha, k)
    }
    pub fn beta_k(&self, k: usize) -> f64 {
        tail(&self.beta, k)
    }
    pub fn gamma_k(&self, k: usize) -> f64 {
        tail(&self.gamma, k)
    }

    pub fn alpha(&self, tau: f64) -> f64 {
        tau.sqrt() * sum_tail(&self.alpha, tau)
    }
    pub fn beta(&self, tau: f64) -> f64 {
        sum_tail(&self.beta, tau)
    }
    pub fn gamma(&self, tau: f64) -> f64 {
        sum_tail(&self.gamma, tau)
    }

    pub fn delta(&self) -> f64 {
        self.beta_k(0) * self.lambda.sqrt()
    }
    pub fn kappa(&self) -> f64 {
        self.gamma_k(0) * self.lambda.sqrt()
    }
    pub fn phase(&self) -> PhaseParams {
        PhaseParams::new(self.delta(), self.nu, self.kappa())
    }
}
