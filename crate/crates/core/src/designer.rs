//! Choice of `(δ, ν)` that makes a prescribed phase `σ` a stable simple root.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhaseParams;
use crate::phase::derivs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub sigma_target: f64,
    pub kappa: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub p_value: f64,
    pub p_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub sigma: f64,
    pub kappa: f64,
    pub delta: f64,
    pub nu: f64,
    /// `"sigma=0"`, `"sigma=pi/2"`, `"sigma=pi"` or `"generic"`.
    pub recipe: String,
    pub certificate: Certificate,
}

impl Design {
    pub fn phase(&self) -> PhaseParams {
        PhaseParams::new(self.delta, self.nu, self.kappa)
    }
}

const ANGLE_EPS: f64 = 1e-12;

fn certify(spec: &DesignSpec, nu: f64, recipe: &str) -> Result<Design> {
    let p = PhaseParams::new(spec.delta, nu, spec.kappa);
    let d = derivs(spec.sigma_target, &p);
    if d[0].abs() >= 1e-12 {
        return Err(Error::Constraint(format!("certificate failed: |P(sigma)| = {:e} is not below 1e-12", d[0].abs())));
    }
    if !(d[1] > 0.0) {
        return Err(Error::Constraint(format!("certificate failed: P'(sigma) = {} is not positive", d[1])));
    }
    Ok(Design {
        sigma: spec.sigma_target,
        kappa: spec.kappa,
        delta: spec.delta,
        nu,
        recipe: recipe.into(),
        certificate: Certificate { p_value: d[0], p_prime: d[1] },
    })
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < ANGLE_EPS
}

pub fn design_excitation(spec: &DesignSpec) -> Result<Design> {
    let (s, k, d) = (spec.sigma_target, spec.kappa, spec.delta);
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("kappa must be positive, got {k}")));
    }
    if !(0.0..TAU).contains(&s) {
        return Err(Error::Domain(format!("sigma_target must lie in [0, 2pi), got {s}")));
    }
    if !d.is_finite() || d == 0.0 {
        return Err(Error::Domain(format!("delta must be finite and nonzero, got {d}")));
    }
    if near(s, 0.0) {
        let bound = -(k * k + 0.25).sqrt();
        if !(d < bound) {
            return Err(Error::Constraint(format!("sigma=0 requires delta < -sqrt(kappa^2 + 1/4) = {bound}")));
        }
        return certify(spec, PI - (-k / d).asin(), "sigma=0");
    }
    if near(s, PI) {
        if !(d < -k) {
            return Err(Error::Constraint(format!("sigma=pi requires delta < -kappa = {}", -k)));
        }
        return certify(spec, PI - (-k / d).asin(), "sigma=pi");
    }
    if near(s, FRAC_PI_2) {
        let x = (k - 1.0) / d;
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Constraint(format!("sigma=pi/2 requires 0 < (kappa - 1)/delta <= 1, got {x}")));
        }
        let nu = x.asin();
        if !(d * nu.cos() < 0.0) {
            return Err(Error::Constraint(format!("sigma=pi/2 requires delta*cos(nu) < 0, got {}", d * nu.cos())));
        }
        return certify(spec, nu, "sigma=pi/2");
    }
    generic(spec)
}

/// Solves `δ sin(2σ + ν) = sin σ − κ` for `ν ∈ [0, π)`, taking the branch with the larger `P′`.
fn generic(spec: &DesignSpec) -> Result<Design> {
    let (s, k, d) = (spec.sigma_target, spec.kappa, spec.delta);
    let x = (s.sin() - k) / d;
    if x.abs() > 1.0 {
        return Err(Error::Constraint(format!("|sin(sigma) - kappa| <= |delta| fails: ratio {x}")));
    }
    let a = x.asin();
    let best = [a, PI - a]
        .into_iter()
        .map(|phase| (phase - 2.0 * s).rem_euclid(TAU))
        .filter(|nu| *nu < PI)
        .map(|nu| (nu, derivs(s, &PhaseParams::new(d, nu, k))[1]))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        None => Err(Error::Constraint("no nu in [0, pi) solves P(sigma) = 0 for this delta".into())),
        Some((_, pp)) if !(pp > 0.0) => Err(Error::Constraint(format!(
            "P'(sigma) > 0 fails on every branch (best {pp}); try the opposite sign of delta"
        ))),
        Some((nu, _)) => certify(spec, nu, "generic"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sigma_target: f64, kappa: f64, delta: f64) -> DesignSpec {
        DesignSpec { sigma_target, kappa, delta }
    }

    #[test]
    fn recipe_examples() {
        let z = design_excitation(&spec(0.0, 0.5, -1.0)).unwrap();
        assert!((z.nu - 5.0 * PI / 6.0).abs() < 1e-14);
        assert!((z.certificate.p_prime - (-2.0 * (5.0 * PI / 6.0).cos() - 1.0)).abs() < 1e-12);

        let p = design_excitation(&spec(PI, 1.0, -2.0)).unwrap();
        assert!((p.nu - 5.0 * PI / 6.0).abs() < 1e-14);
        assert!((p.certificate.p_prime - (1.0 + 2.0 * 3f64.sqrt())).abs() < 1e-12);

        let h = design_excitation(&spec(FRAC_PI_2, 0.25, -1.5)).unwrap();
        assert!((h.nu - PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn violations_name_the_inequality() {
        let e = design_excitation(&spec(0.0, 0.5, -0.6)).unwrap_err();
        assert!(e.to_string().contains("sqrt(kappa^2 + 1/4)"), "{e}");
        let e = design_excitation(&spec(PI, 1.0, -0.5)).unwrap_err();
        assert!(e.to_string().contains("delta < -kappa"), "{e}");
        let e = design_excitation(&spec(FRAC_PI_2, 0.25, 1.5)).unwrap_err();
        assert!(e.to_string().contains("(kappa - 1)/delta"), "{e}");
    }

    #[test]
    fn generic_angles_certify() {
        for k in 0..24 {
            let s = 0.1 + k as f64 * 0.26;
            for d in [-2.5, 2.5] {
                if let Ok(des) = design_excitation(&spec(s, 0.7, d)) {
                    assert!(des.certificate.p_value.abs() < 1e-12 && des.certificate.p_prime > 0.0);
                    assert!((0.0..PI).contains(&des.nu));
                }
            }
            assert!(
                design_excitation(&spec(s, 0.7, -2.5)).is_ok() || design_excitation(&spec(s, 0.7, 2.5)).is_ok(),
                "sigma {s}"
            );
        }
    }
}
