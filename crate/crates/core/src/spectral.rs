//! Bath spectral density and thermal occupation factors.
//!
//! Units follow ħ = k_B = 1; frequencies, temperatures and inverse times are
//! all measured in the same scale (normally the cutoff ω_c).

use crate::error::{domain, Result};

/// Functional family of the spectral density. Only the Ohmic form exists today.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralModel {
    /// `J(ω) = η ω exp(−ω/ω_c)`
    #[default]
    Ohmic,
}

/// Ohmic bath with exponential cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    model: SpectralModel,
    eta: f64,
    omega_c: f64,
}

impl SpectralDensity {
    pub fn ohmic(eta: f64, omega_c: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return domain(format!(
                "coupling strength must be finite and >= 0, got {eta}"
            ));
        }
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return domain(format!(
                "cutoff frequency must be finite and > 0, got {omega_c}"
            ));
        }
        Ok(Self {
            model: SpectralModel::Ohmic,
            eta,
            omega_c,
        })
    }

    pub fn model(&self) -> SpectralModel {
        self.model
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// Spectral weight `J(ω)`.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return domain(format!("spectral density needs omega >= 0, got {omega}"));
        }
        Ok(omega * self.weight_over_omega(omega))
    }

    /// `J(ω)/ω`, finite at ω = 0. Kernel integrands are written in terms of this.
    #[inline]
    pub(crate) fn weight_over_omega(&self, omega: f64) -> f64 {
        match self.model {
            SpectralModel::Ohmic => self.eta * (-omega / self.omega_c).exp(),
        }
    }
}

/// `coth(ω/2T)`; equals 1 at T = 0.
pub fn thermal_factor(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return domain(format!("thermal factor needs omega > 0, got {omega}"));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return domain(format!(
            "temperature must be finite and >= 0, got {temperature}"
        ));
    }
    if temperature == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 / (omega / (2.0 * temperature)).tanh())
}

/// `ω·coth(ω/2T)`, continued to `2T` at ω = 0.
///
/// Below `10⁻³·min(T, ω_c)` the series `2T·(1 + x²/3 − x⁴/45)`, `x = ω/2T`, is used.
#[inline]
pub(crate) fn omega_thermal_factor(omega: f64, temperature: f64, omega_c: f64) -> f64 {
    if temperature == 0.0 {
        return omega;
    }
    if omega < 1e-3 * temperature.min(omega_c) {
        let x = omega / (2.0 * temperature);
        let x2 = x * x;
        return 2.0 * temperature * (1.0 + x2 / 3.0 - x2 * x2 / 45.0);
    }
    omega / (omega / (2.0 * temperature)).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ohmic_values() {
        let sd = SpectralDensity::ohmic(0.05, 1.0).unwrap();
        assert_eq!(sd.evaluate(0.0).unwrap(), 0.0);
        let j1 = sd.evaluate(1.0).unwrap();
        assert!((j1 - 0.05 * (-1.0f64).exp()).abs() < 1e-17);
        assert!((j1 - 0.018_393_972_058_572_12).abs() < 1e-15);
        let zero = SpectralDensity::ohmic(0.0, 1.0).unwrap();
        assert_eq!(zero.evaluate(2.3).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let sd = SpectralDensity::ohmic(0.05, 1.0).unwrap();
        assert!(sd.evaluate(-0.1).is_err());
        assert!(SpectralDensity::ohmic(-1.0, 1.0).is_err());
        assert!(SpectralDensity::ohmic(0.1, 0.0).is_err());
        assert!(thermal_factor(0.0, 0.2).is_err());
        assert!(thermal_factor(-1.0, 0.2).is_err());
        assert!(thermal_factor(1.0, -0.2).is_err());
    }

    #[test]
    fn decays_at_high_frequency() {
        let sd = SpectralDensity::ohmic(0.05, 1.0).unwrap();
        assert!(sd.evaluate(100.0).unwrap() < 1e-40);
    }

    #[test]
    fn thermal_factor_values() {
        let c = thermal_factor(0.4, 0.2).unwrap();
        assert!((c - 1.313_035_285_499_331_3).abs() < 1e-14);
        assert_eq!(thermal_factor(1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn thermal_factor_small_frequency_matches_series() {
        // coth(x) = 1/x + x/3 - x^3/45 + 2x^5/945
        let x: f64 = 0.001 / 0.4;
        let series = 1.0 / x + x / 3.0 - x.powi(3) / 45.0 + 2.0 * x.powi(5) / 945.0;
        let c = thermal_factor(0.001, 0.2).unwrap();
        assert!((c - series).abs() / series < 1e-13);
        assert!((c - 400.0).abs() < 1e-3);
    }

    #[test]
    fn classical_limit() {
        let t = 0.2;
        let w = 1e-6;
        let v = w * thermal_factor(w, t).unwrap();
        assert!((v - 2.0 * t).abs() / (2.0 * t) < 1e-6);
        // series branch and direct branch agree at the switch point
        let edge = 1e-3 * t;
        let lo = omega_thermal_factor(edge * (1.0 - 1e-12), t, 1.0);
        let hi = omega_thermal_factor(edge * (1.0 + 1e-12), t, 1.0);
        assert!((lo - hi).abs() < 1e-14);
        assert_eq!(omega_thermal_factor(0.0, t, 1.0), 2.0 * t);
    }

    proptest! {
        #[test]
        fn thermal_factor_above_one_and_increasing(w in 1e-3f64..10.0, t in 1e-3f64..5.0, dt in 1e-3f64..1.0) {
            let a = thermal_factor(w, t).unwrap();
            let b = thermal_factor(w, t + dt).unwrap();
            prop_assert!(a >= 1.0);
            prop_assert!(b >= a);
        }

        #[test]
        fn linear_in_eta(eta in 0.0f64..1.0, w in 0.0f64..50.0, wc in 0.1f64..5.0) {
            let a = SpectralDensity::ohmic(eta, wc).unwrap().evaluate(w).unwrap();
            let b = SpectralDensity::ohmic(2.0 * eta, wc).unwrap().evaluate(w).unwrap();
            prop_assert!((b - 2.0 * a).abs() <= 1e-15 * b.abs().max(1e-300));
            prop_assert!(a >= 0.0);
        }
    }
}
