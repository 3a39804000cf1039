//! Closed-form single-ground-state comb driven by a weak Gaussian pulse.
//!
//! Teeth sit at δ_n = δ₀ + nΔ for n = 1..=N. After the pulse has passed
//! (t > 5τ) each excited amplitude only accumulates phase, and the emitted
//! field is proportional to their sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub teeth: usize,
    /// δ₀, rad/ns.
    pub delta0: f64,
    /// Δ, rad/ns.
    pub spacing: f64,
    /// Ω = dℰ₀/ħ, rad/ns.
    pub rabi: f64,
    /// τ, ns.
    pub pulse_width: f64,
}

impl ToyModel {
    pub fn new(teeth: usize, delta0: f64, spacing: f64, rabi: f64, pulse_width: f64) -> Result<Self> {
        let m = ToyModel {
            teeth,
            delta0,
            spacing,
            rabi,
            pulse_width,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.teeth == 0 {
            return Err(Error::invalid("toy model needs at least one tooth"));
        }
        if !(self.spacing > 0.0) || !(self.pulse_width > 0.0) {
            return Err(Error::invalid("toy model spacing and pulse width must be > 0"));
        }
        if !self.delta0.is_finite() || !self.rabi.is_finite() {
            return Err(Error::invalid("toy model parameters must be finite"));
        }
        Ok(())
    }

    /// δ_n for n in 1..=N.
    pub fn detuning(&self, n: usize) -> f64 {
        self.delta0 + n as f64 * self.spacing
    }

    fn check_regime(&self, t: f64) -> Result<()> {
        if t <= 5.0 * self.pulse_width {
            return Err(Error::OutOfRegime(format!(
                "t = {t} ns is not after the pulse (needs t > 5τ = {} ns)",
                5.0 * self.pulse_width
            )));
        }
        Ok(())
    }

    /// (iΩ/2) √π τ
    fn prefactor(&self) -> Complex64 {
        Complex64::new(0.0, 0.5 * self.rabi * PI.sqrt() * self.pulse_width)
    }

    /// c_n(t) = (iΩ/2) √π τ exp(−(δ_n τ)²/2 − iδ_n t).
    pub fn excited_amplitude(&self, n: usize, t: f64) -> Result<Complex64> {
        if n == 0 || n > self.teeth {
            return Err(Error::invalid(format!("tooth index {n} outside 1..={}", self.teeth)));
        }
        self.check_regime(t)?;
        let d = self.detuning(n);
        let tau = self.pulse_width;
        Ok(self.prefactor() * Complex64::from_polar((-0.5 * (d * tau).powi(2)).exp(), -d * t))
    }

    /// P(t) = |(iΩ/2) √π τ Σ_n e^{−intΔ}|², with the spectral envelope set
    /// to one (τ⁻¹ ≫ Δ).
    pub fn emission_probability(&self, t: f64) -> Result<f64> {
        self.check_regime(t)?;
        let sum: Complex64 = (1..=self.teeth)
            .map(|n| Complex64::from_polar(1.0, -(n as f64) * t * self.spacing))
            .sum();
        Ok((self.prefactor() * sum).norm_sqr())
    }

    /// |Σ_n c_n(t)|² keeping the Gaussian envelope and δ₀.
    pub fn emission_probability_exact(&self, t: f64) -> Result<f64> {
        self.check_regime(t)?;
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 1..=self.teeth {
            sum += self.excited_amplitude(n, t)?;
        }
        Ok(sum.norm_sqr())
    }
}
