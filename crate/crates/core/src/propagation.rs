//! Frequency-domain propagation through the comb medium.
//!
//! Fourier convention: Ẽ(ω) = ∫ E(t) e^{−iωt} dt and E(t) = (1/2π) ∫ Ẽ(ω) e^{+iωt} dω.
//! Fields are slowly varying envelopes, so ω is the offset from the carrier
//! ω_L and a tooth at detuning δ absorbs at ω = −δ.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::comb::FrequencyComb;
use crate::error::{Error, Result};
use crate::units::{SPEED_OF_LIGHT_M_PER_NS, TWO_PI};

/// Minimum fraction of the pulse energy the grid must capture, in both
/// domains.
pub const COVERAGE: f64 = 0.9999;

pub const DEFAULT_POINTS: usize = 1 << 16;

/// E(t) = E₀ exp(−(t−t₀)²/2τ²) exp(iω_c t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub amplitude: f64,
    /// τ, ns.
    pub width: f64,
    /// t₀, ns.
    pub center: f64,
    /// ω_c, offset of the pulse carrier from ω_L, rad/ns.
    pub carrier_offset: f64,
}

impl GaussianPulse {
    pub fn new(amplitude: f64, width: f64, center: f64, carrier_offset: f64) -> Result<Self> {
        let p = GaussianPulse {
            amplitude,
            width,
            center,
            carrier_offset,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(Error::invalid(format!("pulse width must be > 0, got {}", self.width)));
        }
        if !self.amplitude.is_finite() || !self.center.is_finite() || !self.carrier_offset.is_finite() {
            return Err(Error::invalid("pulse parameters must be finite"));
        }
        Ok(())
    }

    pub fn field(&self, t: f64) -> Complex64 {
        let x = (t - self.center) / self.width;
        Complex64::from_polar(self.amplitude * (-0.5 * x * x).exp(), self.carrier_offset * t)
    }

    /// Exact transform: E₀ √(2π) τ exp(−τ²(ω−ω_c)²/2) exp(−i(ω−ω_c)t₀).
    pub fn spectrum(&self, omega: f64) -> Complex64 {
        let x = (omega - self.carrier_offset) * self.width;
        Complex64::from_polar(
            self.amplitude * (2.0 * PI).sqrt() * self.width * (-0.5 * x * x).exp(),
            -(omega - self.carrier_offset) * self.center,
        )
    }

    /// ∫|E|² dt = E₀² τ √π.
    pub fn energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.width * PI.sqrt()
    }

    pub fn scaled(&self, factor: f64) -> GaussianPulse {
        GaussianPulse {
            amplitude: self.amplitude * factor,
            ..*self
        }
    }
}

/// Optional overrides for the sampling grid; unset fields take defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub points: Option<usize>,
    /// ns
    pub span: Option<f64>,
    /// ns
    pub start: Option<f64>,
}

/// Uniform time axis t_k = start + k·dt with its conjugate frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, dt: f64, points: usize) -> Result<Self> {
        if points < 16 {
            return Err(Error::invalid(format!("grid needs at least 16 points, got {points}")));
        }
        if !(dt > 0.0) || !dt.is_finite() || !start.is_finite() {
            return Err(Error::invalid("grid step must be positive and finite"));
        }
        Ok(TimeGrid { start, dt, points })
    }

    /// Default grid: span = max(40τ, 10·2π/Δ̄, 20/γ_min), starting 12τ
    /// before the pulse centre.
    ///
    /// The 20/γ term keeps the periodic image of the slowly decaying comb
    /// response out of the observation window.
    pub fn resolve(config: &GridConfig, pulse: &GaussianPulse, comb: Option<&FrequencyComb>) -> Result<Self> {
        let points = config.points.unwrap_or(DEFAULT_POINTS);
        let span = match config.span {
            Some(s) => s,
            None => {
                let mut span = 40.0 * pulse.width;
                if let Some(comb) = comb {
                    let spacing = comb.mean_spacing();
                    if spacing > 0.0 {
                        span = span.max(10.0 * TWO_PI / spacing);
                    }
                    let gamma = comb.teeth().iter().map(|t| t.linewidth).fold(f64::INFINITY, f64::min);
                    if gamma.is_finite() {
                        span = span.max(20.0 / gamma);
                    }
                }
                span
            }
        };
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::invalid(format!("grid span must be > 0, got {span}")));
        }
        let start = config.start.unwrap_or(pulse.center - 12.0 * pulse.width);
        TimeGrid::new(start, span / points as f64, points)
    }

    pub fn span(&self) -> f64 {
        self.dt * self.points as f64
    }

    pub fn end(&self) -> f64 {
        self.start + self.dt * (self.points - 1) as f64
    }

    pub fn domega(&self) -> f64 {
        TWO_PI / self.span()
    }

    /// Largest representable |ω|, π/dt.
    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.time(k)).collect()
    }

    /// Frequencies in FFT order: 0, dω, …, then negative values.
    pub fn omegas(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dw = self.domega();
        (0..n)
            .map(|j| {
                let m = if j < (n + 1) / 2 { j } else { j - n };
                m as f64 * dw
            })
            .collect()
    }

    /// Errors unless the pulse energy is captured to [`COVERAGE`] in time
    /// and frequency and every tooth lies inside the Nyquist band.
    pub fn check_coverage(&self, pulse: &GaussianPulse, comb: Option<&FrequencyComb>) -> Result<()> {
        let total = pulse.energy();
        if total == 0.0 {
            return Ok(());
        }
        let in_time: f64 = (0..self.points).map(|k| pulse.field(self.time(k)).norm_sqr()).sum::<f64>() * self.dt;
        if in_time / total < COVERAGE {
            return Err(Error::GridCoverage(format!(
                "time grid [{:.4}, {:.4}] ns holds {:.6} of the pulse energy",
                self.start,
                self.end(),
                in_time / total
            )));
        }
        let in_freq: f64 =
            self.omegas().iter().map(|&w| pulse.spectrum(w).norm_sqr()).sum::<f64>() * self.domega() / TWO_PI;
        if in_freq / total < COVERAGE {
            return Err(Error::GridCoverage(format!(
                "frequency grid (|ω| ≤ {:.4} rad/ns) holds {:.6} of the pulse energy",
                self.nyquist(),
                in_freq / total
            )));
        }
        if let Some(comb) = comb {
            let nyq = self.nyquist();
            if let Some(t) = comb.teeth().iter().find(|t| t.detuning.abs() >= nyq) {
                return Err(Error::GridCoverage(format!(
                    "tooth at {:.4} rad/ns lies outside the Nyquist band ±{nyq:.4} rad/ns",
                    t.detuning
                )));
            }
        }
        Ok(())
    }
}

/// Sampled field in both domains on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub grid: TimeGrid,
    /// E(t_k)
    pub time_field: Vec<Complex64>,
    /// Ẽ(ω_j) in FFT order.
    pub freq_field: Vec<Complex64>,
}

impl FieldGrid {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.grid.omegas()
    }

    pub fn intensity(&self) -> Vec<f64> {
        intensity(&self.time_field)
    }

    /// Σ|E(t)|² dt
    pub fn energy(&self) -> f64 {
        self.time_field.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dt
    }

    /// Σ|Ẽ(ω)|² dω/2π
    pub fn spectral_energy(&self) -> f64 {
        self.freq_field.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.domega() / TWO_PI
    }

    /// CSV with columns t_ns, re_E, im_E, intensity.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# combforge field v1\n# t_ns,re_E,im_E,intensity\n");
        for (k, z) in self.time_field.iter().enumerate() {
            writeln!(out, "{},{},{},{}", self.grid.time(k), z.re, z.im, z.norm_sqr()).unwrap();
        }
        out
    }
}

pub fn intensity(field: &[Complex64]) -> Vec<f64> {
    field.iter().map(|z| z.norm_sqr()).collect()
}

/// 𝒟(ω) = Σ g / (γ/2 + i(δ + ω)) [+ iω/c], in 1/m.
pub fn transfer_function(comb: &FrequencyComb, omega: f64, include_vacuum_phase: bool) -> Complex64 {
    let mut d = Complex64::new(0.0, 0.0);
    for t in comb.teeth() {
        d += t.coupling / Complex64::new(0.5 * t.linewidth, t.detuning + omega);
    }
    if include_vacuum_phase {
        d += Complex64::new(0.0, omega / SPEED_OF_LIGHT_M_PER_NS);
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    /// Report the output in the frame moving with the pulse (no L/c delay).
    pub retarded_time: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions { retarded_time: true }
    }
}

/// Reusable FFT plan for one grid. Cheap to share across threads.
#[derive(Clone)]
pub struct Propagator {
    grid: TimeGrid,
    omegas: Vec<f64>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("grid", &self.grid).finish()
    }
}

impl Propagator {
    pub fn new(grid: TimeGrid) -> Self {
        let inverse = FftPlanner::new().plan_fft_inverse(grid.points);
        Propagator {
            omegas: grid.omegas(),
            grid,
            inverse,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The analytic input sampled on the grid in both domains.
    pub fn input(&self, pulse: &GaussianPulse) -> FieldGrid {
        FieldGrid {
            grid: self.grid,
            time_field: (0..self.grid.points).map(|k| pulse.field(self.grid.time(k))).collect(),
            freq_field: self.omegas.iter().map(|&w| pulse.spectrum(w)).collect(),
        }
    }

    /// Ẽ(L, ω) = Ẽ(0, ω) e^{−𝒟(ω) L}, transformed back to time.
    pub fn propagate(
        &self,
        pulse: &GaussianPulse,
        comb: &FrequencyComb,
        length: f64,
        options: PropagationOptions,
    ) -> Result<FieldGrid> {
        let transfer = self.transfer(pulse, comb, options)?;
        self.propagate_with(pulse, &transfer, length)
    }

    /// 𝒟(ω_j) on this grid, after checking that the grid covers the pulse
    /// and the comb.
    pub fn transfer(
        &self,
        pulse: &GaussianPulse,
        comb: &FrequencyComb,
        options: PropagationOptions,
    ) -> Result<Vec<Complex64>> {
        pulse.validate()?;
        if comb.is_empty() {
            return Err(Error::EmptyComb);
        }
        self.grid.check_coverage(pulse, Some(comb))?;
        let vacuum = !options.retarded_time;
        Ok(self.omegas.iter().map(|&w| transfer_function(comb, w, vacuum)).collect())
    }

    /// Propagation through a precomputed transfer function.
    pub fn propagate_with(&self, pulse: &GaussianPulse, transfer: &[Complex64], length: f64) -> Result<FieldGrid> {
        if !(length >= 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("length must be >= 0, got {length}")));
        }
        if transfer.len() != self.grid.points {
            return Err(Error::invalid("transfer function does not match the grid"));
        }
        let freq_field: Vec<Complex64> = self
            .omegas
            .iter()
            .zip(transfer)
            .map(|(&w, d)| pulse.spectrum(w) * (-d * length).exp())
            .collect();
        let time_field = self.to_time(&freq_field);
        Ok(FieldGrid {
            grid: self.grid,
            time_field,
            freq_field,
        })
    }

    /// E(t_k) = (dω/2π) Σ_j Ẽ(ω_j) e^{iω_j t_k}.
    fn to_time(&self, freq: &[Complex64]) -> Vec<Complex64> {
        let scale = self.grid.domega() / TWO_PI;
        let start = self.grid.start;
        let mut buf: Vec<Complex64> = freq
            .iter()
            .zip(&self.omegas)
            .map(|(x, &w)| x * Complex64::from_polar(scale, w * start))
            .collect();
        self.inverse.process(&mut buf);
        buf
    }
}

/// One-shot propagation on a grid resolved from `config`.
pub fn propagate(
    pulse: &GaussianPulse,
    comb: &FrequencyComb,
    length: f64,
    config: &GridConfig,
    options: PropagationOptions,
) -> Result<FieldGrid> {
    if comb.is_empty() {
        return Err(Error::EmptyComb);
    }
    let grid = TimeGrid::resolve(config, pulse, Some(comb))?;
    Propagator::new(grid).propagate(pulse, comb, length, options)
}
