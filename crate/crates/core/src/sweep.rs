//! Cell-length sweeps, efficiency-law fits and the temperature scan.

use serde::{Deserialize, Serialize};

use crate::comb::FrequencyComb;
use crate::doppler::{thermal_sweep, ThermalSpec};
use crate::echo::{analyze_echo, fit_forward_law, fit_transmission_alpha, EfficiencyFit};
use crate::error::{Error, Result};
use crate::optimize::golden_section_max;
use crate::propagation::{GaussianPulse, Propagator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// m
    pub length: f64,
    pub transmission: f64,
    pub eta_forward: f64,
    /// ns, relative to the transmitted peak.
    pub echo_delay: Option<f64>,
}

/// Forward efficiency and transmission at each length, thermally averaged
/// according to `spec` (T = 0 gives a single propagation).
pub fn length_sweep(
    pulse: &GaussianPulse,
    comb: &FrequencyComb,
    lengths: &[f64],
    spec: &ThermalSpec,
    propagator: &Propagator,
) -> Result<Vec<SweepPoint>> {
    if lengths.is_empty() {
        return Err(Error::invalid("length sweep needs at least one length"));
    }
    let spacing = comb.mean_spacing();
    let input = propagator.input(pulse);
    let times = input.times();
    let intensity_in = input.intensity();
    let traces = thermal_sweep(pulse, comb, lengths, spec, propagator)?;
    lengths
        .iter()
        .zip(&traces)
        .map(|(&length, out)| {
            let r = analyze_echo(&times, &intensity_in, out, spacing)?;
            Ok(SweepPoint {
                length,
                transmission: r.transmission,
                eta_forward: r.eta_forward,
                echo_delay: r.first_echo_time.map(|t| t - r.transmitted_time),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFits {
    pub transmission: EfficiencyFit,
    pub forward: EfficiencyFit,
}

pub fn fit_sweep(points: &[SweepPoint]) -> Result<SweepFits> {
    let tx: Vec<(f64, f64)> = points.iter().map(|p| (p.length, p.transmission)).collect();
    let fw: Vec<(f64, f64)> = points.iter().map(|p| (p.length, p.eta_forward)).collect();
    Ok(SweepFits {
        transmission: fit_transmission_alpha(&tx)?,
        forward: fit_forward_law(&fw)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePoint {
    /// K
    pub temperature: f64,
    /// τ used (optimized when a search range is given), ns.
    pub pulse_width: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub r_squared: f64,
    /// Peak of the fitted forward law, 4ε/e².
    pub max_eta_forward: f64,
    /// Saturated backward efficiency, ε.
    pub eta_backward: f64,
}

/// Search range for the pulse width, ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthSearch {
    pub min: f64,
    pub max: f64,
    pub tolerance: f64,
}

/// Fitted efficiency laws at each temperature.
///
/// With a `search`, τ is chosen by golden section to maximize the fitted ε
/// (the saturated backward efficiency); otherwise the pulse is used as is.
#[allow(clippy::too_many_arguments)]
pub fn efficiency_vs_temperature(
    pulse: &GaussianPulse,
    comb: &FrequencyComb,
    lengths: &[f64],
    temperatures: &[f64],
    mass: f64,
    order: usize,
    propagator: &Propagator,
    search: Option<WidthSearch>,
) -> Result<Vec<TemperaturePoint>> {
    let fit_at = |temperature: f64, width: f64| -> Result<SweepFits> {
        let spec = ThermalSpec::for_comb(comb, temperature, mass, order)?;
        let p = GaussianPulse { width, ..*pulse };
        fit_sweep(&length_sweep(&p, comb, lengths, &spec, propagator)?)
    };
    temperatures
        .iter()
        .map(|&temperature| {
            let width = match search {
                None => pulse.width,
                Some(s) => {
                    let objective = |w: f64| match fit_at(temperature, w) {
                        Ok(f) => Ok(f.forward.epsilon),
                        Err(Error::OutOfRegime(_)) => Ok(f64::NEG_INFINITY),
                        Err(e) => Err(e),
                    };
                    golden_section_max(objective, s.min, s.max, s.tolerance)?.x
                }
            };
            let fits = fit_at(temperature, width)?;
            Ok(TemperaturePoint {
                temperature,
                pulse_width: width,
                alpha: fits.forward.alpha,
                epsilon: fits.forward.epsilon,
                r_squared: fits.forward.r_squared,
                max_eta_forward: fits.forward.max_forward(),
                eta_backward: fits.forward.backward_saturation(),
            })
        })
        .collect()
}
