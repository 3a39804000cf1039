//! Echo detection, forward efficiency and the efficiency laws.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::FieldGrid;

/// Peaks must rise at least this fraction of the transmitted peak above
/// their surroundings.
pub const PROMINENCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoReport {
    pub input_energy: f64,
    /// Output energy within ±π/Δ̄ of the transmitted peak.
    pub transmitted_energy: f64,
    pub transmitted_time: f64,
    /// transmitted_energy / input_energy
    pub transmission: f64,
    /// Prominent peaks after the transmitted pulse, increasing.
    pub echo_times: Vec<f64>,
    /// Energy within ±π/Δ̄ of each entry of `echo_times`.
    pub echo_energies: Vec<f64>,
    /// Peak used for the efficiency window, if any.
    pub first_echo_time: Option<f64>,
    /// Integration window [start, end] in ns.
    pub window: Option<(f64, f64)>,
    pub eta_forward: f64,
    /// Δ̄ used for the window, rad/ns.
    pub mean_spacing: f64,
}

fn argmax_in(intensity: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if intensity[i] > intensity[best] {
            best = i;
        }
    }
    best
}

/// Sum of `intensity` over samples with |t − center| ≤ half, times dt.
fn window_energy(times: &[f64], intensity: &[f64], center: f64, half: f64, dt: f64) -> f64 {
    times
        .iter()
        .zip(intensity)
        .filter(|(t, _)| (**t - center).abs() <= half)
        .map(|(_, v)| v)
        .sum::<f64>()
        * dt
}

/// Topographic prominence of the local maximum at `i`, searching at most
/// `reach` samples to either side.
fn prominence(y: &[f64], i: usize, reach: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    let lo = i.saturating_sub(reach);
    for j in (lo..i).rev() {
        if y[j] > peak {
            break;
        }
        left_min = left_min.min(y[j]);
    }
    let mut right_min = peak;
    let hi = (i + reach).min(y.len() - 1);
    for &v in &y[i + 1..=hi] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Indices of local maxima in `lo..hi` whose prominence is at least `min_prominence`.
fn prominent_peaks(y: &[f64], lo: usize, hi: usize, min_prominence: f64, reach: usize) -> Vec<usize> {
    let lo = lo.max(1);
    let hi = hi.min(y.len().saturating_sub(1));
    (lo..hi)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .filter(|&i| prominence(y, i, reach) >= min_prominence)
        .collect()
}

/// Forward efficiency from sampled intensities on a uniform time axis.
///
/// The transmitted pulse is the output maximum within ±π/Δ̄ of the input
/// peak. The first echo is the highest prominent peak in
/// (t_tx + π/Δ̄, t_tx + 3π/Δ̄), and η integrates the output over ±π/Δ̄
/// around it, divided by the input energy. For a uniform comb this is the
/// window [π/Δ, 3π/Δ] after the transmitted pulse.
///
/// A zero spacing (a single resolvable tooth) has no echo: the whole output
/// counts as transmitted.
pub fn analyze_echo(times: &[f64], intensity_in: &[f64], intensity_out: &[f64], mean_spacing: f64) -> Result<EchoReport> {
    let n = times.len();
    if n < 3 || intensity_in.len() != n || intensity_out.len() != n {
        return Err(Error::invalid("intensity traces must share a time axis of at least 3 samples"));
    }
    if !(mean_spacing >= 0.0) || !mean_spacing.is_finite() {
        return Err(Error::invalid("mean spacing must be finite and >= 0"));
    }
    let dt = times[1] - times[0];
    let half = PI / mean_spacing;
    let input_energy: f64 = intensity_in.iter().sum::<f64>() * dt;
    if !(input_energy > 0.0) {
        return Err(Error::invalid("input pulse carries no energy"));
    }
    if mean_spacing == 0.0 {
        let transmitted_energy = intensity_out.iter().sum::<f64>() * dt;
        return Ok(EchoReport {
            input_energy,
            transmitted_energy,
            transmitted_time: times[argmax_in(intensity_out, 0, n - 1)],
            transmission: transmitted_energy / input_energy,
            echo_times: Vec::new(),
            echo_energies: Vec::new(),
            first_echo_time: None,
            window: None,
            eta_forward: 0.0,
            mean_spacing,
        });
    }
    let index_of = |t: f64| (((t - times[0]) / dt).round().max(0.0) as usize).min(n - 1);

    let t_in = times[argmax_in(intensity_in, 0, n - 1)];
    let tx = argmax_in(intensity_out, index_of(t_in - half), index_of(t_in + half));
    let t_tx = times[tx];
    let last = times[n - 1];
    if t_tx + 3.0 * half > last {
        return Err(Error::GridCoverage(format!(
            "echo window up to {:.4} ns exceeds the grid end {last:.4} ns",
            t_tx + 3.0 * half
        )));
    }
    let transmitted_energy = window_energy(times, intensity_out, t_tx, half, dt);

    let threshold = PROMINENCE * intensity_out[tx];
    let reach = (2.0 * half / dt).ceil() as usize;
    let after = index_of(t_tx + half) + 1;
    let peaks = prominent_peaks(intensity_out, after, n - 1, threshold, reach);
    let echo_times: Vec<f64> = peaks.iter().map(|&i| times[i]).collect();
    let echo_energies = echo_times
        .iter()
        .map(|&t| window_energy(times, intensity_out, t, half, dt))
        .collect();

    let first = peaks
        .iter()
        .copied()
        .filter(|&i| times[i] > t_tx + half && times[i] < t_tx + 3.0 * half)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if intensity_out[b] >= intensity_out[i] => Some(b),
            _ => Some(i),
        });
    let (first_echo_time, window, eta_forward) = match first {
        Some(i) => {
            let t = times[i];
            if t + half > last {
                return Err(Error::GridCoverage("echo window exceeds the grid end".into()));
            }
            let e = window_energy(times, intensity_out, t, half, dt);
            (Some(t), Some((t - half, t + half)), e / input_energy)
        }
        None => (None, None, 0.0),
    };

    Ok(EchoReport {
        input_energy,
        transmitted_energy,
        transmitted_time: t_tx,
        transmission: transmitted_energy / input_energy,
        echo_times,
        echo_energies,
        first_echo_time,
        window,
        eta_forward,
        mean_spacing,
    })
}

pub fn efficiency_forward(input: &FieldGrid, output: &FieldGrid, mean_spacing: f64) -> Result<EchoReport> {
    if input.grid != output.grid {
        return Err(Error::invalid("input and output fields must share a grid"));
    }
    analyze_echo(&input.times(), &input.intensity(), &output.intensity(), mean_spacing)
}

/// η_b = ε (1 − e^{−αL})²
pub fn efficiency_backward_model(alpha_l: f64, epsilon: f64) -> Result<f64> {
    if !(alpha_l >= 0.0) {
        return Err(Error::invalid(format!("alpha*L must be >= 0, got {alpha_l}")));
    }
    Ok(epsilon * (-(-alpha_l).exp_m1()).powi(2))
}

/// η_f = ε (αL)² e^{−αL}
pub fn efficiency_forward_model(alpha_l: f64, epsilon: f64) -> f64 {
    epsilon * alpha_l * alpha_l * (-alpha_l).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyFit {
    /// 1/m; multiply by the cell length for the dimensionless depth.
    pub alpha: f64,
    pub epsilon: f64,
    pub r_squared: f64,
    pub samples: usize,
}

impl EfficiencyFit {
    /// Maximum of the forward law, reached at αL = 2: 4ε/e².
    pub fn max_forward(&self) -> f64 {
        efficiency_forward_model(2.0, self.epsilon)
    }

    /// αL → ∞ limit of the backward law.
    pub fn backward_saturation(&self) -> f64 {
        self.epsilon
    }
}

fn r_squared(y: &[f64], predicted: impl Iterator<Item = f64>) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(predicted).map(|(v, p)| (v - p).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

fn check_samples(samples: &[(f64, f64)], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(Error::invalid(format!("need at least {min} samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(l, y)| !(l >= 0.0) || !y.is_finite() || !l.is_finite()) {
        return Err(Error::invalid("samples need finite L >= 0 and finite values"));
    }
    let mut ls: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ls.sort_by(f64::total_cmp);
    if ls.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("sample lengths must be distinct"));
    }
    Ok(())
}

/// Least-squares fit of transmitted fraction = e^{−αL}. ε is reported as 1.
pub fn fit_transmission_alpha(samples: &[(f64, f64)]) -> Result<EfficiencyFit> {
    check_samples(samples, 3)?;
    // Log-linear start through the origin, then Gauss–Newton on the raw residuals.
    let (mut num, mut den) = (0.0, 0.0);
    for &(l, y) in samples {
        if y > 0.0 {
            num -= l * y.ln();
            den += l * l;
        }
    }
    let mut alpha = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    let sse = |a: f64| samples.iter().map(|&(l, y)| (y - (-a * l).exp()).powi(2)).sum::<f64>();
    for _ in 0..100 {
        let (mut jtj, mut jtr) = (0.0, 0.0);
        for &(l, y) in samples {
            let f = (-alpha * l).exp();
            let j = -l * f;
            jtj += j * j;
            jtr += j * (y - f);
        }
        if jtj == 0.0 {
            break;
        }
        let mut step = jtr / jtj;
        let current = sse(alpha);
        while sse(alpha + step) > current && step.abs() > 1e-300 {
            step *= 0.5;
        }
        alpha += step;
        if step.abs() <= 1e-15 * alpha.abs().max(1e-300) {
            break;
        }
    }
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    Ok(EfficiencyFit {
        alpha,
        epsilon: 1.0,
        r_squared: r_squared(&ys, samples.iter().map(|&(l, _)| (-alpha * l).exp())),
        samples: samples.len(),
    })
}

/// Two-parameter least squares of η = ε (αL)² e^{−αL}.
///
/// ε is eliminated analytically for a coarse log scan over α, then both
/// parameters are polished by Gauss–Newton.
pub fn fit_forward_law(samples: &[(f64, f64)]) -> Result<EfficiencyFit> {
    check_samples(samples, 4)?;
    let l_max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let l_min = samples.iter().map(|s| s.0).filter(|&l| l > 0.0).fold(f64::INFINITY, f64::min);
    if l_max == 0.0 {
        return Err(Error::invalid("forward-law fit needs a nonzero length"));
    }
    let shape = |a: f64, l: f64| (a * l).powi(2) * (-a * l).exp();
    let profile = |a: f64| {
        let (mut yf, mut ff) = (0.0, 0.0);
        for &(l, y) in samples {
            let f = shape(a, l);
            yf += y * f;
            ff += f * f;
        }
        let eps = if ff > 0.0 { yf / ff } else { 0.0 };
        let sse: f64 = samples.iter().map(|&(l, y)| (y - eps * shape(a, l)).powi(2)).sum();
        (eps, sse)
    };

    let (lo, hi) = ((1e-3 / l_max).ln(), (1e3 / l_min).ln());
    let steps = 2000;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let a = (lo + (hi - lo) * k as f64 / steps as f64).exp();
        let (_, s) = profile(a);
        if s < best.0 {
            best = (s, a);
        }
    }
    let mut alpha = best.1;
    let mut eps = profile(alpha).0;

    let sse = |a: f64, e: f64| samples.iter().map(|&(l, y)| (y - e * shape(a, l)).powi(2)).sum::<f64>();
    for _ in 0..200 {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(l, y) in samples {
            let f = shape(alpha, l);
            let r = y - eps * f;
            // ∂/∂α of ε(αL)²e^{−αL} = ε f (2/α − L)
            let ja = eps * f * (2.0 / alpha - l);
            let je = f;
            a11 += ja * ja;
            a12 += ja * je;
            a22 += je * je;
            b1 += ja * r;
            b2 += je * r;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let mut da = (a22 * b1 - a12 * b2) / det;
        let mut de = (a11 * b2 - a12 * b1) / det;
        let current = sse(alpha, eps);
        let mut tries = 0;
        while (alpha + da <= 0.0 || sse(alpha + da, eps + de) > current) && tries < 60 {
            da *= 0.5;
            de *= 0.5;
            tries += 1;
        }
        if tries == 60 {
            break;
        }
        alpha += da;
        eps += de;
        if da.abs() <= 1e-15 * alpha && de.abs() <= 1e-15 * eps.abs().max(1e-300) {
            break;
        }
    }

    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRegime(format!(
            "forward-law fit gave epsilon = {eps:.6} outside [0, 1]"
        )));
    }
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    Ok(EfficiencyFit {
        alpha,
        epsilon: eps,
        r_squared: r_squared(&ys, samples.iter().map(|&(l, _)| eps * shape(alpha, l))),
        samples: samples.len(),
    })
}
