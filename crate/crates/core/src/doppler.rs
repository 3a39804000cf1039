//! Thermal averaging over the 1-D Maxwell–Boltzmann velocity distribution.
//!
//! An atom moving at v along the beam sees every tooth moved by k·v. The
//! output intensities of the velocity classes are averaged, never the
//! fields.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::FrequencyComb;
use crate::error::{Error, Result};
use crate::propagation::{intensity, GaussianPulse, PropagationOptions, Propagator};
use crate::units::BOLTZMANN;

pub const DEFAULT_ORDER: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    /// K
    pub temperature: f64,
    /// kg
    pub mass: f64,
    /// k = ω_L / c, rad/m.
    pub wavenumber: f64,
    /// Gauss–Hermite order, odd.
    pub order: usize,
}

impl ThermalSpec {
    pub fn new(temperature: f64, mass: f64, wavenumber: f64, order: usize) -> Result<Self> {
        let s = ThermalSpec {
            temperature,
            mass,
            wavenumber,
            order,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn for_comb(comb: &FrequencyComb, temperature: f64, mass: f64, order: usize) -> Result<Self> {
        Self::new(temperature, mass, comb.wavenumber(), order)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if !(self.mass > 0.0) {
            return Err(Error::invalid(format!("mass must be > 0, got {}", self.mass)));
        }
        if !self.wavenumber.is_finite() {
            return Err(Error::invalid("wavenumber must be finite"));
        }
        if self.order == 0 || self.order.is_multiple_of(2) {
            return Err(Error::invalid(format!("quadrature order must be odd and >= 1, got {}", self.order)));
        }
        Ok(())
    }

    /// Most probable speed √(2k_BT/m), m/s.
    pub fn thermal_speed(&self) -> f64 {
        (2.0 * BOLTZMANN * self.temperature / self.mass).sqrt()
    }
}

/// Physicists' Gauss–Hermite rule (weight e^{−x²}): nodes ascending,
/// weights summing to √π.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("Gauss-Hermite order must be >= 1"));
    }
    // Golub–Welsch: eigenvalues of the Jacobi matrix, then Newton polish.
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    // Orthonormal recurrence p_{k+1} = x√(2/(k+1)) p_k − √(k/(k+1)) p_{k−1}.
    let eval = |x: f64| {
        let mut prev = 0.0;
        let mut cur = std::f64::consts::PI.powf(-0.25);
        let mut christoffel = cur * cur;
        for k in 0..n {
            let next = x * (2.0 / (k + 1) as f64).sqrt() * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
            prev = cur;
            cur = next;
            if k + 1 < n {
                christoffel += cur * cur;
            }
        }
        // cur = p_n, prev = p_{n−1}; p_n' = √(2n) p_{n−1}
        (cur, (2.0 * n as f64).sqrt() * prev, christoffel)
    };
    let mut weights = Vec::with_capacity(n);
    for x in &mut nodes {
        for _ in 0..5 {
            let (p, dp, _) = eval(*x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        weights.push(1.0 / eval(*x).2);
    }
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// Velocity classes (m/s) and normalized weights for the 1-D Maxwell
/// distribution p(v) ∝ exp(−mv²/2k_BT).
pub fn velocity_nodes(spec: &ThermalSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    if spec.temperature == 0.0 {
        return Ok(vec![(0.0, 1.0)]);
    }
    let (x, w) = gauss_hermite(spec.order)?;
    let total: f64 = w.iter().sum();
    let u = spec.thermal_speed();
    Ok(x.iter().zip(&w).map(|(&x, &w)| (u * x, w / total)).collect())
}

/// The comb seen by an atom at velocity v: δ → δ + k·v.
pub fn shifted_comb(comb: &FrequencyComb, velocity: f64, wavenumber: f64) -> FrequencyComb {
    // k (rad/m) · v (m/s) is in rad/s.
    comb.shifted(wavenumber * velocity * 1e-9)
}

/// Per-node transfer functions, computed in parallel.
fn node_transfers(
    pulse: &GaussianPulse,
    comb: &FrequencyComb,
    nodes: &[(f64, f64)],
    spec: &ThermalSpec,
    propagator: &Propagator,
) -> Result<Vec<Vec<Complex64>>> {
    nodes
        .par_iter()
        .map(|&(v, _)| {
            propagator.transfer(pulse, &shifted_comb(comb, v, spec.wavenumber), PropagationOptions::default())
        })
        .collect()
}

/// Σ_i w_i |E(L, t; comb shifted by k v_i)|² for each requested length.
///
/// Velocity classes run in parallel; the weighted sum is taken in node
/// order so results do not depend on scheduling.
pub fn thermal_sweep(
    pulse: &GaussianPulse,
    comb: &FrequencyComb,
    lengths: &[f64],
    spec: &ThermalSpec,
    propagator: &Propagator,
) -> Result<Vec<Vec<f64>>> {
    let nodes = velocity_nodes(spec)?;
    let transfers = node_transfers(pulse, comb, &nodes, spec, propagator)?;
    lengths
        .iter()
        .map(|&length| {
            let per_node: Vec<Vec<f64>> = transfers
                .par_iter()
                .map(|d| propagator.propagate_with(pulse, d, length).map(|f| intensity(&f.time_field)))
                .collect::<Result<_>>()?;
            let mut avg = vec![0.0; propagator.grid().points];
            for (trace, &(_, w)) in per_node.iter().zip(&nodes) {
                for (a, v) in avg.iter_mut().zip(trace) {
                    *a += w * v;
                }
            }
            Ok(avg)
        })
        .collect()
}

pub fn thermal_average(
    pulse: &GaussianPulse,
    comb: &FrequencyComb,
    length: f64,
    spec: &ThermalSpec,
    propagator: &Propagator,
) -> Result<Vec<f64>> {
    Ok(thermal_sweep(pulse, comb, &[length], spec, propagator)?.remove(0))
}
