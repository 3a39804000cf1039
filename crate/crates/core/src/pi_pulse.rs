//! π-pulse transfer between the excited manifold and a spin manifold with
//! an identical comb.
//!
//! The 2N-dimensional space lists the N excited amplitudes first, then the
//! N spin amplitudes, paired by index.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::Operator;
use crate::comb::FrequencyComb;
use crate::error::{Error, Result};

/// U(θ) = exp(−iθX/2) with X = Σ_n (|e_n⟩⟨s_n| + |s_n⟩⟨e_n|).
///
/// Since X² = 1 this is cos(θ/2)·1 − i sin(θ/2)·X.
pub fn pi_pulse_unitary(n: usize, theta: f64) -> Result<Operator> {
    if n == 0 {
        return Err(Error::invalid("pulse unitary needs N >= 1"));
    }
    if !(0.0..=2.0 * PI).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0, 2π], got {theta}")));
    }
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut u = Operator::zeros(2 * n, 2 * n);
    for k in 0..n {
        u[(k, k)] = Complex64::new(c, 0.0);
        u[(n + k, n + k)] = Complex64::new(c, 0.0);
        u[(k, n + k)] = Complex64::new(0.0, -s);
        u[(n + k, k)] = Complex64::new(0.0, -s);
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Excited,
    Spin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationVector {
    pub amplitudes: Vec<Complex64>,
    pub manifold: Manifold,
}

impl ExcitationVector {
    pub fn excited(amplitudes: Vec<Complex64>) -> Self {
        ExcitationVector {
            amplitudes,
            manifold: Manifold::Excited,
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Free evolution c_n → c_n e^{−iδ_n t}.
pub fn evolve(state: &ExcitationVector, comb: &FrequencyComb, t: f64) -> Result<ExcitationVector> {
    if state.len() != comb.len() {
        return Err(Error::invalid(format!(
            "state has {} amplitudes but the comb has {} teeth",
            state.len(),
            comb.len()
        )));
    }
    Ok(ExcitationVector {
        amplitudes: state
            .amplitudes
            .iter()
            .zip(comb.teeth())
            .map(|(c, tooth)| c * Complex64::from_polar(1.0, -tooth.detuning * t))
            .collect(),
        manifold: state.manifold,
    })
}

/// Applies a full-space unitary to an excited or spin vector, returning the
/// half selected by `target`.
fn apply(u: &Operator, state: &ExcitationVector, target: Manifold) -> ExcitationVector {
    let n = state.len();
    let offset_in = if state.manifold == Manifold::Excited { 0 } else { n };
    let offset_out = if target == Manifold::Excited { 0 } else { n };
    let amplitudes = (0..n)
        .map(|row| {
            (0..n)
                .map(|col| u[(offset_out + row, offset_in + col)] * state.amplitudes[col])
                .sum()
        })
        .collect();
    ExcitationVector {
        amplitudes,
        manifold: target,
    }
}

/// Dephase for `t1`, π pulse to the spin manifold, hold, π pulse back.
///
/// Returns the excited amplitudes immediately after the second pulse:
/// −e^{−iδ_n t1} e^{−Γ·hold/2} c_n, where Γ is the optional spin decay rate
/// (1/ns, population). The overall −1 marks the backward-retrieval phase.
pub fn storage_cycle(
    state: &ExcitationVector,
    comb: &FrequencyComb,
    t1: f64,
    hold: f64,
    spin_decay: f64,
) -> Result<ExcitationVector> {
    if state.manifold != Manifold::Excited {
        return Err(Error::invalid("storage cycle starts from the excited manifold"));
    }
    if !(t1 >= 0.0) || !(hold >= 0.0) || !(spin_decay >= 0.0) {
        return Err(Error::invalid("t1, hold and spin decay must be >= 0"));
    }
    let n = state.len();
    let u = pi_pulse_unitary(n, PI)?;
    let dephased = evolve(state, comb, t1)?;
    let mut spin = apply(&u, &dephased, Manifold::Spin);
    let damping = (-0.5 * spin_decay * hold).exp();
    for c in &mut spin.amplitudes {
        *c *= damping;
    }
    Ok(apply(&u, &spin, Manifold::Excited))
}

/// Time at which the comb rephases after a storage cycle:
/// t1 + hold + (2π/Δ − t1).
pub fn rephasing_time(t1: f64, hold: f64, spacing: f64) -> Result<f64> {
    if !(spacing > 0.0) {
        return Err(Error::invalid("spacing must be > 0"));
    }
    let period = 2.0 * PI / spacing;
    if !(0.0..=period).contains(&t1) || !(hold >= 0.0) {
        return Err(Error::invalid(format!("need 0 <= t1 <= 2π/Δ = {period} and hold >= 0")));
    }
    Ok(t1 + hold + (period - t1))
}
