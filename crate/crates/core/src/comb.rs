//! Dipole transition amplitudes and frequency-comb assembly.
//!
//! A comb tooth is one ground → excited transition of the dressed atom. Its
//! coupling is the per-length rate
//!
//! g = 𝒩 |d|² ρ ω_L / (2 ħ ε₀ c)
//!
//! stored in rad/ns per metre, so that the transfer function
//! Σ g / (γ/2 + i(δ + ω)) comes out in 1/m with ω in rad/ns.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::clebsch_gordan;
use crate::error::{Error, Result};
use crate::hyperfine::DressedManifold;
use crate::units::{
    hz_to_rad_per_ns, per_ns_to_per_s, per_s_to_per_ns, rad_per_ns_to_hz, EPSILON_0, HBAR,
    SPEED_OF_LIGHT, SPEED_OF_LIGHT_M_PER_NS,
};

/// Teeth whose relative strength falls below this fraction of the strongest
/// transition are dropped.
pub const STRENGTH_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    SigmaPlus,
    SigmaMinus,
    Pi,
}

impl Polarization {
    /// Spherical component q of the dipole operator (Δm = q).
    pub fn q(self) -> i32 {
        match self {
            Polarization::SigmaPlus => 1,
            Polarization::SigmaMinus => -1,
            Polarization::Pi => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarization::SigmaPlus => "sigma_plus",
            Polarization::SigmaMinus => "sigma_minus",
            Polarization::Pi => "pi",
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma_plus" => Ok(Polarization::SigmaPlus),
            "sigma_minus" => Ok(Polarization::SigmaMinus),
            "pi" => Ok(Polarization::Pi),
            other => Err(Error::invalid(format!(
                "unknown polarization '{other}' (expected sigma_plus, sigma_minus or pi)"
            ))),
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Transition amplitudes ⟨e_n| d_q |g_m⟩ in units of the reduced element.
///
/// Rows index excited levels, columns ground levels. The operator acts on
/// the electronic factor only, with ⟨J' mJ+q| d_q |J mJ⟩ given by the
/// Clebsch–Gordan coefficient ⟨J mJ; 1 q | J' mJ+q⟩.
pub fn dipole_matrix(
    ground: &DressedManifold,
    excited: &DressedManifold,
    polarization: Polarization,
) -> Result<DMatrix<Complex64>> {
    let (gs, es) = (&ground.spec, &excited.spec);
    if gs.nuclear_spin != es.nuclear_spin {
        return Err(Error::invalid(format!(
            "manifolds {} and {} have different nuclear spins",
            gs.label, es.label
        )));
    }
    let q = polarization.q();
    let dim_i = gs.nuclear_spin.dim();
    let (dim_jg, dim_je) = (gs.j.dim(), es.j.dim());
    let tj = gs.j.twice() as i32;
    let tjp = es.j.twice() as i32;

    let mut uncoupled = DMatrix::<Complex64>::zeros(dim_i * dim_je, dim_i * dim_jg);
    for (b, tmj) in gs.j.twice_m_values().into_iter().enumerate() {
        let Some(c) = es.j.index_of(tmj + 2 * q) else {
            continue;
        };
        let amp = clebsch_gordan(tj, tmj, 2, 2 * q, tjp, tmj + 2 * q);
        if amp == 0.0 {
            continue;
        }
        for a in 0..dim_i {
            uncoupled[(a * dim_je + c, a * dim_jg + b)] = Complex64::new(amp, 0.0);
        }
    }
    Ok(excited.eigenvectors.adjoint() * uncoupled * &ground.eigenvectors)
}

/// One absorption line of the comb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tooth {
    /// δ relative to the carrier, rad/ns.
    pub detuning: f64,
    /// g, rad/ns per metre.
    pub coupling: f64,
    /// γ, rad/ns.
    pub linewidth: f64,
    /// |d_nm|² ρ_mm in units of the squared reduced dipole element.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyComb {
    teeth: Vec<Tooth>,
    /// ω_L, rad/ns.
    carrier: f64,
    polarization: Polarization,
}

impl FrequencyComb {
    pub fn new(mut teeth: Vec<Tooth>, carrier: f64, polarization: Polarization) -> Result<Self> {
        for t in &teeth {
            if !t.detuning.is_finite() || !t.coupling.is_finite() || !t.weight.is_finite() {
                return Err(Error::invalid("tooth with non-finite field"));
            }
            if !(t.linewidth > 0.0) {
                return Err(Error::invalid(format!("tooth linewidth must be > 0, got {}", t.linewidth)));
            }
            if t.coupling < 0.0 || t.weight < 0.0 {
                return Err(Error::invalid("tooth coupling and weight must be >= 0"));
            }
        }
        if !carrier.is_finite() {
            return Err(Error::invalid("carrier must be finite"));
        }
        teeth.sort_by(|a, b| a.detuning.total_cmp(&b.detuning));
        Ok(FrequencyComb {
            teeth,
            carrier,
            polarization,
        })
    }

    pub fn teeth(&self) -> &[Tooth] {
        &self.teeth
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn len(&self) -> usize {
        self.teeth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teeth.is_empty()
    }

    /// Carrier wavenumber k = ω_L / c, rad/m.
    pub fn wavenumber(&self) -> f64 {
        self.carrier / SPEED_OF_LIGHT_M_PER_NS
    }

    /// Average gap between adjacent resolvable teeth, rad/ns.
    ///
    /// Teeth closer than their linewidth merge into one resolvable feature.
    /// Zero for fewer than two teeth.
    pub fn mean_spacing(&self) -> f64 {
        let n = self.teeth.len();
        if n < 2 {
            return 0.0;
        }
        let mut features = 1usize;
        let mut last = self.teeth[0].detuning;
        for t in &self.teeth[1..] {
            if t.detuning - last > t.linewidth {
                features += 1;
                last = t.detuning;
            }
        }
        let span = self.teeth[n - 1].detuning - self.teeth[0].detuning;
        span / (features.max(2) - 1) as f64
    }

    /// Every detuning moved by `offset`; couplings and linewidths unchanged.
    pub fn shifted(&self, offset: f64) -> FrequencyComb {
        FrequencyComb {
            teeth: self
                .teeth
                .iter()
                .map(|t| Tooth {
                    detuning: t.detuning + offset,
                    ..*t
                })
                .collect(),
            carrier: self.carrier,
            polarization: self.polarization,
        }
    }

    /// Copy with every coupling multiplied by `factor` (≥ 0).
    pub fn scaled(&self, factor: f64) -> FrequencyComb {
        FrequencyComb {
            teeth: self
                .teeth
                .iter()
                .map(|t| Tooth {
                    coupling: t.coupling * factor,
                    weight: t.weight * factor,
                    ..*t
                })
                .collect(),
            carrier: self.carrier,
            polarization: self.polarization,
        }
    }

    /// Writes the tooth table with a versioned `#` header. Frequencies are
    /// ordinary frequencies (Hz), couplings in rad/(s m).
    pub fn to_csv(&self, optical_depth_length: Option<f64>) -> String {
        let mut out = String::new();
        writeln!(out, "# combforge comb v1").unwrap();
        writeln!(
            out,
            "# carrier_Hz={} polarization={}",
            rad_per_ns_to_hz(self.carrier),
            self.polarization
        )
        .unwrap();
        let depth_col = if optical_depth_length.is_some() { ",optical_depth" } else { "" };
        writeln!(out, "# detuning_Hz,coupling_per_s_m,linewidth_Hz,weight{depth_col}").unwrap();
        for t in &self.teeth {
            write!(
                out,
                "{},{},{},{}",
                rad_per_ns_to_hz(t.detuning),
                per_ns_to_per_s(t.coupling),
                rad_per_ns_to_hz(t.linewidth),
                t.weight
            )
            .unwrap();
            if let Some(len) = optical_depth_length {
                write!(out, ",{}", t.coupling * len / t.linewidth).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut carrier = None;
        let mut polarization = None;
        let mut version_seen = false;
        let mut teeth = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let header = header.trim();
                if header == "combforge comb v1" {
                    version_seen = true;
                }
                for token in header.split_whitespace() {
                    if let Some(v) = token.strip_prefix("carrier_Hz=") {
                        let hz: f64 = v
                            .parse()
                            .map_err(|_| Error::Parse(format!("line {}: bad carrier '{v}'", lineno + 1)))?;
                        carrier = Some(hz_to_rad_per_ns(hz));
                    } else if let Some(v) = token.strip_prefix("polarization=") {
                        polarization = Some(v.parse::<Polarization>()?);
                    }
                }
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("line {}: non-numeric field", lineno + 1)))?;
            if fields.len() < 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected at least 4 columns, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            teeth.push(Tooth {
                detuning: hz_to_rad_per_ns(fields[0]),
                coupling: per_s_to_per_ns(fields[1]),
                linewidth: hz_to_rad_per_ns(fields[2]),
                weight: fields[3],
            });
        }
        if !version_seen {
            return Err(Error::Parse("missing '# combforge comb v1' header".into()));
        }
        let carrier = carrier.ok_or_else(|| Error::Parse("missing carrier_Hz in header".into()))?;
        let polarization = polarization.ok_or_else(|| Error::Parse("missing polarization in header".into()))?;
        FrequencyComb::new(teeth, carrier, polarization)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Vapour-cell parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    /// 𝒩, atoms per m³.
    pub density: f64,
    /// Cell length L, m.
    pub length: f64,
    /// K
    pub temperature: f64,
    /// Atomic mass, kg.
    pub mass: f64,
}

impl MediumSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.density > 0.0 && self.length > 0.0 && self.mass > 0.0 && self.temperature >= 0.0;
        if !ok || !self.temperature.is_finite() {
            return Err(Error::invalid(format!(
                "medium needs positive density, length, mass and temperature >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Inputs for building a comb from two dressed manifolds.
#[derive(Debug, Clone)]
pub struct CombRequest<'a> {
    pub ground: &'a DressedManifold,
    pub excited: &'a DressedManifold,
    pub polarization: Polarization,
    /// Reduced dipole element d_red, C·m.
    pub dipole: f64,
    pub medium: MediumSpec,
    /// γ, rad/ns.
    pub linewidth: f64,
    /// ρ_mm per ground level, summing to one.
    pub ground_populations: Vec<f64>,
}

impl CombRequest<'_> {
    fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        if !(self.linewidth > 0.0) {
            return Err(Error::invalid("linewidth must be > 0"));
        }
        if !(self.dipole >= 0.0) {
            return Err(Error::invalid("dipole scale must be >= 0"));
        }
        if self.ground_populations.len() != self.ground.len() {
            return Err(Error::invalid(format!(
                "expected {} ground populations, got {}",
                self.ground.len(),
                self.ground_populations.len()
            )));
        }
        if self.ground_populations.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("ground populations must be non-negative"));
        }
        let total: f64 = self.ground_populations.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("ground populations sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Carrier ω_L: gap between the manifold centres, rad/ns.
    pub fn carrier(&self) -> f64 {
        self.excited.spec.energy_offset - self.ground.spec.energy_offset
    }
}

/// Uniform ground-state populations 1/N_g.
pub fn uniform_populations(ground: &DressedManifold) -> Vec<f64> {
    let n = ground.len();
    vec![1.0 / n as f64; n]
}

/// Builds the comb: one tooth per transition whose strength |d|²ρ exceeds
/// [`STRENGTH_FLOOR`] times the strongest one.
pub fn build_comb(req: &CombRequest<'_>) -> Result<FrequencyComb> {
    req.validate()?;
    let d = dipole_matrix(req.ground, req.excited, req.polarization)?;
    let carrier = req.carrier();

    let mut lines = Vec::new();
    for (m, &rho) in req.ground_populations.iter().enumerate() {
        for n in 0..req.excited.len() {
            let weight = d[(n, m)].norm_sqr() * rho;
            if weight > 0.0 {
                lines.push((req.excited.energies[n] - req.ground.energies[m], weight));
            }
        }
    }
    let max_weight = lines.iter().map(|l| l.1).fold(0.0, f64::max);
    if max_weight == 0.0 || req.dipole == 0.0 {
        return Err(Error::EmptyComb);
    }

    // g = N d² w ω_L / (2 ħ ε0 c), SI rad/(s m), then to rad/ns per m.
    let omega_si = per_ns_to_per_s(carrier);
    let unit_coupling =
        req.medium.density * req.dipole * req.dipole * omega_si / (2.0 * HBAR * EPSILON_0 * SPEED_OF_LIGHT);
    let teeth: Vec<Tooth> = lines
        .into_iter()
        .filter(|&(_, w)| w >= STRENGTH_FLOOR * max_weight)
        .map(|(detuning, weight)| Tooth {
            detuning,
            coupling: per_s_to_per_ns(unit_coupling * weight),
            linewidth: req.linewidth,
            weight,
        })
        .collect();
    if teeth.iter().all(|t| t.coupling == 0.0) {
        return Err(Error::EmptyComb);
    }
    FrequencyComb::new(teeth, carrier, req.polarization)
}

/// Reduced dipole element (C·m) giving the requested peak per-tooth optical
/// depth over `medium.length`.
pub fn calibrate_dipole(req: &CombRequest<'_>, target_peak_depth: f64) -> Result<f64> {
    if !(target_peak_depth > 0.0) {
        return Err(Error::invalid("target peak optical depth must be > 0"));
    }
    let reference = 1e-30;
    let probe = CombRequest {
        dipole: reference,
        ..req.clone()
    };
    let comb = build_comb(&probe)?;
    let peak = optical_depth(&comb, &req.medium)
        .into_iter()
        .fold(0.0, f64::max);
    // Optical depth scales with d².
    Ok(reference * (target_peak_depth / peak).sqrt())
}

/// N identical teeth at offset + nΔ, n = 0..N-1.
pub fn uniform_comb(
    teeth: usize,
    spacing: f64,
    linewidth: f64,
    coupling: f64,
    offset: f64,
    carrier: f64,
) -> Result<FrequencyComb> {
    if teeth == 0 {
        return Err(Error::invalid("uniform comb needs at least one tooth"));
    }
    if !(spacing > 0.0) {
        return Err(Error::invalid("uniform comb spacing must be > 0"));
    }
    let list = (0..teeth)
        .map(|n| Tooth {
            detuning: offset + n as f64 * spacing,
            coupling,
            linewidth,
            weight: 1.0,
        })
        .collect();
    FrequencyComb::new(list, carrier, Polarization::Pi)
}

/// Uniform comb centred on zero detuning.
pub fn centered_uniform_comb(
    teeth: usize,
    spacing: f64,
    linewidth: f64,
    coupling: f64,
    carrier: f64,
) -> Result<FrequencyComb> {
    let offset = -spacing * (teeth.saturating_sub(1)) as f64 / 2.0;
    uniform_comb(teeth, spacing, linewidth, coupling, offset, carrier)
}

/// Im χ_e(ω) = (𝒩/ħε₀) Σ |d|²ρ γ / (γ² + (δ+ω)²).
///
/// The prefactor 𝒩|d|²ρ/(ħε₀) equals 2 g c / ω_L, so only the comb is needed.
pub fn absorption_spectrum(comb: &FrequencyComb, omegas: &[f64]) -> Result<Vec<f64>> {
    if comb.is_empty() {
        return Err(Error::EmptyComb);
    }
    let scale = 2.0 * SPEED_OF_LIGHT_M_PER_NS / comb.carrier();
    Ok(omegas
        .iter()
        .map(|&w| {
            comb.teeth()
                .iter()
                .map(|t| {
                    let x = t.detuning + w;
                    scale * t.coupling * t.linewidth / (t.linewidth * t.linewidth + x * x)
                })
                .sum()
        })
        .collect())
}

/// Per-tooth optical depth α = 𝒩|d|²ρ ω_L L / (2ħε₀cγ) = g L / γ.
pub fn optical_depth(comb: &FrequencyComb, medium: &MediumSpec) -> Vec<f64> {
    comb.teeth()
        .iter()
        .map(|t| t.coupling * medium.length / t.linewidth)
        .collect()
}
