//! Assembly of a calibrated comb from an atom spec, plus the shipped
//! cesium defaults.

use serde::{Deserialize, Serialize};

use crate::atom::AtomSpec;
use crate::comb::{build_comb, calibrate_dipole, uniform_populations, CombRequest, FrequencyComb, MediumSpec, Polarization};
use crate::error::{Error, Result};
use crate::hyperfine::DressedManifold;
use crate::units::{ghz_to_rad_per_ns, mhz_to_rad_per_ns};

/// How the reduced dipole element is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipoleScale {
    /// d_red in C·m.
    Absolute(f64),
    /// Peak per-tooth optical depth g L / γ over the medium length.
    PeakDepth(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombSetup {
    pub atom: AtomSpec,
    pub ground: String,
    pub excited: String,
    /// T
    pub field: f64,
    /// γ, rad/ns.
    pub linewidth: f64,
    pub medium: MediumSpec,
    /// Uniform when `None`.
    pub populations: Option<Vec<f64>>,
}

impl CombSetup {
    /// Cs 6s1/2 → 8p3/2 at 0.1 T, 𝒩 = 1e18 m⁻³, L = 5 cm, γ = 2π·5 MHz.
    pub fn cesium() -> Self {
        let atom = AtomSpec::cesium();
        let mass = atom.mass_kg;
        CombSetup {
            atom,
            ground: "6s1/2".into(),
            excited: "8p3/2".into(),
            field: 0.1,
            linewidth: mhz_to_rad_per_ns(5.0),
            medium: MediumSpec {
                density: 1e18,
                length: 0.05,
                temperature: 0.0,
                mass,
            },
            populations: None,
        }
    }

    pub fn manifolds(&self) -> Result<(DressedManifold, DressedManifold)> {
        Ok((
            DressedManifold::compute(self.atom.manifold(&self.ground)?, self.field)?,
            DressedManifold::compute(self.atom.manifold(&self.excited)?, self.field)?,
        ))
    }

    /// Reduced dipole element (C·m) implied by `scale`.
    pub fn dipole(&self, polarization: Polarization, scale: DipoleScale) -> Result<f64> {
        let (g, e) = self.manifolds()?;
        let req = self.request(&g, &e, polarization, 0.0);
        match scale {
            DipoleScale::Absolute(d) => Ok(d),
            DipoleScale::PeakDepth(target) => calibrate_dipole(&req, target),
        }
    }

    pub fn comb(&self, polarization: Polarization, scale: DipoleScale) -> Result<FrequencyComb> {
        let (g, e) = self.manifolds()?;
        let mut req = self.request(&g, &e, polarization, 0.0);
        req.dipole = match scale {
            DipoleScale::Absolute(d) => d,
            DipoleScale::PeakDepth(target) => calibrate_dipole(&req, target)?,
        };
        build_comb(&req)
    }

    fn request<'a>(
        &self,
        g: &'a DressedManifold,
        e: &'a DressedManifold,
        polarization: Polarization,
        dipole: f64,
    ) -> CombRequest<'a> {
        CombRequest {
            ground: g,
            excited: e,
            polarization,
            dipole,
            medium: self.medium,
            linewidth: self.linewidth,
            ground_populations: self.populations.clone().unwrap_or_else(|| uniform_populations(g)),
        }
    }
}

/// Per-polarization pulse and calibration defaults for the cesium setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDefaults {
    pub polarization: Polarization,
    /// Peak per-tooth optical depth at the 5 cm reference length.
    pub target_peak_depth: f64,
    /// Pulse carrier offset from ω_L, rad/ns.
    pub carrier_offset: f64,
    /// τ, ns.
    pub pulse_width: f64,
}

pub fn cesium_channel(polarization: Polarization) -> Result<ChannelDefaults> {
    let (target_peak_depth, offset_ghz, pulse_width) = match polarization {
        Polarization::SigmaPlus => (CS_SIGMA_PLUS.0, CS_SIGMA_PLUS.1, CS_SIGMA_PLUS.2),
        Polarization::SigmaMinus => (CS_SIGMA_MINUS.0, CS_SIGMA_MINUS.1, CS_SIGMA_MINUS.2),
        Polarization::Pi => return Err(Error::invalid("no cesium defaults for pi polarization")),
    };
    Ok(ChannelDefaults {
        polarization,
        target_peak_depth,
        carrier_offset: ghz_to_rad_per_ns(offset_ghz),
        pulse_width,
    })
}

// (peak depth, carrier offset GHz, τ ns)
const CS_SIGMA_PLUS: (f64, f64, f64) = (52.5, -8.2, 0.6);
const CS_SIGMA_MINUS: (f64, f64, f64) = (81.0, -2.1, 0.6);
