//! Atom-spec files.
//!
//! TOML schema (all keys required unless noted):
//!
//! ```toml
//! name = "Cs-133"
//! nuclear_spin = 3.5          # I
//! g_nuclear = 0.7369          # g_I
//! mass_kg = 2.207e-25
//!
//! [[manifold]]
//! label = "6s1/2"
//! j = 0.5
//! l = 0
//! s = 0.5
//! hyperfine_a_mhz = 2298.1579425   # A/h
//! energy_offset_thz = 0.0          # unperturbed centre
//! # nuclear_spin / g_nuclear may be repeated here to override the atom values
//! ```
//!
//! Magneton values are fixed CODATA constants (see [`crate::units`]).

use std::path::Path;

use serde::Deserialize;

use crate::angular::Spin;
use crate::error::{Error, Result};
use crate::hyperfine::ManifoldSpec;
use crate::units::{mhz_to_rad_per_ns, thz_to_rad_per_ns};

const CS133: &str = include_str!("../data/cs133.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    pub name: String,
    pub mass_kg: f64,
    pub manifolds: Vec<ManifoldSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    name: String,
    nuclear_spin: f64,
    g_nuclear: f64,
    mass_kg: f64,
    manifold: Vec<RawManifold>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    label: String,
    j: f64,
    l: u32,
    s: f64,
    hyperfine_a_mhz: f64,
    energy_offset_thz: f64,
    nuclear_spin: Option<f64>,
    g_nuclear: Option<f64>,
}

impl AtomSpec {
    /// The shipped cesium 6s1/2 / 8p3/2 spec.
    pub fn cesium() -> Self {
        Self::parse(CS133).expect("bundled cesium spec is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawAtom = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if !(raw.mass_kg > 0.0) {
            return Err(Error::invalid(format!("mass_kg must be positive, got {}", raw.mass_kg)));
        }
        let mut manifolds = Vec::with_capacity(raw.manifold.len());
        for m in raw.manifold {
            let spec = ManifoldSpec {
                nuclear_spin: Spin::new(m.nuclear_spin.unwrap_or(raw.nuclear_spin))?,
                j: Spin::new(m.j)?,
                l: m.l,
                s: Spin::new(m.s)?,
                hyperfine_a: mhz_to_rad_per_ns(m.hyperfine_a_mhz),
                g_nuclear: m.g_nuclear.unwrap_or(raw.g_nuclear),
                energy_offset: thz_to_rad_per_ns(m.energy_offset_thz),
                label: m.label,
            };
            spec.validate()?;
            manifolds.push(spec);
        }
        if manifolds.is_empty() {
            return Err(Error::invalid("atom spec has no [[manifold]] entries"));
        }
        Ok(AtomSpec {
            name: raw.name,
            mass_kg: raw.mass_kg,
            manifolds,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn manifold(&self, label: &str) -> Result<&ManifoldSpec> {
        self.manifolds
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::invalid(format!("atom {} has no manifold '{label}'", self.name)))
    }
}
