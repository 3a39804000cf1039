//! Physical constants and unit conversions.
//!
//! The simulation works internally in nanoseconds, radians per nanosecond
//! and metres. Comb detunings sit at the GHz scale and echo times at the ns
//! scale, so both stay close to unity. Everything entering from a config
//! file or leaving through an export is converted here.

use std::f64::consts::PI;

/// Reduced Planck constant, J s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Speed of light in m/ns.
pub const SPEED_OF_LIGHT_M_PER_NS: f64 = SPEED_OF_LIGHT * 1e-9;
/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Nuclear magneton, J/T (CODATA 2018).
pub const NUCLEAR_MAGNETON: f64 = 5.050_783_746_1e-27;

pub const TWO_PI: f64 = 2.0 * PI;

/// Ordinary frequency in Hz to angular frequency in rad/ns.
pub fn hz_to_rad_per_ns(hz: f64) -> f64 {
    TWO_PI * hz * 1e-9
}

/// Angular frequency in rad/ns to ordinary frequency in Hz.
pub fn rad_per_ns_to_hz(w: f64) -> f64 {
    w / TWO_PI * 1e9
}

pub fn ghz_to_rad_per_ns(ghz: f64) -> f64 {
    TWO_PI * ghz
}

pub fn rad_per_ns_to_ghz(w: f64) -> f64 {
    w / TWO_PI
}

pub fn mhz_to_rad_per_ns(mhz: f64) -> f64 {
    TWO_PI * mhz * 1e-3
}

pub fn thz_to_rad_per_ns(thz: f64) -> f64 {
    TWO_PI * thz * 1e3
}

/// Rate in 1/s to rate in 1/ns.
pub fn per_s_to_per_ns(rate: f64) -> f64 {
    rate * 1e-9
}

pub fn per_ns_to_per_s(rate: f64) -> f64 {
    rate * 1e9
}

/// Energy in joules expressed as an angular frequency in rad/ns.
pub fn joule_to_rad_per_ns(energy: f64) -> f64 {
    energy / HBAR * 1e-9
}
