//! Intra-atomic frequency comb quantum memory simulator.
//!
//! Internal units: time in ns, angular frequency in rad/ns, length in m.

// NaN-rejecting checks are written as `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod atom;
pub mod comb;
pub mod doppler;
pub mod echo;
pub mod error;
pub mod hyperfine;
pub mod optimize;
pub mod pi_pulse;
pub mod propagation;
pub mod scenario;
pub mod sweep;
pub mod toy;
pub mod units;

pub use error::{Error, Result};
