//! Classical simulation of MERA ground states of the transverse-field Ising
//! chain on a trapped-ion quantum computer: variational optimization,
//! causal-cone circuits, a calibrated noise model, shot-level tomography and
//! entanglement analysis.

pub mod analysis;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod mera;
pub mod noise;
pub mod numerics;
pub mod optimizer;
pub mod par;
pub mod rng;
pub mod shots;

pub use error::{Error, Result};
