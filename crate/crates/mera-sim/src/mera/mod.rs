//! Binary 1D MERA with one qubit per renormalized site.

pub mod channel;
pub mod cone;
pub mod params;
pub mod periodic;

pub use channel::{
    averaged_window, doubled_map, doubled_purity, layer_channel, local_density, steady_state, top_state,
    window_fixed_point, DoubledMap, LayerChannel, WindowMap,
};
pub use cone::{build_boundary_cone, build_boundary_cone_mapped, build_local_cone, BoundaryCone};
pub use params::{Flavor, MeraParams, TopAngles, UnitCell};
pub use periodic::{connected_correlator, half_chain_spectrum};

use crate::error::Result;
use crate::linalg::CMat;

/// Transformed subsystem state U_B† ρ_B U_B from the boundary-cone statevector.
pub fn boundary_density(params: &MeraParams, t: usize) -> Result<CMat> {
    let c = build_boundary_cone(params, t)?;
    Ok(c.run().reduced(&c.measured_qubits))
}
