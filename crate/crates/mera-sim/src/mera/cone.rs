//! Causal-cone circuits of the infinite T-layer binary MERA.
//!
//! Internal site labels put the cone pair at (-1, 0) on every level; physical
//! sites 0 and 1 of the chain are these two. Qubit layout of the local cone
//! (2T+2 qubits):
//!
//! * `0..T`        left-edge renormalized sites, traced out (top layer first)
//! * `T, T+1`      physical sites 0 and 1
//! * `T+2..2T+2`   right-edge renormalized sites (bottom layer first)

use crate::error::{Error, Result};
use crate::gates::{Circuit, GateOp};
use crate::mera::params::MeraParams;

pub const MAX_T: usize = 6;

fn check_t(t: usize) -> Result<()> {
    if !(1..=MAX_T).contains(&t) {
        return Err(Error::InvalidInput(format!("T must lie in 1..={MAX_T}, got {t}")));
    }
    Ok(())
}

/// Gate list of the full local cone on 2T+2 qubits.
pub fn local_cone_ops(params: &MeraParams, t: usize) -> Result<Vec<GateOp>> {
    params.check_depth(t)?;
    check_t(t)?;
    let mut ops = Vec::new();
    let mut left = 0usize;
    let right = t + 1;
    let top_is_zero = params.top.is_none();
    if let Some(top) = &params.top {
        ops.extend(top.gates(left, right));
    }
    for tau in (1..=t).rev() {
        let cell = params.cell(tau);
        let fresh_left = t + 1 - tau;
        let fresh_right = t + 1 + tau;
        let merge = top_is_zero && tau == t;
        ops.extend(cell.iso_gates(left, fresh_left, merge));
        ops.extend(cell.iso_gates(right, fresh_right, merge));
        ops.extend(cell.dis_gates(fresh_left, right));
        left = fresh_left;
    }
    Ok(ops)
}

/// Cone circuit for local observables on physical sites 0 and 1.
pub fn build_local_cone(params: &MeraParams, t: usize) -> Result<Circuit> {
    let ops = local_cone_ops(params, t)?;
    Circuit::new(2 * t + 2, ops, vec![t, t + 1])
}

/// Qubits of the local-cone layout that hold the right-edge renormalized
/// sites, i.e. the holographic representation of B = [2, ∞).
pub fn boundary_qubits(t: usize) -> Vec<usize> {
    (t + 2..2 * t + 2).collect()
}

/// Boundary cone circuit plus, for each compact qubit, its index in the
/// local-cone layout.
#[derive(Debug, Clone)]
pub struct BoundaryCone {
    pub circuit: Circuit,
    pub source_qubits: Vec<usize>,
}

pub fn build_boundary_cone_mapped(params: &MeraParams, t: usize) -> Result<BoundaryCone> {
    let ops = local_cone_ops(params, t)?;
    let (ops, kept) = prune_to_light_cone(&ops, 2 * t + 2, &boundary_qubits(t));
    let remap = |q: usize| kept.iter().position(|&k| k == q).expect("kept qubit");
    let ops: Vec<GateOp> = ops
        .into_iter()
        .map(|mut g| {
            g.targets = g.targets.iter().map(|&q| remap(q)).collect();
            g
        })
        .collect();
    let measured = boundary_qubits(t).into_iter().map(remap).collect();
    Ok(BoundaryCone { circuit: Circuit::new(kept.len(), ops, measured)?, source_qubits: kept })
}

/// Cone circuit of the A|B boundary; the T measured qubits carry the
/// transformed subsystem state U_B† ρ_B U_B.
pub fn build_boundary_cone(params: &MeraParams, t: usize) -> Result<Circuit> {
    Ok(build_boundary_cone_mapped(params, t)?.circuit)
}

/// Keep only gates in the backward light cone of `targets`. Returns the kept
/// gates and the sorted list of qubits they touch (targets included).
pub fn prune_to_light_cone(ops: &[GateOp], n_qubits: usize, targets: &[usize]) -> (Vec<GateOp>, Vec<usize>) {
    let mut active = vec![false; n_qubits];
    for &q in targets {
        active[q] = true;
    }
    let mut kept = Vec::new();
    for op in ops.iter().rev() {
        if op.targets.iter().any(|&q| active[q]) {
            for &q in &op.targets {
                active[q] = true;
            }
            kept.push(op.clone());
        }
    }
    kept.reverse();
    let qubits = (0..n_qubits).filter(|&q| active[q]).collect();
    (kept, qubits)
}
