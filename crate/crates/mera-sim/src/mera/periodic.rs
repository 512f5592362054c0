//! Periodic 6·2^T-site realization of a T-layer MERA.
//!
//! Qubit `m` of the register is internal site m; the physical chain label is
//! `p = m + 1 (mod L)`, so that physical sites 0 and 1 are the cone pair.

use crate::error::{Error, Result};
use crate::gates::{GateOp, StateVector, MAX_QUBITS};
use crate::linalg::{eigvalsh, kron, pauli, CMat};
use crate::mera::cone::prune_to_light_cone;
use crate::mera::params::MeraParams;

pub fn n_sites(t: usize) -> usize {
    6 << t
}

pub fn internal_site(physical: i64, t: usize) -> usize {
    (physical - 1).rem_euclid(n_sites(t) as i64) as usize
}

/// Full preparation circuit of the periodic MERA.
pub fn periodic_ops(params: &MeraParams, t: usize) -> Result<Vec<GateOp>> {
    params.check_depth(t)?;
    let mut ops = Vec::new();
    let top_sites = 6usize;
    if let Some(top) = &params.top {
        for k in 0..top_sites / 2 {
            let l = (2 * k + top_sites - 1) % top_sites;
            let r = 2 * k;
            ops.extend(top.gates(l << t, r << t));
        }
    }
    for tau in (1..=t).rev() {
        let cell = params.cell(tau);
        let parents = top_sites << (t - tau);
        let children = 2 * parents;
        let wire = |k: usize| k << (tau - 1);
        let merge = params.top.is_none() && tau == t;
        for k in 0..parents {
            ops.extend(cell.iso_gates(wire(2 * k), wire(2 * k + 1), merge));
        }
        for k in 0..parents {
            ops.extend(cell.dis_gates(wire(2 * k + 1), wire((2 * k + 2) % children)));
        }
    }
    Ok(ops)
}

/// State of the sites in the light cone of `targets`; returns the simulated
/// state and the register positions of the targets within it.
fn cone_state(params: &MeraParams, t: usize, targets: &[usize]) -> Result<(StateVector, Vec<usize>)> {
    let n = n_sites(t);
    let ops = periodic_ops(params, t)?;
    let (ops, kept) = prune_to_light_cone(&ops, n, targets);
    if kept.len() > MAX_QUBITS {
        return Err(Error::CostGuard(format!("light cone of {targets:?} spans {} qubits", kept.len())));
    }
    let remap = |q: usize| kept.iter().position(|&k| k == q).expect("kept qubit");
    let mut s = StateVector::zero(kept.len());
    for mut g in ops {
        g.targets = g.targets.iter().map(|&q| remap(q)).collect();
        s.apply_op(&g)?;
    }
    Ok((s, targets.iter().map(|&q| remap(q)).collect()))
}

/// Reduced density matrix of physical sites, in the listed order.
pub fn periodic_reduced(params: &MeraParams, t: usize, physical: &[i64]) -> Result<CMat> {
    let sites: Vec<usize> = physical.iter().map(|&p| internal_site(p, t)).collect();
    let (s, pos) = cone_state(params, t, &sites)?;
    Ok(s.reduced(&pos))
}

/// ⟨A_i B_{i+δ}⟩ − ⟨A_i⟩⟨B_{i+δ}⟩ on the periodic realization, physical labels.
pub fn connected_correlator(
    params: &MeraParams,
    t: usize,
    op_a: char,
    op_b: char,
    site: i64,
    distance: usize,
) -> Result<f64> {
    let (pa, pb) = (pauli(op_a), pauli(op_b));
    let i = internal_site(site, t);
    let j = internal_site(site + distance as i64, t);
    if i == j {
        let r = periodic_reduced(params, t, &[site])?;
        let ab = (&r * &pa * &pb).trace().re;
        return Ok(ab - (&r * &pa).trace().re * (&r * &pb).trace().re);
    }
    let r = periodic_reduced(params, t, &[site, site + distance as i64])?;
    let joint = (&r * kron(&pa, &pb)).trace().re;
    let ra = crate::linalg::partial_trace(&r, &[2, 2], &[0])?;
    let rb = crate::linalg::partial_trace(&r, &[2, 2], &[1])?;
    Ok(joint - (&ra * &pa).trace().re * (&rb * &pb).trace().re)
}

/// Correlation range of a top-less T-layer MERA: δℓ ≥ 3·2^T − 3 + k.
pub fn causal_range_bound(t: usize, k: usize) -> usize {
    3 * (1 << t) - 3 + k
}

/// Spectrum of ρ_B for the half-chain B = physical [2, 3·2^T + 1] of the
/// periodic state, by direct statevector partial trace.
pub fn periodic_half_chain_spectrum(params: &MeraParams, t: usize) -> Result<Vec<f64>> {
    let n = n_sites(t);
    if n > MAX_QUBITS {
        return Err(Error::CostGuard(format!("{n}-site periodic state")));
    }
    let mut s = StateVector::zero(n);
    s.apply_ops(&periodic_ops(params, t)?)?;
    let b: Vec<usize> = (2..2 + n as i64 / 2).map(|p| internal_site(p, t)).collect();
    let mut v = eigvalsh(&s.reduced(&b));
    v.retain(|&x| x > 1e-13);
    Ok(v)
}

/// Energy per site of the periodic state, averaged over all bonds and sites.
pub fn periodic_energy(params: &MeraParams, t: usize, g: f64) -> Result<f64> {
    let n = n_sites(t) as i64;
    let xx = kron(&pauli('X'), &pauli('X'));
    let z = pauli('Z');
    let mut e = 0.0;
    for p in 0..n {
        let r = periodic_reduced(params, t, &[p, p + 1])?;
        e -= (&r * &xx).trace().re;
        let r1 = crate::linalg::partial_trace(&r, &[2, 2], &[0])?;
        e -= g * (&r1 * &z).trace().re;
    }
    Ok(e / n as f64)
}

/// {λ_i λ_j} of an edge state's spectrum, sorted descending.
pub fn half_chain_spectrum(edge_rho: &CMat) -> Vec<f64> {
    let l: Vec<f64> = eigvalsh(edge_rho).into_iter().map(|x| x.max(0.0)).collect();
    spectrum_product(&l)
}

pub fn spectrum_product(l: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = l.iter().flat_map(|a| l.iter().map(move |b| a * b)).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_product_example() {
        let s = spectrum_product(&[0.9, 0.1]);
        let e = [0.81, 0.09, 0.09, 0.01];
        for (a, b) in s.iter().zip(e) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(spectrum_product(&[1.0]), vec![1.0]);
    }

    #[test]
    fn bound_values() {
        assert_eq!(causal_range_bound(3, 1), 22);
        assert_eq!(causal_range_bound(1, 1), 4);
    }
}
