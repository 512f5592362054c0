//! Layer-transition maps of the binary MERA.
//!
//! Children of one layer are labelled relative to the parents: parents
//! (-1, 0) produce children (-2, -1, 0, 1) through two isometries followed by
//! the disentangler on (-1, 0). The two-site channel keeps (-1, 0) and traces
//! -2 (left edge) and 1 (right edge, part of B).

use crate::error::{Error, Result};
use crate::gates::{gate_matrix, GateOp, StateVector};
use crate::linalg::{
    apply_kraus, choi_from_superop, eig, eigvalsh, frobenius, hermitian_part, kraus_to_superop, projector, unvectorize,
    vectorize, CMat, CVec, SpectralDecomposition, ONE, ZERO,
};
use crate::mera::params::{MeraParams, TopAngles, UnitCell};
use num_complex::Complex64 as C64;

/// Isometry from the computational states of `inputs` (other qubits start in
/// |0⟩) to the full register after `ops`. Column index bits follow `inputs`.
pub fn circuit_isometry(n: usize, ops: &[GateOp], inputs: &[usize]) -> CMat {
    let mats: Vec<CMat> = ops.iter().map(gate_matrix).collect();
    let k = inputs.len();
    let mut v = CMat::zeros(1 << n, 1 << k);
    for col in 0..(1usize << k) {
        let mut idx = 0;
        for (b, &q) in inputs.iter().enumerate() {
            if (col >> (k - 1 - b)) & 1 == 1 {
                idx |= 1 << (n - 1 - q);
            }
        }
        let mut s = StateVector::basis(n, idx);
        for (op, m) in ops.iter().zip(&mats) {
            s.apply_matrix(&op.targets, m);
        }
        for (row, a) in s.amplitudes.iter().enumerate() {
            v[(row, col)] = *a;
        }
    }
    v
}

/// Kraus operators obtained by projecting the `traced` qubits of an isometry
/// onto computational states. Output bits follow `kept`.
pub fn kraus_from_isometry(v: &CMat, n: usize, kept: &[usize], traced: &[usize]) -> Vec<CMat> {
    let d_in = v.ncols();
    let dk = 1usize << kept.len();
    let pos = |sub: &[usize], i: usize| -> usize {
        sub.iter()
            .enumerate()
            .filter(|(b, _)| (i >> (sub.len() - 1 - b)) & 1 == 1)
            .map(|(_, &q)| 1usize << (n - 1 - q))
            .sum()
    };
    (0..(1usize << traced.len()))
        .map(|t| {
            let toff = pos(traced, t);
            CMat::from_fn(dk, d_in, |r, c| v[(pos(kept, r) | toff, c)])
        })
        .collect()
}

/// Gates of one layer on the four children qubits (a, b, c, d) = (-2, -1, 0, 1);
/// parents enter on a and c.
pub fn layer_ops(cell: &UnitCell) -> Vec<GateOp> {
    let mut ops = cell.iso_gates(0, 1, false);
    ops.extend(cell.iso_gates(2, 3, false));
    ops.extend(cell.dis_gates(1, 2));
    ops
}

pub fn layer_kraus(cell: &UnitCell) -> Vec<CMat> {
    let v = circuit_isometry(4, &layer_ops(cell), &[0, 2]);
    kraus_from_isometry(&v, 4, &[1, 2], &[0, 3])
}

/// Repeated layer-transition channel on the two cone sites.
#[derive(Debug, Clone)]
pub struct LayerChannel {
    pub superoperator: CMat,
    pub kraus: Vec<CMat>,
    /// Gates on the children register (-2, -1, 0, 1).
    pub circuit: Vec<GateOp>,
    /// Register positions traced after the gates.
    pub traced: Vec<usize>,
}

impl LayerChannel {
    pub fn from_cell(cell: &UnitCell) -> Result<Self> {
        let kraus = layer_kraus(cell);
        let ch = Self { superoperator: kraus_to_superop(&kraus), kraus, circuit: layer_ops(cell), traced: vec![0, 3] };
        ch.check_cptp()?;
        Ok(ch)
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        apply_kraus(&self.kraus, rho)
    }

    pub fn choi(&self) -> CMat {
        choi_from_superop(&self.superoperator, 4, 4)
    }

    pub fn check_cptp(&self) -> Result<()> {
        let min = eigvalsh(&self.choi()).into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::InvalidState(format!("layer channel not CP, Choi eigenvalue {min:.3e}")));
        }
        let id = vectorize(&CMat::identity(4, 4));
        let lhs = self.superoperator.adjoint() * &id;
        if (lhs - id).norm() > 1e-10 {
            return Err(Error::InvalidState("layer channel not trace preserving".into()));
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Result<SpectralDecomposition> {
        eig(&self.superoperator, false)
    }
}

/// Channel of the shared cell (scale-invariant) or of a single-layer MERA.
pub fn layer_channel(params: &MeraParams) -> Result<LayerChannel> {
    params.validate()?;
    if params.layers.len() != 1 {
        return Err(Error::InvalidInput("layer_channel needs a single shared unit cell".into()));
    }
    LayerChannel::from_cell(&params.layers[0])
}

pub fn zero_state(n_qubits: usize) -> CMat {
    let d = 1 << n_qubits;
    let mut m = CMat::zeros(d, d);
    m[(0, 0)] = ONE;
    m
}

/// Two-site top state of the cone, |00⟩ without a top preparation.
pub fn top_state(top: Option<&TopAngles>) -> CMat {
    match top {
        Some(t) => projector(&t.state()),
        None => zero_state(2),
    }
}

/// Reduced state of physical sites (0, 1) of a T-layer MERA via the channel stack.
pub fn local_density(params: &MeraParams, t: usize) -> Result<CMat> {
    params.check_depth(t)?;
    let mut rho = top_state(params.top.as_ref());
    for tau in (1..=t).rev() {
        rho = apply_kraus(&layer_kraus(params.cell(tau)), &rho);
    }
    Ok(rho)
}

/// lim 𝓜^T(|00⟩⟨00|) from the spectral decomposition.
///
/// A degenerate unit eigenvalue still has a well-defined limit from the
/// reference state; it is resolved by projecting |00⟩⟨00| on the unit
/// eigenspace. Other eigenvalues on the unit circle make the limit
/// oscillate and are reported as ambiguous.
pub fn steady_state(channel: &LayerChannel) -> Result<CMat> {
    channel.check_cptp()?;
    let sd = channel.spectrum()?;
    let reference = vectorize(&zero_state(2));
    let mut v = CVec::zeros(16);
    for (i, &m) in sd.eigenvalues.iter().enumerate() {
        if (m - ONE).norm() < 1e-9 {
            let c = sd.left(i).dotc(&reference);
            v += sd.right(i) * c;
        } else if m.norm() > 1.0 - 1e-9 {
            return Err(Error::Ambiguous(format!("peripheral eigenvalue {m} ≠ 1")));
        }
    }
    let rho = unvectorize(&v, 4);
    let tr = rho.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::Ambiguous("no unit eigenvalue".into()));
    }
    Ok(hermitian_part(&(rho / tr)))
}

/// Two-copy, SWAP-contracted layer map on the doubled cone sites.
#[derive(Debug, Clone)]
pub struct DoubledMap {
    pub superoperator: CMat,
}

impl DoubledMap {
    pub fn from_cell(cell: &UnitCell) -> Self {
        let v = circuit_isometry(4, &layer_ops(cell), &[0, 2]);
        // K[a][d] projects the left-traced site a and the B site d
        let k: Vec<Vec<CMat>> = (0..2)
            .map(|a| {
                (0..2)
                    .map(|d| {
                        let off = (a << 3) | d;
                        CMat::from_fn(4, 4, |r, c| v[(off | (r << 1), c)])
                    })
                    .collect()
            })
            .collect();
        let mut s = CMat::zeros(256, 256);
        for a1 in 0..2 {
            for a2 in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        let left = k[a1][y].kronecker(&k[a2][x]);
                        let right = k[a1][x].kronecker(&k[a2][y]).map(|z| z.conj());
                        s += left.kronecker(&right);
                    }
                }
            }
        }
        Self { superoperator: s }
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        unvectorize(&(&self.superoperator * vectorize(x)), 16)
    }

    pub fn spectrum(&self) -> Result<SpectralDecomposition> {
        eig(&self.superoperator, false)
    }

    /// Dominant eigenvalue d₀.
    pub fn dominant(&self) -> Result<C64> {
        Ok(self.spectrum()?.eigenvalues[0])
    }

    /// Tr 𝓓^T(ρ⊗ρ), the purity of B for a T-layer stack on top state ρ.
    pub fn purity(&self, top: &CMat, t: usize) -> f64 {
        let mut v = vectorize(&top.kronecker(top));
        for _ in 0..t {
            v = &self.superoperator * v;
        }
        (0..16).map(|i| v[i * 16 + i]).sum::<C64>().re
    }
}

pub fn doubled_map(params: &MeraParams) -> Result<DoubledMap> {
    params.validate()?;
    if params.layers.len() != 1 {
        return Err(Error::InvalidInput("doubled_map needs a single shared unit cell".into()));
    }
    Ok(DoubledMap::from_cell(&params.layers[0]))
}

/// Purity of B for per-layer cells (finite flavor) via doubled maps.
pub fn doubled_purity(params: &MeraParams, t: usize) -> Result<f64> {
    params.check_depth(t)?;
    let top = top_state(params.top.as_ref());
    let mut x = top.kronecker(&top);
    for tau in (1..=t).rev() {
        x = DoubledMap::from_cell(params.cell(tau)).apply(&x);
    }
    Ok((0..16).map(|i| x[(i, i)]).sum::<C64>().re)
}

/// Descending maps of three-site windows, averaged over the two window
/// placements so that the result is the translation average of all windows.
#[derive(Debug, Clone)]
pub struct WindowMap {
    pub left: Vec<CMat>,
    pub right: Vec<CMat>,
}

impl WindowMap {
    /// Parents (-1, 0, 1) on qubits 0, 2, 4; children (-2..=3) on 0..6.
    pub fn from_cell(cell: &UnitCell) -> Self {
        let mut ops = cell.iso_gates(0, 1, false);
        ops.extend(cell.iso_gates(2, 3, false));
        ops.extend(cell.iso_gates(4, 5, false));
        ops.extend(cell.dis_gates(1, 2));
        ops.extend(cell.dis_gates(3, 4));
        let v = circuit_isometry(6, &ops, &[0, 2, 4]);
        Self {
            left: kraus_from_isometry(&v, 6, &[1, 2, 3], &[0, 4, 5]),
            right: kraus_from_isometry(&v, 6, &[2, 3, 4], &[0, 1, 5]),
        }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        (apply_kraus(&self.left, rho) + apply_kraus(&self.right, rho)) * C64::new(0.5, 0.0)
    }

    pub fn superoperator(&self) -> CMat {
        let mut all = self.left.clone();
        all.extend(self.right.iter().cloned());
        kraus_to_superop(&all) * C64::new(0.5, 0.0)
    }
}

/// Translation-averaged three-site top state.
pub fn top_window(top: Option<&TopAngles>) -> CMat {
    match top {
        None => zero_state(3),
        Some(t) => {
            let phi = projector(&t.state());
            let half = C64::new(0.5, 0.0);
            let l = crate::linalg::partial_trace(&phi, &[2, 2], &[0]).expect("2 qubits");
            let r = crate::linalg::partial_trace(&phi, &[2, 2], &[1]).expect("2 qubits");
            (phi.kronecker(&l) + r.kronecker(&phi)) * half
        }
    }
}

/// Translation-averaged three-site density matrix of a T-layer MERA.
pub fn averaged_window(params: &MeraParams, t: usize) -> Result<CMat> {
    params.check_depth(t)?;
    let mut rho = top_window(params.top.as_ref());
    for tau in (1..=t).rev() {
        rho = WindowMap::from_cell(params.cell(tau)).apply(&rho);
    }
    Ok(rho)
}

/// Fixed point of the averaged window map of a shared cell.
pub fn window_fixed_point(cell: &UnitCell) -> Result<CMat> {
    let wm = WindowMap::from_cell(cell);
    let s = wm.superoperator();
    let n = 64;
    let mut a = s - CMat::identity(n, n);
    let mut b = CVec::zeros(n);
    for j in 0..n {
        a[(0, j)] = ZERO;
    }
    for i in 0..8 {
        a[(0, i * 8 + i)] = ONE;
    }
    b[0] = ONE;
    let lu = a.clone().lu();
    let sol = lu.solve(&b);
    let good = sol.as_ref().map(|x| (&a * x - &b).norm() < 1e-9 && x.iter().all(|z| z.is_finite()));
    let rho = if good == Some(true) {
        unvectorize(&sol.unwrap(), 8)
    } else {
        // singular system: degenerate fixed points, take the limit from |000⟩
        let mut rho = zero_state(3);
        for _ in 0..5000 {
            let next = wm.apply(&rho);
            let done = frobenius(&(&next - &rho)) < 1e-14;
            rho = next;
            if done {
                break;
            }
        }
        rho
    };
    let tr = rho.trace();
    Ok(hermitian_part(&(rho / tr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, partial_trace};

    #[test]
    fn identity_channel_injects_and_traces() {
        let ch = LayerChannel::from_cell(&UnitCell::identity()).unwrap();
        // direct contraction: |0⟩⟨0| on site -1, site 0 keeps the reduced state of parent 0
        let rho = kron(&crate::linalg::pauli('X'), &crate::linalg::pauli('Z')) * C64::new(0.1, 0.0)
            + CMat::identity(4, 4) * C64::new(0.25, 0.0);
        let expect = kron(&zero_state(1), &partial_trace(&rho, &[2, 2], &[1]).unwrap());
        assert!(frobenius(&(ch.apply(&rho) - expect)) < 1e-14);
        let ss = steady_state(&ch).unwrap();
        assert!(frobenius(&(ss - zero_state(2))) < 1e-12);
    }

    #[test]
    fn identity_doubled_map_keeps_purity() {
        let dm = DoubledMap::from_cell(&UnitCell::identity());
        for t in 0..5 {
            assert!((dm.purity(&zero_state(2), t) - 1.0).abs() < 1e-12);
        }
    }
}
