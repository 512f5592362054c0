//! Native trapped-ion gates, symmetry-respecting derived gates, circuits and
//! statevector execution.

use crate::error::{Error, Result};
use crate::linalg::{kron, pauli, CMat, I, ONE, ZERO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    /// exp(-iθ(X cosφ + Y sinφ)/2)
    R,
    /// exp(-iθZ/2), virtual on the hardware
    Rz,
    /// exp(-iθ X⊗X/2), the Mølmer–Sørensen gate
    XX,
    XY,
    YX,
    /// exp(-iθY/2)
    Ry,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::XX | GateKind::XY | GateKind::YX => 2,
            _ => 1,
        }
    }

    pub fn is_native(self) -> bool {
        matches!(self, GateKind::R | GateKind::Rz | GateKind::XX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

impl GateOp {
    pub fn r(q: usize, theta: f64, phi: f64) -> Self {
        Self { kind: GateKind::R, targets: vec![q], theta, phi }
    }
    pub fn rz(q: usize, theta: f64) -> Self {
        Self { kind: GateKind::Rz, targets: vec![q], theta, phi: 0.0 }
    }
    pub fn ry(q: usize, theta: f64) -> Self {
        Self { kind: GateKind::Ry, targets: vec![q], theta, phi: 0.0 }
    }
    pub fn xx(a: usize, b: usize, theta: f64) -> Self {
        Self { kind: GateKind::XX, targets: vec![a, b], theta, phi: 0.0 }
    }
    pub fn xy(a: usize, b: usize, theta: f64) -> Self {
        Self { kind: GateKind::XY, targets: vec![a, b], theta, phi: 0.0 }
    }
    pub fn yx(a: usize, b: usize, theta: f64) -> Self {
        Self { kind: GateKind::YX, targets: vec![a, b], theta, phi: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.len() != self.kind.arity() {
            return Err(Error::InvalidInput(format!(
                "{:?} expects {} targets, got {:?}",
                self.kind,
                self.kind.arity(),
                self.targets
            )));
        }
        if self.targets.len() == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::InvalidInput(format!("repeated target in {:?}", self.targets)));
        }
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(Error::InvalidInput("non-finite angle".into()));
        }
        Ok(())
    }

    /// Angle reduced to (-2π, 2π].
    pub fn canonical(&self) -> Self {
        let mut g = self.clone();
        let t = 4.0 * PI;
        let mut th = self.theta % t;
        if th > 2.0 * PI {
            th -= t;
        } else if th <= -2.0 * PI {
            th += t;
        }
        g.theta = th;
        g
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// exp(-iθ P/2) = cos(θ/2) 𝟙 - i sin(θ/2) P for a Pauli-type P (P² = 𝟙).
fn pauli_rotation(p: &CMat, theta: f64) -> CMat {
    let n = p.nrows();
    CMat::identity(n, n) * c((theta / 2.0).cos()) - p * (I * (theta / 2.0).sin())
}

pub fn gate_matrix(op: &GateOp) -> CMat {
    let th = op.theta;
    match op.kind {
        GateKind::R => {
            let p = pauli('X') * c(op.phi.cos()) + pauli('Y') * c(op.phi.sin());
            pauli_rotation(&p, th)
        }
        GateKind::Rz => pauli_rotation(&pauli('Z'), th),
        GateKind::Ry => pauli_rotation(&pauli('Y'), th),
        GateKind::XX => pauli_rotation(&kron(&pauli('X'), &pauli('X')), th),
        GateKind::XY => pauli_rotation(&kron(&pauli('X'), &pauli('Y')), th),
        GateKind::YX => pauli_rotation(&kron(&pauli('Y'), &pauli('X')), th),
    }
}

/// Replace XY, YX and Ry by native gates. Native gates pass through.
pub fn lower_to_native(op: &GateOp) -> Vec<GateOp> {
    match op.kind {
        GateKind::XY => {
            let (a, b) = (op.targets[0], op.targets[1]);
            vec![GateOp::rz(b, -FRAC_PI_2), GateOp::xx(a, b, op.theta), GateOp::rz(b, FRAC_PI_2)]
        }
        GateKind::YX => {
            let (a, b) = (op.targets[0], op.targets[1]);
            vec![GateOp::rz(a, -FRAC_PI_2), GateOp::xx(a, b, op.theta), GateOp::rz(a, FRAC_PI_2)]
        }
        GateKind::Ry => vec![GateOp::r(op.targets[0], op.theta, FRAC_PI_2)],
        _ => vec![op.clone()],
    }
}

pub fn lower_all(ops: &[GateOp]) -> Vec<GateOp> {
    ops.iter().flat_map(lower_to_native).collect()
}

/// Unitary-equality check with the global phase fixed by the largest-magnitude entry.
pub fn unitaries_equal_up_to_phase(a: &CMat, b: &CMat, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let (mut best, mut idx) = (0.0, 0);
    for (k, z) in a.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            idx = k;
        }
    }
    if b.as_slice()[idx].norm() < 1e-14 {
        return false;
    }
    let phase = a.as_slice()[idx] / b.as_slice()[idx];
    let phase = phase / phase.norm();
    crate::linalg::frobenius(&(a - b * phase)) < tol
}

/// Gate durations used to build the time axis for noise channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTiming {
    pub single_qubit: f64,
    pub two_qubit: f64,
    pub idle_gap: f64,
}

impl Default for GateTiming {
    fn default() -> Self {
        Self { single_qubit: 10e-6, two_qubit: 200e-6, idle_gap: 5e-6 }
    }
}

impl GateTiming {
    pub fn duration(&self, op: &GateOp) -> f64 {
        match op.kind {
            GateKind::Rz => 0.0,
            k if k.arity() == 2 => self.two_qubit,
            _ => self.single_qubit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpTiming {
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ops: Vec<GateOp>,
    pub measured_qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timing: Vec<OpTiming>,
}

impl Circuit {
    pub fn new(n_qubits: usize, ops: Vec<GateOp>, measured_qubits: Vec<usize>) -> Result<Self> {
        let mut c = Self { n_qubits, ops, measured_qubits, timing: Vec::new() };
        c.validate()?;
        c.schedule(&GateTiming::default());
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for op in &self.ops {
            op.validate()?;
            for &q in &op.targets {
                if q >= self.n_qubits {
                    return Err(Error::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits });
                }
            }
        }
        for &q in &self.measured_qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits });
            }
        }
        Ok(())
    }

    /// Sequential schedule: gates run one after another, separated by the idle
    /// gap. Virtual Rz gates take no time and add no gap.
    pub fn schedule(&mut self, timing: &GateTiming) {
        let mut t = 0.0;
        let mut first = true;
        self.timing = self
            .ops
            .iter()
            .map(|op| {
                let d = timing.duration(op);
                if d > 0.0 {
                    if !first {
                        t += timing.idle_gap;
                    }
                    first = false;
                }
                let s = OpTiming { start: t, duration: d };
                t += d;
                s
            })
            .collect();
    }

    pub fn total_duration(&self) -> f64 {
        self.timing.last().map(|t| t.start + t.duration).unwrap_or(0.0)
    }

    /// Circuit with every derived gate lowered to R, Rz and XX.
    pub fn lowered(&self) -> Circuit {
        let mut c = Circuit {
            n_qubits: self.n_qubits,
            ops: lower_all(&self.ops),
            measured_qubits: self.measured_qubits.clone(),
            timing: Vec::new(),
        };
        c.schedule(&GateTiming::default());
        c
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.ops.iter().filter(|o| o.kind == kind).count()
    }

    /// Number of XX gates after lowering.
    pub fn entangling_count(&self) -> usize {
        self.ops.iter().filter(|o| o.kind.arity() == 2).count()
    }

    /// Dense unitary of the whole circuit (small registers only).
    pub fn unitary(&self) -> CMat {
        let d = 1usize << self.n_qubits;
        let mut u = CMat::zeros(d, d);
        for col in 0..d {
            let mut s = StateVector::basis(self.n_qubits, col);
            s.apply_ops(&self.ops).expect("validated circuit");
            for row in 0..d {
                u[(row, col)] = s.amplitudes[row];
            }
        }
        u
    }

    pub fn run(&self) -> StateVector {
        let mut s = StateVector::zero(self.n_qubits);
        s.apply_ops(&self.ops).expect("validated circuit");
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut c: Circuit = serde_json::from_str(s)?;
        c.validate()?;
        if c.timing.len() != c.ops.len() {
            c.schedule(&GateTiming::default());
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<C64>,
}

pub const MAX_QUBITS: usize = 16;

impl StateVector {
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Self { n_qubits, amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let n = amplitudes.len().trailing_zeros() as usize;
        if 1 << n != amplitudes.len() {
            return Err(Error::Dimension("amplitude count is not a power of two".into()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("norm² = {norm}")));
        }
        Ok(Self { n_qubits: n, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(Error::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits })
        } else {
            Ok(())
        }
    }

    pub fn apply_1q(&mut self, q: usize, u: &[[C64; 2]; 2]) {
        let stride = 1usize << (self.n_qubits - 1 - q);
        let n = self.amplitudes.len();
        let mut base = 0;
        while base < n {
            for i in base..base + stride {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i + stride];
                self.amplitudes[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[i + stride] = u[1][0] * a0 + u[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    /// Apply a 4×4 unitary; `a` is the more significant qubit of the gate basis.
    pub fn apply_2q(&mut self, a: usize, b: usize, u: &[[C64; 4]; 4]) {
        let sa = 1usize << (self.n_qubits - 1 - a);
        let sb = 1usize << (self.n_qubits - 1 - b);
        let n = self.amplitudes.len();
        for i in 0..n {
            if i & sa != 0 || i & sb != 0 {
                continue;
            }
            let idx = [i, i | sb, i | sa, i | sa | sb];
            let v =
                [self.amplitudes[idx[0]], self.amplitudes[idx[1]], self.amplitudes[idx[2]], self.amplitudes[idx[3]]];
            for r in 0..4 {
                self.amplitudes[idx[r]] = u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3];
            }
        }
    }

    /// Pauli X on qubit q.
    pub fn flip_x(&mut self, q: usize) {
        let s = 1usize << (self.n_qubits - 1 - q);
        for i in 0..self.amplitudes.len() {
            if i & s == 0 {
                self.amplitudes.swap(i, i | s);
            }
        }
    }

    /// Pauli Z on qubit q.
    pub fn flip_z(&mut self, q: usize) {
        let s = 1usize << (self.n_qubits - 1 - q);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & s != 0 {
                *a = -*a;
            }
        }
    }

    pub fn apply_op(&mut self, op: &GateOp) -> Result<()> {
        for &q in &op.targets {
            self.check(q)?;
        }
        op.validate()?;
        let m = gate_matrix(op);
        self.apply_matrix(&op.targets, &m);
        Ok(())
    }

    pub fn apply_matrix(&mut self, targets: &[usize], m: &CMat) {
        match targets.len() {
            1 => {
                let u = [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
                self.apply_1q(targets[0], &u);
            }
            2 => {
                let mut u = [[ZERO; 4]; 4];
                for (r, row) in u.iter_mut().enumerate() {
                    for (cc, e) in row.iter_mut().enumerate() {
                        *e = m[(r, cc)];
                    }
                }
                self.apply_2q(targets[0], targets[1], &u);
            }
            _ => unreachable!("gates act on one or two qubits"),
        }
    }

    pub fn apply_ops(&mut self, ops: &[GateOp]) -> Result<()> {
        for op in ops {
            self.apply_op(op)?;
        }
        Ok(())
    }

    /// Reduced density matrix of `keep` (in the given order).
    pub fn reduced(&self, keep: &[usize]) -> CMat {
        crate::linalg::reduced_from_pure(&self.amplitudes, self.n_qubits, keep)
    }
}

/// Apply a list of gates to a state, returning the new state.
pub fn apply(state: &StateVector, ops: &[GateOp]) -> Result<StateVector> {
    let mut s = state.clone();
    s.apply_ops(ops)?;
    Ok(s)
}

/// Marginal outcome distribution of `qubits`; outcome bits ordered as listed,
/// first listed qubit most significant.
pub fn measure_distribution(state: &StateVector, qubits: &[usize]) -> Result<Vec<f64>> {
    let mut seen = std::collections::HashSet::new();
    for &q in qubits {
        state.check(q)?;
        if !seen.insert(q) {
            return Err(Error::InvalidInput(format!("repeated qubit {q}")));
        }
    }
    let n = state.n_qubits;
    let k = qubits.len();
    let mut probs = vec![0.0; 1 << k];
    for (i, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let mut o = 0;
        for &q in qubits {
            o = (o << 1) | ((i >> (n - 1 - q)) & 1);
        }
        probs[o] += p;
    }
    Ok(probs)
}

/// Single-qubit Pauli measurement bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn label(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'X' | 'x' => Some(Basis::X),
            'Y' | 'y' => Some(Basis::Y),
            'Z' | 'z' => Some(Basis::Z),
            _ => None,
        }
    }

    /// Native pre-measurement rotation mapping the +1 eigenstate to |0⟩.
    pub fn rotation(self, q: usize) -> Option<GateOp> {
        match self {
            Basis::X => Some(GateOp::r(q, FRAC_PI_2, -FRAC_PI_2)),
            Basis::Y => Some(GateOp::r(q, FRAC_PI_2, 0.0)),
            Basis::Z => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    #[test]
    fn rz_zero_identity() {
        assert!(frobenius(&(gate_matrix(&GateOp::rz(0, 0.0)) - CMat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn xx_pi() {
        let m = gate_matrix(&GateOp::xx(0, 1, PI));
        let e = kron(&pauli('X'), &pauli('X')) * (-I);
        assert!(frobenius(&(m - e)) < 1e-15);
    }

    #[test]
    fn r_pi_zero_is_minus_i_x() {
        let m = gate_matrix(&GateOp::r(0, PI, 0.0));
        assert!(frobenius(&(m - pauli('X') * (-I))) < 1e-15);
    }

    #[test]
    fn basis_rotations_map_eigenstates_to_zero() {
        let s = 0.5f64.sqrt();
        let plus = StateVector::from_amplitudes(vec![c(s), c(s)]).unwrap();
        let yplus = StateVector::from_amplitudes(vec![c(s), I * s]).unwrap();
        let px = apply(&plus, &[Basis::X.rotation(0).unwrap()]).unwrap();
        let py = apply(&yplus, &[Basis::Y.rotation(0).unwrap()]).unwrap();
        assert!((px.amplitudes[0].norm() - 1.0).abs() < 1e-14);
        assert!((py.amplitudes[0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_is_error() {
        let s = StateVector::zero(2);
        assert!(apply(&s, &[GateOp::rz(2, 0.1)]).is_err());
    }

    #[test]
    fn schedule_is_sequential() {
        let c = Circuit::new(2, vec![GateOp::r(0, 0.1, 0.0), GateOp::rz(1, 0.2), GateOp::xx(0, 1, 0.3)], vec![0, 1])
            .unwrap();
        assert_eq!(c.timing[1].duration, 0.0);
        assert!((c.timing[2].start - 15e-6).abs() < 1e-15);
        assert!((c.total_duration() - 215e-6).abs() < 1e-15);
    }
}
