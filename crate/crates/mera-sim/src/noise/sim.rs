//! Monte-Carlo execution of one noisy circuit realization.

use super::dephasing_prob;
use super::gate::{perturb_gate, NoiseModel};
use super::phonon::{window_averages, Walker};
use crate::error::{Error, Result};
use crate::gates::{Basis, Circuit, GateKind, GateOp, StateVector};
use crate::rng::Rng;
use rand::Rng as _;

/// Lower to native gates and schedule with the calibration's gate durations.
pub fn noisy_schedule(circuit: &Circuit, model: &NoiseModel) -> Circuit {
    let mut c = circuit.lowered();
    c.schedule(&model.cal.timing);
    c
}

/// Readout window after the last gate: basis rotations on every measured
/// qubit run simultaneously in one single-qubit slot.
pub fn readout_window(circuit: &Circuit, model: &NoiseModel) -> (f64, f64) {
    let s = circuit.total_duration() + model.cal.timing.idle_gap;
    (s, s + model.cal.timing.single_qubit)
}

#[derive(Debug, Clone)]
pub struct NoisyRealization {
    /// State after the circuit with all pending dephasing flips applied.
    pub state: StateVector,
    /// Time-averaged phonon number during the readout rotations.
    pub readout_n_avg: f64,
}

/// One noisy realization of a lowered, scheduled circuit (see [`noisy_schedule`]).
pub fn run_noisy_realization(circuit: &Circuit, model: &NoiseModel, rng: &mut Rng) -> Result<NoisyRealization> {
    if circuit.timing.len() != circuit.ops.len() {
        return Err(Error::InvalidInput("circuit is not scheduled".into()));
    }
    if circuit.n_qubits > model.ions.len() {
        return Err(Error::InvalidInput(format!(
            "{} qubits but only {} ions mapped",
            circuit.n_qubits,
            model.ions.len()
        )));
    }
    let n = circuit.n_qubits;
    let src = model.sources;
    let mut state = StateVector::zero(n);
    if src.spam {
        for q in 0..n {
            if rng.random::<f64>() < model.cal.p {
                state.flip_x(q);
            }
        }
    }
    let readout = readout_window(circuit, model);
    let mut n_avg = vec![0.0; circuit.ops.len()];
    let mut readout_n_avg = 0.0;
    if src.axial {
        let mut windows: Vec<(f64, f64)> = circuit.timing.iter().map(|t| (t.start, t.start + t.duration)).collect();
        windows.push(readout);
        let mut walker = Walker::new(&model.cal, rng);
        let mut avg = window_averages(&mut walker, &windows, rng)?;
        readout_n_avg = avg.pop().expect("readout window");
        n_avg = avg;
    }
    let shared_s = model.shared_stark(rng);
    // composed Z-flip probability accumulated since each qubit's last gate
    let mut pending = vec![0.0f64; n];
    let compose = |p: f64, q: f64| p + q - 2.0 * p * q;
    let mut clock = 0.0;
    for (k, (op, timing)) in circuit.ops.iter().zip(&circuit.timing).enumerate() {
        if timing.duration > 0.0 {
            if src.idle {
                let gap = dephasing_prob(&model.cal, timing.start - clock);
                let busy = dephasing_prob(&model.cal, timing.duration);
                for (q, p) in pending.iter_mut().enumerate() {
                    *p = compose(*p, gap);
                    if !op.targets.contains(&q) {
                        *p = compose(*p, busy);
                    }
                }
                for &q in &op.targets {
                    if rng.random::<f64>() < pending[q] {
                        state.flip_z(q);
                    }
                    pending[q] = 0.0;
                }
            }
            clock = timing.start + timing.duration;
        }
        for nop in perturb_gate(op, n_avg[k], model, shared_s, rng)? {
            nop.apply(&mut state)?;
        }
    }
    if src.idle {
        let gap = dephasing_prob(&model.cal, readout.0 - clock);
        for (q, p) in pending.iter().enumerate() {
            if rng.random::<f64>() < compose(*p, gap) {
                state.flip_z(q);
            }
        }
    }
    Ok(NoisyRealization { state, readout_n_avg })
}

/// Noisy pre-measurement rotation for one basis on qubit q.
pub fn readout_rotation(basis: Basis, q: usize, model: &NoiseModel, readout_n_avg: f64) -> Result<Option<GateOp>> {
    match basis.rotation(q) {
        Some(mut g) => {
            debug_assert_eq!(g.kind, GateKind::R);
            g.theta *= 1.0 - model.angle_error(q, readout_n_avg)?;
            Ok(Some(g))
        }
        None => Ok(None),
    }
}

/// Readout bit flip: 0 → 1 with p_d − p and 1 → 0 with p_b − p.
pub fn readout_flip(bit: bool, model: &NoiseModel, rng: &mut Rng) -> bool {
    if !model.sources.spam {
        return bit;
    }
    let p = if bit { model.cal.p_b - model.cal.p } else { model.cal.p_d - model.cal.p };
    if rng.random::<f64>() < p {
        !bit
    } else {
        bit
    }
}

/// Sample a full basis index from |ψ|².
pub fn sample_index(state: &StateVector, rng: &mut Rng) -> usize {
    let u: f64 = rng.random::<f64>() * state.norm().powi(2);
    let mut acc = 0.0;
    for (i, a) in state.amplitudes.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            return i;
        }
    }
    state.amplitudes.len() - 1
}

/// One noisy shot in the given per-qubit bases; returns the outcome with the
/// first measured qubit as the most significant bit.
pub fn noisy_shot(circuit: &Circuit, bases: &[Basis], model: &NoiseModel, rng: &mut Rng) -> Result<usize> {
    let mut r = run_noisy_realization(circuit, model, rng)?;
    for (&q, &b) in circuit.measured_qubits.iter().zip(bases) {
        if let Some(g) = readout_rotation(b, q, model, r.readout_n_avg)? {
            r.state.apply_op(&g)?;
        }
    }
    let idx = sample_index(&r.state, rng);
    let k = circuit.measured_qubits.len();
    let mut out = 0usize;
    for (pos, &q) in circuit.measured_qubits.iter().enumerate() {
        let bit = idx >> (circuit.n_qubits - 1 - q) & 1 == 1;
        if readout_flip(bit, model, rng) {
            out |= 1 << (k - 1 - pos);
        }
    }
    Ok(out)
}
