//! Noise-averaged outcome distributions. Every shot of a noisy experiment is
//! an independent realization of the same noise process, so the counts of one
//! setting are exactly multinomial in the realization-averaged distribution.
//! Averaging once and then drawing many datasets is far cheaper than
//! simulating every shot of every trial.

use super::{multinomial, ShotDataset, ShotGroup};
use crate::error::{Error, Result};
use crate::gates::{measure_distribution, Basis, Circuit, StateVector};
use crate::noise::{noisy_schedule, readout_rotation, run_noisy_realization, NoiseModel};
use crate::par::*;
use crate::rng::{stream, Rng};

const CHUNK: usize = 64;

/// Depth-first over qubits so settings sharing a prefix share rotations.
fn accumulate(
    state: &StateVector,
    circuit: &Circuit,
    model: &NoiseModel,
    n_avg: f64,
    prefix: &mut Vec<Basis>,
    index: &std::collections::HashMap<Vec<Basis>, usize>,
    out: &mut [Vec<f64>],
) -> Result<()> {
    let k = circuit.measured_qubits.len();
    if prefix.len() == k {
        if let Some(&i) = index.get(prefix.as_slice()) {
            let p = measure_distribution(state, &circuit.measured_qubits)?;
            for (a, b) in out[i].iter_mut().zip(p) {
                *a += b;
            }
        }
        return Ok(());
    }
    let q = circuit.measured_qubits[prefix.len()];
    for b in Basis::ALL {
        prefix.push(b);
        if index.keys().any(|s| s.starts_with(prefix)) {
            match readout_rotation(b, q, model, n_avg)? {
                Some(g) => {
                    let mut s = state.clone();
                    s.apply_op(&g)?;
                    accumulate(&s, circuit, model, n_avg, prefix, index, out)?;
                }
                None => accumulate(state, circuit, model, n_avg, prefix, index, out)?,
            }
        }
        prefix.pop();
    }
    Ok(())
}

/// Readout flips 0→1 with p_d − p and 1→0 with p_b − p on every bit.
fn apply_readout_flips(p: &mut [f64], k: usize, model: &NoiseModel) {
    if !model.sources.spam {
        return;
    }
    let (f01, f10) = (model.cal.p_d - model.cal.p, model.cal.p_b - model.cal.p);
    for pos in 0..k {
        let bit = 1 << (k - 1 - pos);
        for o in 0..p.len() {
            if o & bit == 0 {
                let (a, b) = (p[o], p[o | bit]);
                p[o] = a * (1.0 - f01) + b * f10;
                p[o | bit] = a * f01 + b * (1.0 - f10);
            }
        }
    }
}

/// Outcome distribution of every setting averaged over `realizations`
/// independent noise realizations (one when no source is active), including
/// noisy readout rotations and measurement flips.
pub fn noisy_outcome_distributions(
    circuit: &Circuit,
    model: &NoiseModel,
    settings: &[Vec<Basis>],
    realizations: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let k = circuit.measured_qubits.len();
    if settings.iter().any(|s| s.len() != k) || k == 0 {
        return Err(Error::InvalidInput("settings must cover the measured qubits".into()));
    }
    if realizations == 0 {
        return Err(Error::InvalidInput("need at least one realization".into()));
    }
    let scheduled = noisy_schedule(circuit, model);
    let index: std::collections::HashMap<Vec<Basis>, usize> =
        settings.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let reals = if model.sources.any() { realizations } else { 1 };
    let n_chunks = reals.div_ceil(CHUNK);
    let partial = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<Vec<f64>>> {
            let mut acc = vec![vec![0.0; 1 << k]; settings.len()];
            for r in c * CHUNK..((c + 1) * CHUNK).min(reals) {
                let mut rng: Rng = stream(seed, r as u64);
                let real = run_noisy_realization(&scheduled, model, &mut rng)?;
                accumulate(&real.state, &scheduled, model, real.readout_n_avg, &mut Vec::new(), &index, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![vec![0.0; 1 << k]; settings.len()];
    for acc in partial {
        for (o, a) in out.iter_mut().zip(acc) {
            for (x, y) in o.iter_mut().zip(a) {
                *x += y;
            }
        }
    }
    for p in &mut out {
        for x in p.iter_mut() {
            *x /= reals as f64;
        }
        apply_readout_flips(p, k, model);
    }
    Ok(out)
}

/// One synthetic dataset with `shots` per setting drawn from `dists`.
pub fn sample_from_distributions(
    circuit_id: &str,
    settings: &[Vec<Basis>],
    dists: &[Vec<f64>],
    shots: u64,
    seed: u64,
    rng: &mut Rng,
) -> ShotDataset {
    let groups = settings
        .iter()
        .zip(dists)
        .map(|(b, p)| ShotGroup { basis: b.clone(), counts: multinomial(shots, p, rng) })
        .collect();
    ShotDataset { circuit_id: circuit_id.to_string(), n_qubits: settings.first().map_or(0, Vec::len), seed, groups }
}
