//! Shot sampling, Pauli-basis tomography, classical shadows and bootstrap
//! statistics.

pub mod averaged;
pub mod bootstrap;
pub mod breakdown;
pub mod pauli;
pub mod shadow;
pub mod tomography;

pub use averaged::{noisy_outcome_distributions, sample_from_distributions};
pub use bootstrap::{bootstrap_ci, resample};
pub use breakdown::{noise_breakdown, BreakdownCase, BreakdownConfig, BreakdownStats};
pub use shadow::{shadow_purity, shadow_renyi2};
pub use tomography::{
    linear_inversion, mle_reconstruct, mle_reconstruct_with, pauli_expectations, Method, MleOptions, ReconstructedState,
};

use crate::error::{Error, Result};
use crate::gates::{measure_distribution, Basis, Circuit};
use crate::noise::{noisy_schedule, noisy_shot, NoiseModel};
use crate::par::*;
use crate::rng::{derive_seed, stream, Rng};
use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::io::{BufRead, Write};

/// Largest register for which all 3ⁿ settings are generated.
pub const MAX_TOMOGRAPHY_QUBITS: usize = 5;

/// Counts of one measurement setting; `counts[o]` with the first measured
/// qubit as the most significant bit of o.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotGroup {
    pub basis: Vec<Basis>,
    pub counts: Vec<u64>,
}

impl ShotGroup {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotDataset {
    pub circuit_id: String,
    /// Number of measured qubits (outcome length).
    pub n_qubits: usize,
    pub seed: u64,
    pub groups: Vec<ShotGroup>,
}

pub fn basis_label(bases: &[Basis]) -> String {
    bases.iter().map(|b| b.label()).collect()
}

pub fn parse_basis(s: &str) -> Result<Vec<Basis>> {
    s.chars()
        .map(|c| Basis::from_char(c).ok_or_else(|| Error::InvalidInput(format!("bad basis letter {c:?} in {s:?}"))))
        .collect()
}

fn bitstring(o: usize, k: usize) -> String {
    (0..k).map(|p| if o >> (k - 1 - p) & 1 == 1 { '1' } else { '0' }).collect()
}

impl ShotDataset {
    pub fn total_shots(&self) -> u64 {
        self.groups.iter().map(ShotGroup::total).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.groups {
            if g.basis.len() != self.n_qubits || g.counts.len() != 1 << self.n_qubits {
                return Err(Error::Dimension(format!(
                    "group {} does not match {} measured qubits",
                    basis_label(&g.basis),
                    self.n_qubits
                )));
            }
            if g.total() == 0 {
                return Err(Error::InvalidInput(format!("group {} has no shots", basis_label(&g.basis))));
            }
        }
        Ok(())
    }

    /// JSON lines: a header with circuit id, qubit count and seed, then one
    /// record per basis group.
    pub fn write_jsonl(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", json!({"circuit_id": self.circuit_id, "n_qubits": self.n_qubits, "seed": self.seed}))?;
        for g in &self.groups {
            let counts: Map<String, Value> = g
                .counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(o, &c)| (bitstring(o, self.n_qubits), json!(c)))
                .collect();
            writeln!(w, "{}", json!({"basis": basis_label(&g.basis), "counts": counts}))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let bad = |line: usize, msg: &str| Error::InvalidInput(format!("line {}: {msg}", line + 1));
        let (i, head) = lines.next().ok_or_else(|| bad(0, "empty dataset"))?;
        let head: Value = serde_json::from_str(&head?)?;
        let circuit_id = head["circuit_id"].as_str().ok_or_else(|| bad(i, "missing circuit_id"))?.to_string();
        let n_qubits = head["n_qubits"].as_u64().ok_or_else(|| bad(i, "missing n_qubits"))? as usize;
        let seed = head["seed"].as_u64().ok_or_else(|| bad(i, "missing seed"))?;
        let mut groups = Vec::new();
        for (i, line) in lines {
            let v: Value = serde_json::from_str(&line?)?;
            let basis = parse_basis(v["basis"].as_str().ok_or_else(|| bad(i, "missing basis"))?)?;
            let mut counts = vec![0u64; 1 << n_qubits];
            for (bits, c) in v["counts"].as_object().ok_or_else(|| bad(i, "missing counts"))? {
                if bits.len() != n_qubits {
                    return Err(bad(i, &format!("outcome {bits:?} has the wrong length")));
                }
                let o =
                    usize::from_str_radix(bits, 2).map_err(|_| bad(i, &format!("outcome {bits:?} is not binary")))?;
                counts[o] += c.as_u64().ok_or_else(|| bad(i, "count is not an integer"))?;
            }
            groups.push(ShotGroup { basis, counts });
        }
        let ds = ShotDataset { circuit_id, n_qubits, seed, groups };
        ds.validate()?;
        Ok(ds)
    }

    pub fn from_jsonl(s: &str) -> Result<Self> {
        Self::read_jsonl(s.as_bytes())
    }
}

/// All 3ⁿ per-qubit settings, lexicographic with X < Y < Z and qubit 0 the
/// slowest-varying.
pub fn pauli_settings(n_qubits: usize) -> Result<Vec<Vec<Basis>>> {
    if n_qubits == 0 {
        return Err(Error::InvalidInput("need at least one qubit".into()));
    }
    if n_qubits > MAX_TOMOGRAPHY_QUBITS {
        return Err(Error::CostGuard(format!(
            "{} settings for {n_qubits} qubits (limit {MAX_TOMOGRAPHY_QUBITS} qubits)",
            3usize.pow(n_qubits as u32)
        )));
    }
    Ok((0..3usize.pow(n_qubits as u32))
        .map(|mut k| {
            let mut b = vec![Basis::Z; n_qubits];
            for q in (0..n_qubits).rev() {
                b[q] = Basis::ALL[k % 3];
                k /= 3;
            }
            b
        })
        .collect())
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial(n: u64, probs: &[f64], rng: &mut Rng) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass = 1.0f64;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            out[k] = left;
            break;
        }
        let q = (p.max(0.0) / mass).clamp(0.0, 1.0);
        let c = if q >= 1.0 { left } else { Binomial::new(left, q).expect("valid binomial").sample(rng) };
        out[k] = c;
        left -= c;
        mass -= p.max(0.0);
    }
    out
}

/// Short stable identifier of a circuit.
pub fn circuit_id(circuit: &Circuit) -> String {
    let mut h = Sha256::new();
    h.update(circuit.to_json().unwrap_or_default().as_bytes());
    h.finalize()[..6].iter().map(|b| format!("{b:02x}")).collect()
}

fn check_bases(circuit: &Circuit, bases: &[Vec<Basis>]) -> Result<usize> {
    let k = circuit.measured_qubits.len();
    if k == 0 {
        return Err(Error::InvalidInput("circuit measures no qubits".into()));
    }
    if let Some(b) = bases.iter().find(|b| b.len() != k) {
        return Err(Error::InvalidInput(format!("basis {} does not cover {k} measured qubits", basis_label(b))));
    }
    Ok(k)
}

fn ideal_distribution(state: &crate::gates::StateVector, circuit: &Circuit, basis: &[Basis]) -> Result<Vec<f64>> {
    let mut s = state.clone();
    for (&q, &b) in circuit.measured_qubits.iter().zip(basis) {
        if let Some(g) = b.rotation(q) {
            s.apply_op(&g)?;
        }
    }
    measure_distribution(&s, &circuit.measured_qubits)
}

fn group_counts(
    circuit: &Circuit,
    ideal: Option<&crate::gates::StateVector>,
    noisy: Option<(&Circuit, &NoiseModel)>,
    basis: &[Basis],
    n_shots: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    let k = circuit.measured_qubits.len();
    match (ideal, noisy) {
        (Some(state), _) => {
            let p = ideal_distribution(state, circuit, basis)?;
            Ok(multinomial(n_shots as u64, &p, &mut stream(seed, 0)))
        }
        (None, Some((scheduled, model))) => {
            let outcomes = (0..n_shots)
                .into_par_iter()
                .map(|s| noisy_shot(scheduled, basis, model, &mut stream(seed, s as u64)))
                .collect::<Result<Vec<usize>>>()?;
            let mut counts = vec![0u64; 1 << k];
            for o in outcomes {
                counts[o] += 1;
            }
            Ok(counts)
        }
        _ => unreachable!("either ideal or noisy"),
    }
}

/// Sample `n_shots` per setting. Ideal mode draws from the exact Born
/// distribution; with a noise model every shot is an independent noisy
/// realization. Per-group seeds are derived from `seed` and the basis label.
pub fn run_shots(
    circuit: &Circuit,
    noise: Option<&NoiseModel>,
    bases: &[Vec<Basis>],
    n_shots: usize,
    seed: u64,
) -> Result<ShotDataset> {
    let k = check_bases(circuit, bases)?;
    if n_shots == 0 {
        return Err(Error::InvalidInput("n_shots must be positive".into()));
    }
    let ideal = noise.is_none().then(|| circuit.run());
    let scheduled = noise.map(|m| (noisy_schedule(circuit, m), m));
    let groups = bases
        .iter()
        .map(|b| {
            let s = derive_seed(seed, &basis_label(b));
            let counts =
                group_counts(circuit, ideal.as_ref(), scheduled.as_ref().map(|(c, m)| (c, *m)), b, n_shots, s)?;
            Ok(ShotGroup { basis: b.clone(), counts })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShotDataset { circuit_id: circuit_id(circuit), n_qubits: k, seed, groups })
}

/// Classical-shadow data: each shot measures an independent uniformly random
/// setting. Shots sharing a setting are stored as one group.
pub fn run_shadow_shots(
    circuit: &Circuit,
    noise: Option<&NoiseModel>,
    n_shots: usize,
    seed: u64,
) -> Result<ShotDataset> {
    let k = check_bases(circuit, &[])?;
    if k > 12 {
        return Err(Error::CostGuard(format!("{k} measured qubits for a shadow dataset")));
    }
    let n_settings = 3usize.pow(k as u32);
    let mut rng = stream(seed, u64::MAX);
    let mut sizes = vec![0usize; n_settings];
    for _ in 0..n_shots {
        sizes[rng.random_range(0..n_settings)] += 1;
    }
    let ideal = noise.is_none().then(|| circuit.run());
    let scheduled = noise.map(|m| (noisy_schedule(circuit, m), m));
    let mut groups = Vec::new();
    for (idx, &n) in sizes.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let mut basis = vec![Basis::Z; k];
        let mut r = idx;
        for q in (0..k).rev() {
            basis[q] = Basis::ALL[r % 3];
            r /= 3;
        }
        let s = derive_seed(seed, &basis_label(&basis));
        let counts = group_counts(circuit, ideal.as_ref(), scheduled.as_ref().map(|(c, m)| (c, *m)), &basis, n, s)?;
        groups.push(ShotGroup { basis, counts });
    }
    Ok(ShotDataset { circuit_id: circuit_id(circuit), n_qubits: k, seed, groups })
}
