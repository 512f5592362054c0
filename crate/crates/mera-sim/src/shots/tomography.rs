//! Linear inversion and maximum-likelihood state reconstruction from Pauli
//! measurement data.

use super::pauli::{code_on_support, from_pauli, to_pauli, wht};
use super::ShotDataset;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LinearInversion,
    Mle,
}

#[derive(Debug, Clone)]
pub struct ReconstructedState {
    pub rho: CMat,
    pub method: Method,
    /// Σ n log p over all recorded outcomes (−∞ if a recorded outcome has p ≤ 0).
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Log-likelihood after every accepted iterate (MLE with history on).
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop when |ΔL| / |L| falls below this.
    pub tolerance: f64,
    /// Mixing weight for the diluted step (I + εR)ρ(I + εR), halved until
    /// the likelihood stops decreasing.
    pub dilution: f64,
    pub record_history: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, tolerance: 1e-10, dilution: 0.5, record_history: false }
    }
}

/// Pooled ⟨P⟩ for every Pauli code with shots on at least one compatible
/// setting: `(mean, shots)`.
pub fn pauli_expectations(ds: &ShotDataset) -> Result<Vec<Option<(f64, u64)>>> {
    ds.validate()?;
    let k = ds.n_qubits;
    let mut sum = vec![0.0; 1 << (2 * k)];
    let mut shots = vec![0u64; 1 << (2 * k)];
    for g in &ds.groups {
        let mut v: Vec<f64> = g.counts.iter().map(|&c| c as f64).collect();
        wht(&mut v);
        let n = g.total();
        for (mask, &x) in v.iter().enumerate() {
            let code = code_on_support(&g.basis, mask);
            sum[code] += x;
            shots[code] += n;
        }
    }
    Ok(sum.iter().zip(&shots).map(|(&s, &n)| (n > 0).then(|| (s / n as f64, n))).collect())
}

fn check_complete(exp: &[Option<(f64, u64)>]) -> Result<()> {
    let missing = exp.iter().filter(|e| e.is_none()).count();
    if missing > 0 {
        return Err(Error::NotInformationallyComplete(format!("{missing} Pauli operators are never measured")));
    }
    Ok(())
}

/// ρ = 2⁻ⁿ Σ_P ⟨P⟩ P. Not projected; may have negative eigenvalues.
pub fn linear_inversion(ds: &ShotDataset) -> Result<ReconstructedState> {
    let exp = pauli_expectations(ds)?;
    check_complete(&exp)?;
    let coef: Vec<f64> = exp.iter().map(|e| e.expect("complete").0).collect();
    let k = ds.n_qubits;
    let rho = from_pauli(&coef, k, (1usize << k) as f64);
    let data = Data::new(ds);
    let log_likelihood = data.log_likelihood(&data.probabilities(&coef));
    Ok(ReconstructedState { rho, method: Method::LinearInversion, log_likelihood, iterations: 0, history: Vec::new() })
}

/// Counts and supports laid out for fast probability evaluation.
struct Data<'a> {
    ds: &'a ShotDataset,
    k: usize,
    /// Pauli code of each (group, support mask).
    codes: Vec<Vec<usize>>,
    total: f64,
}

impl<'a> Data<'a> {
    fn new(ds: &'a ShotDataset) -> Self {
        let k = ds.n_qubits;
        let codes =
            ds.groups.iter().map(|g| (0..1usize << k).map(|m| code_on_support(&g.basis, m)).collect()).collect();
        Self { ds, k, codes, total: ds.total_shots() as f64 }
    }

    /// p_{b,o} = 2⁻ᵏ Σ_S (−1)^{|o∧S|} r_{(b,S)}.
    fn probabilities(&self, r: &[f64]) -> Vec<Vec<f64>> {
        let scale = 1.0 / (1usize << self.k) as f64;
        self.codes
            .iter()
            .map(|codes| {
                let mut v: Vec<f64> = codes.iter().map(|&c| r[c] * scale).collect();
                wht(&mut v);
                v
            })
            .collect()
    }

    fn log_likelihood(&self, p: &[Vec<f64>]) -> f64 {
        let mut ll = 0.0;
        for (g, pg) in self.ds.groups.iter().zip(p) {
            for (&n, &q) in g.counts.iter().zip(pg) {
                if n > 0 {
                    ll += if q > 0.0 { n as f64 * q.ln() } else { f64::NEG_INFINITY };
                }
            }
        }
        ll
    }

    /// Pauli coefficients of R = Σ_{b,o} n_{b,o} / (N p_{b,o}) E_{b,o}.
    fn r_operator(&self, p: &[Vec<f64>]) -> Vec<f64> {
        let scale = 1.0 / (1usize << self.k) as f64;
        let mut out = vec![0.0; 1 << (2 * self.k)];
        for ((g, pg), codes) in self.ds.groups.iter().zip(p).zip(&self.codes) {
            let mut w: Vec<f64> =
                g.counts.iter().zip(pg).map(|(&n, &q)| if n > 0 { n as f64 / (self.total * q) } else { 0.0 }).collect();
            wht(&mut w);
            for (&c, &x) in codes.iter().zip(&w) {
                out[c] += x * scale;
            }
        }
        out
    }
}

fn normalized_sandwich(a: &CMat, rho: &CMat) -> CMat {
    let m = a * rho * a.adjoint();
    let m = (&m + m.adjoint()) * num_complex::Complex64::new(0.5, 0.0);
    let t = m.trace().re;
    m / num_complex::Complex64::new(t, 0.0)
}

pub fn mle_reconstruct(ds: &ShotDataset) -> Result<ReconstructedState> {
    mle_reconstruct_with(ds, &MleOptions::default())
}

/// Iterative RρR maximum likelihood from the maximally mixed state. A step
/// that lowers the likelihood is replaced by the diluted map with weight
/// ε = dilution, 2⁻¹ dilution, … until it does not.
pub fn mle_reconstruct_with(ds: &ShotDataset, opt: &MleOptions) -> Result<ReconstructedState> {
    let exp = pauli_expectations(ds)?;
    check_complete(&exp)?;
    let data = Data::new(ds);
    let k = ds.n_qubits;
    let d = 1usize << k;
    let mut rho = CMat::identity(d, d) / num_complex::Complex64::new(d as f64, 0.0);
    let mut p = data.probabilities(&to_pauli(&rho, k));
    let mut ll = data.log_likelihood(&p);
    let mut history = if opt.record_history { vec![ll] } else { Vec::new() };
    let mut iterations = 0;
    while iterations < opt.max_iterations {
        let rop = from_pauli(&data.r_operator(&p), k, 1.0);
        let mut accepted = None;
        let mut eps = f64::INFINITY;
        for _ in 0..40 {
            let a = if eps.is_infinite() {
                rop.clone()
            } else {
                (CMat::identity(d, d) + &rop * num_complex::Complex64::new(eps, 0.0))
                    / num_complex::Complex64::new(1.0 + eps, 0.0)
            };
            let cand = normalized_sandwich(&a, &rho);
            let pc = data.probabilities(&to_pauli(&cand, k));
            let lc = data.log_likelihood(&pc);
            if lc >= ll {
                accepted = Some((cand, pc, lc));
                break;
            }
            eps = if eps.is_infinite() { opt.dilution } else { eps / 2.0 };
        }
        let Some((cand, pc, lc)) = accepted else { break };
        iterations += 1;
        let change = (lc - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        rho = cand;
        p = pc;
        ll = lc;
        if opt.record_history {
            history.push(ll);
        }
        if change < opt.tolerance || ll == 0.0 {
            break;
        }
    }
    Ok(ReconstructedState { rho, method: Method::Mle, log_likelihood: ll, iterations, history })
}
