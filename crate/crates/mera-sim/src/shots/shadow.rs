//! Purity from randomized local Pauli measurements.

use super::pauli::{code_on_support, wht};
use super::ShotDataset;
use crate::error::{Error, Result};

/// Unbiased U-statistic for Tr ρ² over all ordered shot pairs i ≠ j of the
/// local-Clifford snapshots ρ̂ᵢ = ⊗(3U†|o⟩⟨o|U − I):
///
/// (Σ_P C_P² − N·10ⁿ) / (2ⁿ N (N − 1)),  C_P = Σᵢ Tr(ρ̂ᵢ P).
pub fn shadow_purity(ds: &ShotDataset) -> Result<f64> {
    ds.validate()?;
    let k = ds.n_qubits;
    if k > 10 {
        return Err(Error::CostGuard(format!("{k} qubits for a shadow estimate")));
    }
    let n = ds.total_shots() as f64;
    if n < 2.0 {
        return Err(Error::InvalidInput("shadow purity needs at least two shots".into()));
    }
    let weights: Vec<f64> = (0..1usize << k).map(|m: usize| 3f64.powi(m.count_ones() as i32)).collect();
    let mut c = vec![0.0; 1 << (2 * k)];
    for g in &ds.groups {
        let mut v: Vec<f64> = g.counts.iter().map(|&x| x as f64).collect();
        wht(&mut v);
        for (mask, &x) in v.iter().enumerate() {
            c[code_on_support(&g.basis, mask)] += weights[mask] * x;
        }
    }
    let sq: f64 = c.iter().map(|x| x * x).sum();
    Ok((sq - n * 10f64.powi(k as i32)) / ((1u64 << k) as f64 * n * (n - 1.0)))
}

/// S⁽²⁾ = −log₂ of the shadow purity.
pub fn shadow_renyi2(ds: &ShotDataset) -> Result<f64> {
    let p = shadow_purity(ds)?;
    if p <= 0.0 {
        return Err(Error::InvalidInput(format!("purity estimate {p} is not positive; too few shots")));
    }
    Ok(-p.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::Basis;
    use crate::shots::ShotGroup;

    /// Direct O(N²) pair sum over individual shots.
    fn brute(ds: &ShotDataset) -> f64 {
        let mut shots = Vec::new();
        for g in &ds.groups {
            for (o, &c) in g.counts.iter().enumerate() {
                for _ in 0..c {
                    shots.push((g.basis.clone(), o));
                }
            }
        }
        let k = ds.n_qubits;
        let mut s = 0.0;
        for (i, a) in shots.iter().enumerate() {
            for (j, b) in shots.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut t = 1.0;
                for q in 0..k {
                    let (oa, ob) = (a.1 >> (k - 1 - q) & 1, b.1 >> (k - 1 - q) & 1);
                    t *= if a.0[q] != b.0[q] {
                        0.5
                    } else if oa == ob {
                        5.0
                    } else {
                        -4.0
                    };
                }
                s += t;
            }
        }
        s / (shots.len() * (shots.len() - 1)) as f64
    }

    #[test]
    fn fast_form_equals_pair_sum() {
        let ds = ShotDataset {
            circuit_id: "t".into(),
            n_qubits: 2,
            seed: 0,
            groups: vec![
                ShotGroup { basis: vec![Basis::X, Basis::Z], counts: vec![3, 1, 0, 2] },
                ShotGroup { basis: vec![Basis::Z, Basis::Z], counts: vec![4, 0, 1, 0] },
                ShotGroup { basis: vec![Basis::Y, Basis::X], counts: vec![1, 1, 2, 1] },
            ],
        };
        assert!((shadow_purity(&ds).unwrap() - brute(&ds)).abs() < 1e-12);
    }

    #[test]
    fn too_few_shots() {
        let ds = ShotDataset {
            circuit_id: "t".into(),
            n_qubits: 1,
            seed: 0,
            groups: vec![ShotGroup { basis: vec![Basis::Z], counts: vec![1, 0] }],
        };
        assert!(shadow_purity(&ds).is_err());
    }
}
