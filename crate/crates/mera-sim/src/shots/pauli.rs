//! n-qubit Pauli strings indexed in base 4 (I=0, X=1, Y=2, Z=3), qubit 0 the
//! most significant digit, and conversions between density matrices and
//! Pauli coefficients r_P = Tr(ρP).

use crate::gates::Basis;
use crate::linalg::{CMat, ZERO};
use num_complex::Complex64 as C64;

pub fn digit(b: Basis) -> usize {
    match b {
        Basis::X => 1,
        Basis::Y => 2,
        Basis::Z => 3,
    }
}

/// Pauli code for the string equal to `bases` on the qubits of `mask`
/// (bit k−1−q for qubit q) and identity elsewhere.
pub fn code_on_support(bases: &[Basis], mask: usize) -> usize {
    let k = bases.len();
    bases.iter().enumerate().fold(0, |c, (q, &b)| {
        let d = if mask >> (k - 1 - q) & 1 == 1 { digit(b) } else { 0 };
        c * 4 + d
    })
}

/// Bit masks and Y count of a Pauli code: P|c⟩ ∝ |c ⊕ x⟩.
#[derive(Debug, Clone, Copy)]
pub struct PauliMasks {
    pub x: usize,
    pub z: usize,
    pub n_y: u32,
}

pub fn masks(code: usize, k: usize) -> PauliMasks {
    let (mut x, mut z, mut n_y) = (0, 0, 0);
    for q in 0..k {
        let d = code >> (2 * (k - 1 - q)) & 3;
        let bit = 1 << (k - 1 - q);
        match d {
            1 => x |= bit,
            2 => {
                x |= bit;
                z |= bit;
                n_y += 1;
            }
            3 => z |= bit,
            _ => {}
        }
    }
    PauliMasks { x, z, n_y }
}

fn neg_i_pow(n: u32) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// P[row, row ⊕ x] = (−i)^{n_Y} (−1)^{|row ∧ z|}.
#[inline]
fn entry(m: &PauliMasks, phase: C64, row: usize) -> (usize, C64) {
    let sign = if (row & m.z).count_ones() % 2 == 1 { -phase } else { phase };
    (row ^ m.x, sign)
}

/// All 4^k coefficients Tr(ρP); real for Hermitian ρ.
pub fn to_pauli(rho: &CMat, k: usize) -> Vec<f64> {
    let d = 1 << k;
    (0..1usize << (2 * k))
        .map(|code| {
            let m = masks(code, k);
            let ph = neg_i_pow(m.n_y);
            // Tr(ρP) = Σ_r P[r, c] ρ[c, r]
            let mut s = ZERO;
            for r in 0..d {
                let (c, v) = entry(&m, ph, r);
                s += v * rho[(c, r)];
            }
            s.re
        })
        .collect()
}

/// Σ_P coef_P · P / scale.
pub fn from_pauli(coef: &[f64], k: usize, scale: f64) -> CMat {
    let d = 1 << k;
    let mut out = CMat::zeros(d, d);
    for (code, &a) in coef.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let m = masks(code, k);
        let ph = neg_i_pow(m.n_y) * (a / scale);
        for r in 0..d {
            let (c, v) = entry(&m, ph, r);
            out[(r, c)] += v;
        }
    }
    out
}

/// In-place Walsh–Hadamard transform, v_o ← Σ_S (−1)^{|o∧S|} v_S.
pub fn wht(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, pauli_string};

    fn label(code: usize, k: usize) -> String {
        (0..k).map(|q| ['I', 'X', 'Y', 'Z'][code >> (2 * (k - 1 - q)) & 3]).collect()
    }

    #[test]
    fn matrices_match_kronecker_products() {
        let k = 3;
        for code in 0..64 {
            let mut e = vec![0.0; 64];
            e[code] = 1.0;
            let m = from_pauli(&e, k, 1.0);
            assert!(frobenius(&(m - pauli_string(&label(code, k)))) < 1e-15, "{}", label(code, k));
        }
    }

    #[test]
    fn round_trip() {
        let k = 2;
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.48), ZERO, C64::new(0.64, 0.0)];
        let rho = crate::linalg::projector(&psi);
        let r = to_pauli(&rho, k);
        assert!((r[0] - rho.trace().re).abs() < 1e-15);
        let back = from_pauli(&r, k, 4.0);
        assert!(frobenius(&(back - &rho)) < 1e-14);
    }

    #[test]
    fn support_codes() {
        let b = [Basis::X, Basis::Z, Basis::Y];
        assert_eq!(label(code_on_support(&b, 0b111), 3), "XZY");
        assert_eq!(label(code_on_support(&b, 0b101), 3), "XIY");
        assert_eq!(code_on_support(&b, 0), 0);
    }

    #[test]
    fn wht_matches_definition() {
        let v0 = [0.3, -1.0, 2.0, 0.5, 1.5, 0.0, -0.7, 4.0];
        let mut v = v0;
        wht(&mut v);
        for (o, &got) in v.iter().enumerate() {
            let want: f64 =
                v0.iter().enumerate().map(|(s, &x)| if (o & s).count_ones() % 2 == 0 { x } else { -x }).sum();
            assert!((got - want).abs() < 1e-14);
        }
    }
}
