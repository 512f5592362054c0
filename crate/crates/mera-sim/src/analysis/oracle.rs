//! Exact reference values for the transverse-field Ising chain
//! H = −Σ XᵢXᵢ₊₁ − g Σ Zᵢ.

use crate::numerics::integrate;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    EnergyDensity,
    MagnetizationX,
    Zz,
    Xx,
    Yy,
    Z,
}

const TOL: f64 = 1e-12;

fn dispersion(g: f64, k: f64) -> f64 {
    (1.0 + g * g - 2.0 * g * k.cos()).max(0.0).sqrt()
}

/// (1/π)∫₀^π [g cos(kr) − cos(k(r+1))]/ε(k) dk
fn fermion_g(g: f64, r: i32) -> f64 {
    let f = |k: f64| {
        let e = dispersion(g, k);
        if e < 1e-300 {
            // g = 1, k = 0: the numerator vanishes linearly as well
            return 0.0;
        }
        (g * (k * r as f64).cos() - (k * (r + 1) as f64).cos()) / e
    };
    integrate(f, 0.0, PI, TOL) / PI
}

pub fn energy_density(g: f64) -> f64 {
    -integrate(|k| dispersion(g, k), 0.0, PI, TOL) / PI
}

pub fn z(g: f64) -> f64 {
    fermion_g(g, 0)
}

pub fn xx(g: f64) -> f64 {
    -fermion_g(g, -1)
}

pub fn yy(g: f64) -> f64 {
    -fermion_g(g, 1)
}

/// Nearest-neighbour ⟨ZZ⟩ by Wick's theorem.
pub fn zz(g: f64) -> f64 {
    z(g).powi(2) - xx(g) * yy(g)
}

/// Spontaneous magnetization (1 − g²)^{1/8} in the ordered phase.
pub fn magnetization_x(g: f64) -> f64 {
    if g < 1.0 {
        (1.0 - g * g).powf(0.125)
    } else {
        0.0
    }
}

pub fn exact_tfim_oracle(g: f64, q: Quantity) -> f64 {
    assert!(g >= 0.0, "g must be non-negative");
    match q {
        Quantity::EnergyDensity => energy_density(g),
        Quantity::MagnetizationX => magnetization_x(g),
        Quantity::Zz => zz(g),
        Quantity::Xx => xx(g),
        Quantity::Yy => yy(g),
        Quantity::Z => z(g),
    }
}

/// Periodic-chain Hamiltonian action on a dense vector (qubit 0 = MSB).
fn h_apply(n: usize, g: f64, v: &[f64], out: &mut [f64]) {
    let dim = 1usize << n;
    for (i, o) in out.iter_mut().enumerate().take(dim) {
        let mut diag = 0.0;
        for q in 0..n {
            diag += if (i >> q) & 1 == 0 { -g } else { g };
        }
        *o = diag * v[i];
    }
    for q in 0..n {
        let m = (1usize << q) | (1usize << ((q + 1) % n));
        for i in 0..dim {
            out[i ^ m] -= v[i];
        }
    }
}

/// Ground state of the periodic chain by Lanczos with full reorthogonalization.
#[derive(Debug, Clone)]
pub struct EdResult {
    pub energy: f64,
    pub state: Vec<f64>,
}

pub fn ed_ground_state(n: usize, g: f64) -> EdResult {
    assert!((2..=16).contains(&n));
    let dim = 1usize << n;
    let m = 160.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // deterministic start vector with overlap on every sector
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + 0.1 * ((i * 7919 % 97) as f64 / 97.0)).collect();
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    let mut w = vec![0.0; dim];
    let mut last = f64::INFINITY;
    for j in 0..m {
        basis.push(v.clone());
        h_apply(n, g, &v, &mut w);
        let a: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        alpha.push(a);
        for b in &basis {
            let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let bnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if j % 10 == 9 || bnorm < 1e-12 || j == m - 1 {
            let e0 = tridiag_lowest(&alpha, &beta).0;
            if (e0 - last).abs() < 1e-13 || bnorm < 1e-12 || j == m - 1 {
                break;
            }
            last = e0;
        }
        beta.push(bnorm);
        v = w.iter().map(|x| x / bnorm).collect();
    }
    let (energy, coeffs) = tridiag_lowest(&alpha, &beta[..alpha.len() - 1]);
    let mut state = vec![0.0; dim];
    for (c, b) in coeffs.iter().zip(&basis) {
        state.iter_mut().zip(b).for_each(|(s, x)| *s += c * x);
    }
    let nrm = state.iter().map(|x| x * x).sum::<f64>().sqrt();
    state.iter_mut().for_each(|x| *x /= nrm);
    EdResult { energy: energy / n as f64, state }
}

fn tridiag_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k && i < beta.len() {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let se = t.symmetric_eigen();
    let (idx, &e) = se.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    (e, se.eigenvectors.column(idx).iter().copied().collect())
}

/// ⟨P_0 Q_1⟩-type nearest-neighbour correlators and ⟨Z⟩ from an ED state.
pub fn ed_observables(n: usize, state: &[f64]) -> (f64, f64, f64, f64) {
    let dim = 1usize << n;
    let b0 = 1usize << (n - 1);
    let b1 = 1usize << (n - 2);
    let (mut z, mut xx, mut yy, mut zz) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..dim {
        let p = state[i] * state[i];
        let s0 = if i & b0 == 0 { 1.0 } else { -1.0 };
        let s1 = if i & b1 == 0 { 1.0 } else { -1.0 };
        z += s0 * p;
        zz += s0 * s1 * p;
        let j = i ^ b0 ^ b1;
        xx += state[i] * state[j];
        // Y⊗Y|ab⟩ = −(−1)^{a+b}|āb̄⟩
        yy -= s0 * s1 * state[i] * state[j];
    }
    (z, xx, yy, zz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((energy_density(0.0) + 1.0).abs() < 1e-12);
        assert!((energy_density(1.0) + 4.0 / PI).abs() < 1e-11);
        assert!((magnetization_x(0.5) - 0.964_678_4).abs() < 1e-6);
        assert_eq!(magnetization_x(1.2), 0.0);
        assert!((xx(0.0) - 1.0).abs() < 1e-12);
        assert!((z(0.0)).abs() < 1e-12);
    }

    #[test]
    fn energy_is_sum_of_terms() {
        for g in [0.3, 1.0, 1.7] {
            let e = -xx(g) - g * z(g);
            assert!((e - energy_density(g)).abs() < 1e-10);
        }
    }
}
