//! Observables, entanglement measures, fidelities, exact oracles and fits.

pub mod oracle;

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh, frobenius, kron, pauli, project_to_density, psd_sqrt, CMat};
use crate::numerics::fit_line;
use serde::{Deserialize, Serialize};

pub use oracle::{exact_tfim_oracle, Quantity};

fn check_state(rho: &CMat) -> Result<Vec<f64>> {
    if !crate::linalg::is_hermitian(rho, 1e-8) {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let vals = eigvalsh(rho);
    if vals.iter().any(|&v| v < -1e-8) {
        return Err(Error::InvalidState("density matrix has negative eigenvalues".into()));
    }
    Ok(vals.into_iter().map(|v| v.max(0.0)).collect())
}

/// Rényi entropy in bits; α = 1 gives the von Neumann limit.
pub fn renyi_entropy(rho: &CMat, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::InvalidInput("Rényi index must be positive".into()));
    }
    let vals = check_state(rho)?;
    Ok(renyi_from_spectrum(&vals, alpha))
}

pub fn renyi_from_spectrum(vals: &[f64], alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        -vals.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
    } else {
        let s: f64 = vals.iter().filter(|&&v| v > 0.0).map(|&v| v.powf(alpha)).sum();
        s.log2() / (1.0 - alpha)
    }
}

/// S⁽²⁾ of a single site with Bloch vector (x, 0, z).
pub fn single_site_entropy(x: f64, z: f64) -> Result<f64> {
    let r2 = x * x + z * z;
    if r2 > 1.0 + 1e-9 {
        return Err(Error::InvalidState(format!("Bloch vector length² {r2} > 1")));
    }
    Ok(-((1.0 + r2.min(1.0)) / 2.0).log2())
}

/// Two-site state from translation-symmetric real correlators.
pub fn two_site_state(xx: f64, yy: f64, zz: f64, x: f64, z: f64) -> CMat {
    let c = |v: f64| num_complex::Complex64::new(v, 0.0);
    let id = CMat::identity(4, 4);
    let (px, pz) = (pauli('X'), pauli('Z'));
    let i2 = pauli('I');
    let m = id
        + (kron(&px, &i2) + kron(&i2, &px)) * c(x)
        + (kron(&pz, &i2) + kron(&i2, &pz)) * c(z)
        + kron(&px, &px) * c(xx)
        + kron(&pauli('Y'), &pauli('Y')) * c(yy)
        + kron(&pz, &pz) * c(zz);
    m * c(0.25)
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn wootters(rho: &CMat) -> Result<f64> {
    let yy = kron(&pauli('Y'), &pauli('Y'));
    let tilde = &yy * rho.map(|z| z.conj()) * &yy;
    let s = psd_sqrt(rho)?;
    let m = &s * tilde * &s;
    let mut l: Vec<f64> = eigvalsh(&m).into_iter().map(|v| v.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceResult {
    pub concurrence: f64,
    /// Frobenius distance moved by the PSD projection.
    pub projection_distance: f64,
    /// Set when the projection moved the state by more than 0.05.
    pub inconsistent: bool,
}

pub fn concurrence_checked(xx: f64, yy: f64, zz: f64, x: f64, z: f64) -> Result<ConcurrenceResult> {
    let raw = two_site_state(xx, yy, zz, x, z);
    let proj = project_to_density(&raw);
    let d = frobenius(&(&proj - &raw));
    Ok(ConcurrenceResult { concurrence: wootters(&proj)?, projection_distance: d, inconsistent: d > 0.05 })
}

pub fn concurrence(xx: f64, yy: f64, zz: f64, x: f64, z: f64) -> Result<f64> {
    Ok(concurrence_checked(xx, yy, zz, x, z)?.concurrence)
}

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))².
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    check_state(rho)?;
    check_state(sigma)?;
    let s = psd_sqrt(rho)?;
    let inner = crate::linalg::hermitian_part(&(&s * sigma * &s));
    let vals = eigvalsh(&inner);
    let f: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok((f * f).clamp(0.0, 1.0))
}

/// ½‖ρ − σ‖₁ for Hermitian arguments.
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", rho.shape(), sigma.shape())));
    }
    let d = crate::linalg::hermitian_part(&(rho - sigma));
    Ok(eigvalsh(&d).iter().map(|v| v.abs()).sum::<f64>() / 2.0)
}

/// 1 − F(ρ, ρ + εD) for a traceless Hermitian perturbation D.
pub fn perturbed_infidelity(rho: &CMat, d: &CMat, eps: f64) -> Result<f64> {
    if rho.shape() != d.shape() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", rho.shape(), d.shape())));
    }
    if !crate::linalg::is_hermitian(d, 1e-12) || d.trace().norm() > 1e-12 {
        return Err(Error::InvalidInput("perturbation must be traceless Hermitian".into()));
    }
    let sigma = rho + d * num_complex::Complex64::new(eps, 0.0);
    Ok(1.0 - fidelity(rho, &sigma)?)
}

/// Infidelity at ε over infidelity at ε/2: 4 for quadratic response, 2 for linear.
pub fn infidelity_ratio(rho: &CMat, d: &CMat, eps: f64) -> Result<f64> {
    let half = perturbed_infidelity(rho, d, eps / 2.0)?;
    if half <= 0.0 {
        return Err(Error::InvalidInput(format!("infidelity vanishes at ε = {}", eps / 2.0)));
    }
    Ok(perturbed_infidelity(rho, d, eps)? / half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub renyi2: f64,
    pub spectrum: Vec<f64>,
    pub zeta: Vec<f64>,
    pub schmidt_gap: f64,
    pub parity: Option<Vec<f64>>,
}

pub fn entanglement_report(rho: &CMat, parity_basis: bool) -> Result<EntanglementReport> {
    check_state(rho)?;
    let conserves =
        (0..rho.nrows()).all(|i| (0..rho.nrows()).all(|j| (i ^ j).count_ones() % 2 == 0 || rho[(i, j)].norm() < 1e-10));
    let (vals, vecs) = if parity_basis && conserves { parity_eigh(rho) } else { eigh(rho) };
    let total: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    let spectrum: Vec<f64> = vals.iter().map(|v| v.max(0.0) / total).collect();
    let zeta = spectrum.iter().map(|&l| if l > 0.0 { -l.log2() } else { f64::INFINITY }).collect();
    let schmidt_gap = if spectrum.len() > 1 { spectrum[0] - spectrum[1] } else { spectrum[0] };
    let parity = parity_basis.then(|| {
        let n = rho.nrows().trailing_zeros() as usize;
        let zstring = crate::linalg::pauli_string(&"Z".repeat(n));
        (0..vecs.ncols())
            .map(|i| {
                let v = vecs.column(i);
                (v.adjoint() * &zstring * v)[(0, 0)].re
            })
            .collect()
    });
    Ok(EntanglementReport { renyi2: renyi_from_spectrum(&spectrum, 2.0), spectrum, zeta, schmidt_gap, parity })
}

/// Eigendecomposition inside the even and odd Z-parity blocks, merged in
/// descending order, so degenerate eigenvectors still carry a definite parity.
fn parity_eigh(rho: &CMat) -> (Vec<f64>, CMat) {
    let d = rho.nrows();
    let mut pairs: Vec<(f64, crate::linalg::CVec)> = Vec::with_capacity(d);
    for parity in [0u32, 1] {
        let idx: Vec<usize> = (0..d).filter(|i| i.count_ones() % 2 == parity).collect();
        let block = CMat::from_fn(idx.len(), idx.len(), |a, b| rho[(idx[a], idx[b])]);
        let (vals, vecs) = eigh(&block);
        for (k, v) in vals.into_iter().enumerate() {
            let mut full = crate::linalg::CVec::zeros(d);
            for (a, &i) in idx.iter().enumerate() {
                full[i] = vecs[(a, k)];
            }
            pairs.push((v, full));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let vals = pairs.iter().map(|p| p.0).collect();
    let vecs = CMat::from_columns(&pairs.into_iter().map(|p| p.1).collect::<Vec<_>>());
    (vals, vecs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// Critical exponent for order-parameter fits (equal to `slope`).
    pub beta: Option<f64>,
    pub window: (f64, f64),
}

/// Fit log⟨X⟩ = β·log(1 − g²) + c over g ∈ [0.5, g_cut].
pub fn fit_critical_exponent(data: &[(f64, f64)], g_cut: f64) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = data
        .iter()
        .copied()
        .filter(|&(g, m)| (0.5 - 1e-12..=g_cut + 1e-12).contains(&g) && g < 1.0 && m > 0.0)
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 points in [0.5, {g_cut}]")));
    }
    let x: Vec<f64> = pts.iter().map(|(g, _)| (1.0 - g * g).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, m)| m.ln()).collect();
    let f = fit_line(&x, &y);
    Ok(ScalingFit {
        slope: f.slope,
        slope_err: f.slope_err,
        intercept: f.intercept,
        residuals: f.residuals,
        beta: Some(f.slope),
        window: (0.5, g_cut),
    })
}

/// S = slope·T + intercept.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 points".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let f = fit_line(&x, &y);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalingFit {
        slope: f.slope,
        slope_err: f.slope_err,
        intercept: f.intercept,
        residuals: f.residuals,
        beta: None,
        window: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, identity};

    #[test]
    fn renyi_examples() {
        assert!(
            (renyi_entropy(&(identity(4) * num_complex::Complex64::new(0.25, 0.0)), 2.0).unwrap() - 2.0).abs() < 1e-12
        );
        let r = renyi_entropy(&diag_real(&[0.9, 0.1]), 2.0).unwrap();
        assert!((r - 0.286_304_185_156_641).abs() < 1e-9);
        assert!(renyi_entropy(&diag_real(&[1.0, 0.0]), 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_site() {
        assert!(single_site_entropy(0.0, 1.0).unwrap().abs() < 1e-15);
        assert!((single_site_entropy(0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((single_site_entropy(0.6, 0.0).unwrap() - 0.556_393_348_524_385_3).abs() < 1e-9);
        assert!(single_site_entropy(1.0, 0.5).is_err());
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(-1.0, -1.0, -1.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-7);
        // product states with a Bloch vector along a single axis
        assert!(concurrence(0.09, 0.0, 0.0, 0.3, 0.0).unwrap() < 1e-7);
        assert!(concurrence(0.0, 0.0, 0.36, 0.0, 0.6).unwrap() < 1e-7);
    }

    #[test]
    fn fidelity_examples() {
        let a = diag_real(&[1.0, 0.0]);
        let b = diag_real(&[0.0, 1.0]);
        assert!(fidelity(&a, &b).unwrap() < 1e-12);
        let r = diag_real(&[0.98, 0.02]);
        assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_exponent_recovery() {
        let data: Vec<(f64, f64)> =
            (0..7).map(|i| 0.5 + 0.05 * i as f64).map(|g| (g, (1.0 - g * g).powf(0.125))).collect();
        let f = fit_critical_exponent(&data, 0.8).unwrap();
        assert!((f.beta.unwrap() - 0.125).abs() < 1e-12);
        assert!(fit_critical_exponent(&data[..2], 0.8).is_err());
    }

    #[test]
    fn report_of_pure_zero() {
        let r = entanglement_report(&diag_real(&[1.0, 0.0, 0.0, 0.0]), true).unwrap();
        assert_eq!(r.zeta[0], 0.0);
        let par = r.parity.unwrap();
        assert!((par[0] - 1.0).abs() < 1e-12);
        assert!(par.iter().all(|&p| (p.abs() - 1.0).abs() < 1e-12));
    }
}
