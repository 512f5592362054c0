//! Photon-count statistics of fluorescence detection with optical pumping.

use super::NoiseCalibration;
use crate::error::{Error, Result};
use crate::numerics::integrate;
use crate::optimizer::minimize::nelder_mead;
use crate::rng::stream;
use rand_distr::{Distribution, Exp, Poisson};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonState {
    Bright,
    Dark,
}

/// Poisson probability of n counts at mean m.
pub fn poisson(n: u64, m: f64) -> f64 {
    if m <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-m + n as f64 * m.ln() - ln_gamma(n as f64 + 1.0)).exp()
}

fn bright(n: u64, tau: f64, rate: f64, r_b: f64) -> f64 {
    let unpumped = (-r_b * tau).exp() * poisson(n, rate * tau);
    if r_b == 0.0 {
        return unpumped;
    }
    unpumped + integrate(|t| (-r_b * t).exp() * poisson(n, rate * t) * r_b, 0.0, tau, 1e-13)
}

/// Dark-state counts. The integral holds the runs that were pumped before τ;
/// runs never pumped contribute e^{-R_d τ} at n = 0.
fn dark(n: u64, tau: f64, rate: f64, r_d: f64) -> f64 {
    let never = if n == 0 { (-r_d * tau).exp() } else { 0.0 };
    if r_d == 0.0 {
        return never;
    }
    never + integrate(|t| poisson(n, rate * (tau - t)) * (-r_d * t).exp() * r_d, 0.0, tau, 1e-13)
}

/// Probability of detecting n photons in a window τ.
pub fn photon_count_model(state: PhotonState, n: u64, tau: f64, cal: &NoiseCalibration) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("detection time must be positive".into()));
    }
    Ok(match state {
        PhotonState::Bright => bright(n, tau, cal.eta_gamma, cal.r_b),
        PhotonState::Dark => dark(n, tau, cal.eta_gamma, cal.r_d),
    })
}

/// Histogram of simulated counts (index = photon number).
pub fn sample_counts(state: PhotonState, tau: f64, cal: &NoiseCalibration, shots: usize, seed: u64) -> Vec<u64> {
    let mut rng = stream(seed, 0);
    let mut hist: Vec<u64> = Vec::new();
    let rate = match state {
        PhotonState::Bright => cal.r_b,
        PhotonState::Dark => cal.r_d,
    };
    let pump = (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"));
    for _ in 0..shots {
        let t_pump = pump.as_ref().map_or(f64::INFINITY, |e| e.sample(&mut rng));
        let exposure = match state {
            PhotonState::Bright => t_pump.min(tau),
            PhotonState::Dark => (tau - t_pump).max(0.0),
        };
        let m = cal.eta_gamma * exposure;
        let n = if m > 0.0 { Poisson::new(m).expect("positive mean").sample(&mut rng) as usize } else { 0 };
        if hist.len() <= n {
            hist.resize(n + 1, 0);
        }
        hist[n] += 1;
    }
    hist
}

fn nll(hist: &[u64], p: impl Fn(u64) -> f64) -> f64 {
    hist.iter().enumerate().filter(|(_, &k)| k > 0).map(|(n, &k)| -(k as f64) * p(n as u64).max(1e-300).ln()).sum()
}

/// Maximum-likelihood (ηΓ, R_b) from a bright-state histogram.
pub fn fit_bright_counts(hist: &[u64], tau: f64) -> Result<(f64, f64)> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(Error::InvalidInput("empty histogram".into()));
    }
    let mean = hist.iter().enumerate().map(|(n, &k)| n as f64 * k as f64).sum::<f64>() / total as f64;
    let x0 = [(mean / tau).max(1.0).ln(), (0.1 / tau).ln()];
    let m = nelder_mead(|x| nll(hist, |n| bright(n, tau, x[0].exp(), x[1].exp())), &x0, 0.3, 1e-9, 4000);
    Ok((m.x[0].exp(), m.x[1].exp()))
}

/// Maximum-likelihood R_d from a dark-state histogram at known ηΓ.
pub fn fit_dark_counts(hist: &[u64], tau: f64, eta_gamma: f64) -> Result<f64> {
    if hist.iter().sum::<u64>() == 0 {
        return Err(Error::InvalidInput("empty histogram".into()));
    }
    let m = nelder_mead(
        |x| nll(hist, |n| dark(n, tau, eta_gamma, x[0].exp())),
        &[(1.0 / tau).ln() - 3.0],
        0.3,
        1e-10,
        2000,
    );
    Ok(m.x[0].exp())
}

fn equilibrium_bright(cal: &NoiseCalibration) -> f64 {
    1.0 / (cal.r_b / cal.r_d + 1.0)
}

/// ∫₀^τ ηΓ (P_d∞ − (p − P_b∞) e^{−(R_b+R_d)t}) dt, with P_b∞ = (R_b/R_d + 1)⁻¹.
pub fn mean_dark_photons(tau: f64, p: f64, cal: &NoiseCalibration) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::InvalidInput("detection time must be non-negative".into()));
    }
    let pb = equilibrium_bright(cal);
    let pd = 1.0 - pb;
    let k = cal.r_b + cal.r_d;
    let decay = if k > 0.0 { (1.0 - (-k * tau).exp()) / k } else { tau };
    Ok(cal.eta_gamma * (pd * tau - (p - pb) * decay))
}

/// Weighted least-squares prep error p and its 1σ from mean dark counts.
pub fn fit_prep_error(taus: &[f64], nbar: &[f64], sigma: &[f64], cal: &NoiseCalibration) -> Result<(f64, f64)> {
    if taus.len() != nbar.len() || taus.len() != sigma.len() || taus.is_empty() {
        return Err(Error::Dimension("taus, nbar and sigma must have equal non-zero length".into()));
    }
    // the model is affine in p: m(τ) = m(τ; p = 0) − p·B(τ)
    let (mut num, mut den) = (0.0, 0.0);
    for ((&t, &y), &s) in taus.iter().zip(nbar).zip(sigma) {
        let a = mean_dark_photons(t, 0.0, cal)?;
        let b = a - mean_dark_photons(t, 1.0, cal)?;
        let w = 1.0 / (s * s);
        num += w * b * (a - y);
        den += w * b * b;
    }
    if den <= 0.0 {
        return Err(Error::InvalidInput("data carry no information on p".into()));
    }
    Ok((num / den, den.sqrt().recip()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma_lr;

    fn cal() -> NoiseCalibration {
        NoiseCalibration::reference()
    }

    #[test]
    fn bright_matches_incomplete_gamma() {
        let c = cal();
        let (tau, lam, rb) = (1e-3, c.eta_gamma, c.r_b);
        for n in [0u64, 3, 20, 50, 70] {
            let k = rb + lam;
            let oracle = (-rb * tau).exp() * poisson(n, lam * tau)
                + rb * (n as f64 * lam.ln() - (n + 1) as f64 * k.ln()).exp() * gamma_lr((n + 1) as f64, k * tau);
            let got = photon_count_model(PhotonState::Bright, n, tau, &c).unwrap();
            assert!((got - oracle).abs() < 1e-10 * oracle.max(1e-6), "n={n}: {got} {oracle}");
        }
    }

    #[test]
    fn dark_matches_incomplete_gamma() {
        let c = cal();
        let (tau, lam, rd) = (1e-3, c.eta_gamma, c.r_d);
        for n in [1u64, 4, 30] {
            let k = lam - rd;
            let oracle = rd
                * (-rd * tau).exp()
                * (n as f64 * lam.ln() - (n + 1) as f64 * k.ln()).exp()
                * gamma_lr((n + 1) as f64, k * tau);
            let got = photon_count_model(PhotonState::Dark, n, tau, &c).unwrap();
            assert!((got - oracle).abs() < 1e-10 * oracle.max(1e-9), "n={n}: {got} {oracle}");
        }
    }

    #[test]
    fn distributions_are_normalized() {
        let c = cal();
        for state in [PhotonState::Bright, PhotonState::Dark] {
            for tau in [2e-4, 1e-3] {
                let s: f64 = (0..200).map(|n| photon_count_model(state, n, tau, &c).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-6, "{state:?} {tau}: {s}");
            }
        }
    }

    #[test]
    fn limits() {
        let mut c = cal();
        let d0 = photon_count_model(PhotonState::Dark, 0, 1e-12, &c).unwrap();
        assert!((d0 - 1.0).abs() < 1e-9);
        c.r_b = 0.0;
        for n in [0u64, 10, 40] {
            let p = photon_count_model(PhotonState::Bright, n, 1e-3, &c).unwrap();
            assert!((p - poisson(n, c.eta_gamma * 1e-3)).abs() < 1e-15);
        }
        assert!(photon_count_model(PhotonState::Bright, 1, 0.0, &c).is_err());
    }

    #[test]
    fn mean_dark_photons_quadrature_and_slope() {
        let c = cal();
        assert_eq!(mean_dark_photons(0.0, 1e-4, &c).unwrap(), 0.0);
        let pb = equilibrium_bright(&c);
        let k = c.r_b + c.r_d;
        let q = integrate(|t| c.eta_gamma * ((1.0 - pb) - (1e-4 - pb) * (-k * t).exp()), 0.0, 2e-3, 1e-12);
        assert!((mean_dark_photons(2e-3, 1e-4, &c).unwrap() - q).abs() < 1e-9);
        let slope = mean_dark_photons(2e-3, pb, &c).unwrap() - mean_dark_photons(1e-3, pb, &c).unwrap();
        assert!((slope - c.eta_gamma * (1.0 - pb) * 1e-3).abs() < 1e-9);
    }
}
