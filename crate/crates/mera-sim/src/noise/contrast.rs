//! Damped |11⟩ oscillations under repeated XX gates and the Gamma-distribution
//! contrast model used to calibrate the initial phonon number.

use super::gate::{perturb_gate, NoiseModel};
use super::phonon::{window_averages, window_mean, window_variance, Walker};
use super::{NoiseCalibration, NoiseSource, NoiseSources};
use crate::error::{Error, Result};
use crate::gates::{GateOp, StateVector};
use crate::numerics::golden_min;
use crate::par::*;
use crate::rng::stream;

fn check(n: usize, alpha: f64) -> Result<()> {
    if n == 0 || !(alpha > 0.0) {
        return Err(Error::InvalidInput("contrast model needs N ≥ 1 and α > 0".into()));
    }
    Ok(())
}

/// P₁₁ = (1 − C cos(Nθ − φ))/2 with x = Nθε̄/α, C = (1 + x²)^{−α/2} and
/// φ = α arctan x: the characteristic function of a Gamma-distributed
/// time-averaged phonon number with shape α.
pub fn contrast_model(n: usize, theta: f64, eps_bar: f64, alpha: f64) -> Result<f64> {
    check(n, alpha)?;
    let x = n as f64 * theta * eps_bar / alpha;
    let c = (1.0 + x * x).powf(-alpha / 2.0);
    let phi = alpha * x.atan();
    Ok((1.0 - c * (n as f64 * theta - phi).cos()) / 2.0)
}

/// Same form with the shape parameter multiplying the argument, x = αNθε̄.
pub fn contrast_model_literal(n: usize, theta: f64, eps_bar: f64, alpha: f64) -> Result<f64> {
    check(n, alpha)?;
    let x = alpha * n as f64 * theta * eps_bar;
    let c = (1.0 + x * x).powf(-alpha / 2.0);
    let phi = alpha * x.atan();
    Ok((1.0 - c * (n as f64 * theta - phi).cos()) / 2.0)
}

/// Windows of N back-to-back XX gates starting at `t0`.
fn gate_windows(cal: &NoiseCalibration, n: usize, t0: f64) -> Vec<(f64, f64)> {
    let (d, gap) = (cal.timing.two_qubit, cal.timing.idle_gap);
    (0..n)
        .map(|k| {
            let s = t0 + k as f64 * (d + gap);
            (s, s + d)
        })
        .collect()
}

fn sequence_duration(cal: &NoiseCalibration, n: usize) -> f64 {
    n as f64 * cal.timing.two_qubit + (n.saturating_sub(1)) as f64 * cal.timing.idle_gap
}

/// Mean P₁₁ after N = 1..=n_max gates XX(θ) on ions (i, j), starting from |00⟩
/// after a wait `t0`, averaged over `trajectories` phonon walks with axial noise only.
pub fn simulate_p11(
    cal: &NoiseCalibration,
    ions: (usize, usize),
    theta: f64,
    n_max: usize,
    t0: f64,
    trajectories: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut ion_map: Vec<usize> = vec![ions.0, ions.1];
    ion_map.extend((0..cal.n_ions).filter(|&k| k != ions.0 && k != ions.1));
    let model = NoiseModel::new(cal.clone(), NoiseSources::only(NoiseSource::Axial)).with_mapping(ion_map)?;
    let windows = gate_windows(cal, n_max, t0);
    let sums = (0..trajectories)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let mut rng = stream(seed, k as u64);
            let mut walker = Walker::new(cal, &mut rng);
            let avg = window_averages(&mut walker, &windows, &mut rng)?;
            let mut state = StateVector::zero(2);
            let mut out = Vec::with_capacity(n_max);
            for n_avg in avg {
                for op in perturb_gate(&GateOp::xx(0, 1, theta), n_avg, &model, None, &mut rng)? {
                    op.apply(&mut state)?;
                }
                out.push(state.amplitudes[3].norm_sqr());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mean = vec![0.0; n_max];
    for s in &sums {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / trajectories as f64;
        }
    }
    Ok(mean)
}

/// Model prediction for N gates with initial mean phonon number `n_bar_0`.
pub fn predicted_p11(
    cal: &NoiseCalibration,
    ions: (usize, usize),
    theta: f64,
    n: usize,
    t0: f64,
    n_bar_0: f64,
) -> Result<f64> {
    let c = NoiseCalibration { n_bar_0, ..cal.clone() };
    let dt = sequence_duration(&c, n);
    let mu = window_mean(&c, t0, dt);
    let alpha = mu * mu / window_variance(&c, t0, dt);
    let (bi, bj) = (c.b[ions.0], c.b[ions.1]);
    let eps = c.kappa() * (bi * bi + bj * bj) * mu;
    contrast_model(n, theta, eps, alpha)
}

/// Least-squares n̄₀ from P₁₁(N), N = 1, 2, ….
pub fn fit_initial_phonons(
    p11: &[f64],
    cal: &NoiseCalibration,
    ions: (usize, usize),
    theta: f64,
    t0: f64,
) -> Result<f64> {
    if p11.len() < 3 {
        return Err(Error::InvalidInput("need at least three gate counts".into()));
    }
    let rss = |log_n: f64| -> f64 {
        p11.iter()
            .enumerate()
            .map(|(k, &y)| (predicted_p11(cal, ions, theta, k + 1, t0, log_n.exp()).unwrap_or(f64::NAN) - y).powi(2))
            .sum::<f64>()
    };
    // coarse grid, then golden-section refinement around the best node
    let grid: Vec<f64> = (0..=60).map(|k| (1.0f64).ln() + k as f64 * (1e4f64.ln() / 60.0)).collect();
    let best =
        grid.iter().enumerate().min_by(|a, b| rss(*a.1).total_cmp(&rss(*b.1))).map(|(k, _)| k).expect("non-empty grid");
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    Ok(golden_min(rss, lo, hi, 1e-10).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn undamped_and_fully_damped_limits() {
        for n in [1, 3, 7] {
            let p = contrast_model(n, FRAC_PI_2, 0.0, 1.2).unwrap();
            assert!((p - (1.0 - (n as f64 * FRAC_PI_2).cos()) / 2.0).abs() < 1e-15);
        }
        let p = contrast_model(100_000, FRAC_PI_2, 0.03, 1.0).unwrap();
        assert!((p - 0.5).abs() < 1e-3);
        assert!(contrast_model(0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn placements_agree_at_unit_shape() {
        for n in 1..20 {
            let a = contrast_model(n, FRAC_PI_2, 0.02, 1.0).unwrap();
            let b = contrast_model_literal(n, FRAC_PI_2, 0.02, 1.0).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }
}
