//! Coarse-grained random walk of the lowest axial mode's phonon number.

use super::NoiseCalibration;
use crate::error::{Error, Result};
use crate::gates::OpTiming;
use crate::rng::{stream, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhononTrajectory {
    /// Start and end of every window, in schedule order.
    pub times: Vec<f64>,
    pub n_t: Vec<f64>,
    /// Time-averaged phonon number per window; the instantaneous value for
    /// zero-length windows.
    pub n_avg: Vec<f64>,
}

/// Walk state that can be advanced in time while integrating n_t.
#[derive(Debug, Clone)]
pub struct Walker {
    pub t: f64,
    pub n: f64,
    n_dot: f64,
    delta_n: f64,
    fraction: f64,
}

impl Walker {
    pub fn new(cal: &NoiseCalibration, rng: &mut Rng) -> Self {
        let n = if cal.n_bar_0 > 0.0 { Exp::new(1.0 / cal.n_bar_0).expect("positive mean").sample(rng) } else { 0.0 };
        Self::from_state(cal, 0.0, n)
    }

    pub fn from_state(cal: &NoiseCalibration, t: f64, n: f64) -> Self {
        Self { t, n, n_dot: cal.n_dot, delta_n: cal.delta_n, fraction: cal.step_fraction }
    }

    /// Largest step with (2n + δn)/δn · ṅδt/δn ≤ 1, scaled by the step fraction.
    fn max_dt(&self) -> f64 {
        self.fraction * self.delta_n * self.delta_n / ((2.0 * self.n + self.delta_n) * self.n_dot)
    }

    /// Advance to `target`, returning ∫ n dt over the elapsed interval.
    pub fn advance(&mut self, target: f64, rng: &mut Rng) -> f64 {
        if target <= self.t {
            return 0.0;
        }
        if self.n_dot == 0.0 {
            let area = self.n * (target - self.t);
            self.t = target;
            return area;
        }
        let dn = self.delta_n;
        let mut area = 0.0;
        while self.t < target {
            let dt = self.max_dt().min(target - self.t);
            area += self.n * dt;
            let rate = self.n_dot * dt / dn;
            let up = (self.n + dn) / dn * rate;
            let down = if self.n >= dn { self.n / dn * rate } else { 0.0 };
            let u: f64 = rng.random();
            if u < up {
                self.n += dn;
            } else if u < up + down {
                self.n -= dn;
            }
            self.t += dt;
        }
        self.t = target;
        area
    }
}

/// Time-averaged phonon numbers for a sorted list of windows.
pub fn window_averages(walker: &mut Walker, windows: &[(f64, f64)], rng: &mut Rng) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(windows.len());
    for &(s, e) in windows {
        if e < s || s < walker.t - 1e-15 {
            return Err(Error::InvalidInput(format!("windows must be sorted and non-overlapping, got ({s}, {e})")));
        }
        walker.advance(s, rng);
        if e > s {
            let area = walker.advance(e, rng);
            out.push(area / (e - s));
        } else {
            out.push(walker.n);
        }
    }
    Ok(out)
}

/// Sample one trajectory over a gate schedule; one n_avg entry per scheduled op.
pub fn sample_phonon_trajectory(
    cal: &NoiseCalibration,
    schedule: &[OpTiming],
    rng_seed: u64,
) -> Result<PhononTrajectory> {
    let mut rng = stream(rng_seed, 0);
    let mut w = Walker::new(cal, &mut rng);
    let mut times = Vec::with_capacity(2 * schedule.len());
    let mut n_t = Vec::with_capacity(2 * schedule.len());
    let mut n_avg = Vec::with_capacity(schedule.len());
    for op in schedule {
        let (s, e) = (op.start, op.start + op.duration);
        if op.duration < 0.0 || s < w.t - 1e-15 {
            return Err(Error::InvalidInput("schedule must be sorted with non-negative durations".into()));
        }
        w.advance(s, &mut rng);
        times.push(s);
        n_t.push(w.n);
        if e > s {
            let area = w.advance(e, &mut rng);
            n_avg.push(area / (e - s));
        } else {
            n_avg.push(w.n);
        }
        times.push(e);
        n_t.push(w.n);
    }
    Ok(PhononTrajectory { times, n_t, n_avg })
}

/// Ensemble of walks: instantaneous n at time `t` and the time average over
/// [t, t + dt] for each trajectory.
pub fn window_ensemble(
    cal: &NoiseCalibration,
    t: f64,
    dt: f64,
    trajectories: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    use crate::par::*;
    (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            let mut w = Walker::new(cal, &mut rng);
            w.advance(t, &mut rng);
            let n = w.n;
            let avg = if dt > 0.0 { w.advance(t + dt, &mut rng) / dt } else { n };
            (n, avg)
        })
        .unzip()
}

/// Mean of the window average, n̄_t + ṅΔt/2.
pub fn window_mean(cal: &NoiseCalibration, t: f64, dt: f64) -> f64 {
    cal.n_bar_0 + cal.n_dot * (t + dt / 2.0)
}

/// Thermal-limit variance of the window average, μ² − n̄_t ṅΔt/3 + ṅ²Δt²/6.
pub fn window_variance(cal: &NoiseCalibration, t: f64, dt: f64) -> f64 {
    let nt = cal.n_bar_0 + cal.n_dot * t;
    let mu = window_mean(cal, t, dt);
    mu * mu - nt * cal.n_dot * dt / 3.0 + cal.n_dot * cal.n_dot * dt * dt / 6.0
}

/// Variance of the window average for the walk itself: thermal start, unit
/// correlation drift and the δn-step diffusion term.
pub fn window_variance_walk(cal: &NoiseCalibration, t: f64, dt: f64) -> f64 {
    let nt = cal.n_bar_0 + cal.n_dot * t;
    let mu = window_mean(cal, t, dt);
    let diffusion = cal.delta_n * cal.n_dot * (t + dt / 3.0);
    mu * mu - nt * cal.n_dot * dt / 3.0 - cal.n_dot * cal.n_dot * dt * dt / 12.0 + diffusion
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_walk_is_constant() {
        let mut cal = NoiseCalibration::reference();
        cal.n_dot = 0.0;
        cal.delta_n = 1.0;
        let sched = [OpTiming { start: 0.0, duration: 1e-3 }, OpTiming { start: 2e-3, duration: 0.0 }];
        let tr = sample_phonon_trajectory(&cal, &sched, 4).unwrap();
        assert!(tr.n_t.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(tr.n_avg[0], tr.n_t[0]);
    }

    #[test]
    fn unsorted_schedule_is_rejected() {
        let cal = NoiseCalibration::reference();
        let sched = [OpTiming { start: 1e-3, duration: 1e-4 }, OpTiming { start: 0.0, duration: 1e-4 }];
        assert!(sample_phonon_trajectory(&cal, &sched, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let cal = NoiseCalibration::reference();
        let sched = [OpTiming { start: 0.0, duration: 2e-4 }, OpTiming { start: 2.05e-4, duration: 1e-5 }];
        assert_eq!(
            sample_phonon_trajectory(&cal, &sched, 9).unwrap(),
            sample_phonon_trajectory(&cal, &sched, 9).unwrap()
        );
    }
}
