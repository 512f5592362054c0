//! Trapped-ion error model: SPAM, idle dephasing, axial-motion rotation errors,
//! X flips and Stark phases on entangling gates, photon-count calibration
//! models and ion-to-qubit mapping.

pub mod contrast;
pub mod gate;
pub mod mapping;
pub mod phonon;
pub mod photon;
pub mod sim;

pub use contrast::{contrast_model, contrast_model_literal, fit_initial_phonons, simulate_p11};
pub use gate::{perturb_gate, stark_xx_matrix, NoiseModel, NoisyOp};
pub use mapping::{exhaustive_mapping, greedy_mapping, mapping_proxy, optimize_ion_mapping};
pub use phonon::{
    sample_phonon_trajectory, window_ensemble, window_mean, window_variance, window_variance_walk, PhononTrajectory,
};
pub use photon::{fit_bright_counts, fit_dark_counts, fit_prep_error, mean_dark_photons, photon_count_model};
pub use sim::{
    noisy_schedule, noisy_shot, readout_flip, readout_rotation, readout_window, run_noisy_realization, sample_index,
    NoisyRealization,
};

use crate::error::{Error, Result};
use crate::gates::GateTiming;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const REFERENCE_JSON: &str = include_str!("reference.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarkMode {
    /// One Gaussian sample per gate per shot.
    #[default]
    PerGate,
    /// One Gaussian sample per shot, shared by every gate.
    PerShot,
}

/// X-flip probability per fully entangling gate on an ion pair (unordered).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRate {
    pub i: usize,
    pub j: usize,
    pub p: f64,
}

/// Calibration in SI units. `b` and `sigma_phi` are per ion; missing entries are
/// filled by [`NoiseCalibration::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub p: f64,
    pub p_d: f64,
    pub p_b: f64,
    /// seconds
    pub t2_star: f64,
    pub n_bar_0: f64,
    /// phonons per second
    pub n_dot: f64,
    #[serde(default = "default_delta_n")]
    pub delta_n: f64,
    /// Fraction of the largest time step allowed by the walk constraint.
    #[serde(default = "default_step_fraction")]
    pub step_fraction: f64,
    /// rad/s
    pub omega_0: f64,
    /// kg
    pub ion_mass: f64,
    /// m
    pub waist_w: f64,
    pub n_ions: usize,
    #[serde(default)]
    pub b: Vec<f64>,
    /// radians per fully entangling gate
    #[serde(default)]
    pub sigma_phi: Vec<f64>,
    pub sigma_phi_default: f64,
    #[serde(default)]
    pub p_x_pairs: Vec<PairRate>,
    #[serde(default)]
    pub p_x_default: Option<f64>,
    /// 1/s
    pub eta_gamma: f64,
    pub r_b: f64,
    pub r_d: f64,
    #[serde(default)]
    pub stark_mode: StarkMode,
    #[serde(default)]
    pub timing: GateTiming,
}

fn default_delta_n() -> f64 {
    8.0
}

fn default_step_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    Spam,
    Axial,
    XFlip,
    Stark,
    Idle,
}

impl NoiseSource {
    pub const ALL: [NoiseSource; 5] =
        [NoiseSource::Spam, NoiseSource::Axial, NoiseSource::XFlip, NoiseSource::Stark, NoiseSource::Idle];

    pub fn label(self) -> &'static str {
        match self {
            NoiseSource::Spam => "spam",
            NoiseSource::Axial => "axial",
            NoiseSource::XFlip => "x_flip",
            NoiseSource::Stark => "stark",
            NoiseSource::Idle => "idle",
        }
    }
}

/// Which error channels are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSources {
    pub spam: bool,
    pub axial: bool,
    pub x_flip: bool,
    pub stark: bool,
    pub idle: bool,
}

impl NoiseSources {
    pub fn all() -> Self {
        Self { spam: true, axial: true, x_flip: true, stark: true, idle: true }
    }

    pub fn none() -> Self {
        Self { spam: false, axial: false, x_flip: false, stark: false, idle: false }
    }

    pub fn only(source: NoiseSource) -> Self {
        let mut s = Self::none();
        match source {
            NoiseSource::Spam => s.spam = true,
            NoiseSource::Axial => s.axial = true,
            NoiseSource::XFlip => s.x_flip = true,
            NoiseSource::Stark => s.stark = true,
            NoiseSource::Idle => s.idle = true,
        }
        s
    }

    pub fn any(&self) -> bool {
        self.spam || self.axial || self.x_flip || self.stark || self.idle
    }
}

impl Default for NoiseSources {
    fn default() -> Self {
        Self::all()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpamStage {
    Prep,
    MeasureDark,
    MeasureBright,
}

impl NoiseCalibration {
    /// Bundled calibration with the fitted values of the reference experiment.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_JSON).expect("bundled calibration is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cal: NoiseCalibration = serde_json::from_str(s)?;
        cal.resolve()
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fill per-ion tables and check ranges.
    pub fn resolve(mut self) -> Result<Self> {
        if self.n_ions == 0 {
            return Err(Error::Calibration("n_ions must be positive".into()));
        }
        if self.b.is_empty() {
            self.b = harmonic_participation(self.n_ions)?;
        }
        if self.b.len() != self.n_ions {
            return Err(Error::Calibration(format!("b has {} entries for {} ions", self.b.len(), self.n_ions)));
        }
        if self.sigma_phi.is_empty() {
            self.sigma_phi = vec![self.sigma_phi_default; self.n_ions];
        }
        if self.sigma_phi.len() != self.n_ions {
            return Err(Error::Calibration("sigma_phi length differs from n_ions".into()));
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Calibration(format!("{name} = {v} is not a probability")))
            }
        };
        prob("p", self.p)?;
        prob("p_d", self.p_d)?;
        prob("p_b", self.p_b)?;
        if self.p > self.p_d || self.p > self.p_b {
            return Err(Error::Calibration(format!(
                "prep error p = {} exceeds a measurement error (p_d = {}, p_b = {})",
                self.p, self.p_d, self.p_b
            )));
        }
        for pr in &self.p_x_pairs {
            prob("p_x", pr.p)?;
            if pr.i >= self.n_ions || pr.j >= self.n_ions {
                return Err(Error::Calibration(format!("p_x pair ({}, {}) outside the chain", pr.i, pr.j)));
            }
        }
        if let Some(d) = self.p_x_default {
            prob("p_x_default", d)?;
        }
        let nonneg = [
            ("t2_star", self.t2_star),
            ("n_bar_0", self.n_bar_0),
            ("n_dot", self.n_dot),
            ("eta_gamma", self.eta_gamma),
            ("r_b", self.r_b),
            ("r_d", self.r_d),
            ("sigma_phi_default", self.sigma_phi_default),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Calibration(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.sigma_phi.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::Calibration("sigma_phi entries must be non-negative".into()));
        }
        if !(self.t2_star > 0.0) {
            return Err(Error::Calibration("t2_star must be positive".into()));
        }
        if !(self.delta_n >= 1.0) {
            return Err(Error::Calibration(format!("delta_n must be at least 1, got {}", self.delta_n)));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction <= 1.0) {
            return Err(Error::Calibration("step_fraction must lie in (0, 1]".into()));
        }
        for (name, v) in [("omega_0", self.omega_0), ("ion_mass", self.ion_mass), ("waist_w", self.waist_w)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Calibration(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// ħ / (m ω₀ w²)
    pub fn kappa(&self) -> f64 {
        HBAR / (self.ion_mass * self.omega_0 * self.waist_w * self.waist_w)
    }

    /// X-flip probability at θ = π/2 for an ion pair.
    pub fn p_x_half_pi(&self, i: usize, j: usize) -> Result<f64> {
        self.p_x_pairs
            .iter()
            .find(|r| (r.i == i && r.j == j) || (r.i == j && r.j == i))
            .map(|r| r.p)
            .or(self.p_x_default)
            .ok_or(Error::MissingPair(i, j))
    }

    /// p_X(θ) = |θ|/(π/2) · p_X(π/2), capped at 1/2.
    pub fn p_x(&self, i: usize, j: usize, theta: f64) -> Result<f64> {
        Ok((theta.abs() / (PI / 2.0) * self.p_x_half_pi(i, j)?).min(0.5))
    }

    pub fn sigma_phi_of(&self, ion: usize) -> f64 {
        self.sigma_phi.get(ion).copied().unwrap_or(self.sigma_phi_default)
    }
}

/// ε_i = ħ b_i² n̄ / (m ω₀ w²)
pub fn decay_parameter(cal: &NoiseCalibration, ion: usize, n_bar: f64) -> Result<f64> {
    let b =
        cal.b.get(ion).ok_or_else(|| Error::InvalidInput(format!("ion {ion} outside a chain of {}", cal.b.len())))?;
    if n_bar < 0.0 {
        return Err(Error::InvalidInput("phonon number must be non-negative".into()));
    }
    Ok(cal.kappa() * b * b * n_bar)
}

/// p_Z = t / (2 T₂*), capped at 1/2.
pub fn dephasing_prob(cal: &NoiseCalibration, idle_time: f64) -> f64 {
    (idle_time.max(0.0) / (2.0 * cal.t2_star)).min(0.5)
}

pub fn spam_channel(cal: &NoiseCalibration, stage: SpamStage) -> Result<f64> {
    if cal.p > cal.p_d || cal.p > cal.p_b {
        return Err(Error::Calibration("prep error exceeds a measurement error".into()));
    }
    Ok(match stage {
        SpamStage::Prep => cal.p,
        SpamStage::MeasureDark => cal.p_d - cal.p,
        SpamStage::MeasureBright => cal.p_b - cal.p,
    })
}

/// Dimensionless equilibrium positions of `n` ions in a harmonic well.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * 2.0 * (n as f64).powf(-0.56)).collect();
    for _ in 0..200 {
        let mut f = vec![0.0; n];
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            f[i] = u[i];
            jac[(i, i)] = 1.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = u[i] - u[j];
                f[i] -= d.signum() / (d * d);
                let k = 2.0 / d.abs().powi(3);
                jac[(i, i)] += k;
                jac[(i, j)] -= k;
            }
        }
        let rhs = nalgebra::DVector::from_vec(f.iter().map(|v| -v).collect());
        let step = jac.lu().solve(&rhs).ok_or_else(|| Error::Calibration("singular chain Hessian".into()))?;
        for i in 0..n {
            u[i] += step[i];
        }
        if step.norm() < 1e-13 {
            return Ok(u);
        }
    }
    Err(Error::NoConvergence { iterations: 200 })
}

/// Participation of each ion in the lowest axial mode of a harmonic chain.
pub fn harmonic_participation(n: usize) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let u = equilibrium_positions(n)?;
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        for j in 0..n {
            if i != j {
                let k = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, i)] += k;
                a[(i, j)] = -k;
            }
        }
    }
    let se = a.symmetric_eigen();
    let lowest = (0..n).min_by(|&x, &y| se.eigenvalues[x].total_cmp(&se.eigenvalues[y])).expect("n ≥ 1");
    let v = se.eigenvectors.column(lowest);
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    Ok(v.iter().map(|x| x * sign).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_calibration_loads() {
        let cal = NoiseCalibration::reference();
        assert_eq!(cal.b.len(), 15);
        assert!((cal.b.iter().map(|b| b * b).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((cal.kappa() - 5.860e-4).abs() < 1e-6, "{}", cal.kappa());
        assert_eq!(cal.p_x_half_pi(3, 11).unwrap(), 5e-4);
    }

    #[test]
    fn equilibrium_is_symmetric() {
        let u = equilibrium_positions(5).unwrap();
        for i in 0..5 {
            assert!((u[i] + u[4 - i]).abs() < 1e-12);
        }
        // two ions sit at ±(1/4)^{1/3}
        let u = equilibrium_positions(2).unwrap();
        assert!((u[1] - 0.25f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn missing_pair_is_an_error() {
        let mut cal = NoiseCalibration::reference();
        cal.p_x_default = None;
        cal.p_x_pairs = vec![PairRate { i: 1, j: 2, p: 1e-3 }];
        assert_eq!(cal.p_x_half_pi(2, 1).unwrap(), 1e-3);
        assert!(matches!(cal.p_x(0, 1, 0.3), Err(Error::MissingPair(0, 1))));
    }

    #[test]
    fn invalid_spam_is_rejected() {
        let mut cal = NoiseCalibration::reference();
        cal.p = 2e-3;
        assert!(cal.validate().is_err());
        assert!(spam_channel(&cal, SpamStage::Prep).is_err());
    }
}
