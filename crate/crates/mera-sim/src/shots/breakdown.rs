//! Error-budget breakdown: repeated tomography trials with one noise source
//! switched on at a time.

use super::{circuit_id, mle_reconstruct, noisy_outcome_distributions, pauli_settings, sample_from_distributions};
use crate::analysis::fidelity;
use crate::error::Result;
use crate::gates::Circuit;
use crate::linalg::{eigvalsh, CMat};
use crate::noise::{NoiseCalibration, NoiseModel, NoiseSource, NoiseSources};
use crate::par::*;
use crate::rng::{derive_seed, stream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownCase {
    Full,
    ShotOnly,
    Single(NoiseSource),
}

impl BreakdownCase {
    /// Full, shot-only, then every source alone.
    pub fn standard() -> Vec<BreakdownCase> {
        let mut v = vec![BreakdownCase::Full, BreakdownCase::ShotOnly];
        v.extend(NoiseSource::ALL.iter().map(|&s| BreakdownCase::Single(s)));
        v
    }

    pub fn label(self) -> &'static str {
        match self {
            BreakdownCase::Full => "full",
            BreakdownCase::ShotOnly => "shot_only",
            BreakdownCase::Single(s) => s.label(),
        }
    }

    pub fn sources(self) -> NoiseSources {
        match self {
            BreakdownCase::Full => NoiseSources::all(),
            BreakdownCase::ShotOnly => NoiseSources::none(),
            BreakdownCase::Single(s) => NoiseSources::only(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownStats {
    pub case: String,
    pub trials: usize,
    pub zeta0_mean: f64,
    pub zeta0_sd: f64,
    pub infidelity_mean: f64,
    pub infidelity_sd: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BreakdownConfig {
    pub shots_per_basis: u64,
    pub trials: usize,
    /// Noise realizations averaged into each setting's outcome distribution.
    pub realizations: usize,
    pub seed: u64,
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = if x.len() > 1 { x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v.sqrt())
}

/// ζ₀ = −log₂ λ_max and 1 − F against `ideal` over MLE reconstructions of
/// synthetic full-tomography datasets, one row per case.
pub fn noise_breakdown(
    circuit: &Circuit,
    ideal: &CMat,
    cal: &NoiseCalibration,
    cases: &[BreakdownCase],
    cfg: &BreakdownConfig,
) -> Result<Vec<BreakdownStats>> {
    let settings = pauli_settings(circuit.measured_qubits.len())?;
    let id = circuit_id(circuit);
    cases
        .iter()
        .map(|&case| {
            let seed = derive_seed(cfg.seed, case.label());
            let model = NoiseModel::new(cal.clone(), case.sources());
            let dists = noisy_outcome_distributions(circuit, &model, &settings, cfg.realizations, seed)?;
            let sample_seed = derive_seed(seed, "trials");
            let results = (0..cfg.trials)
                .into_par_iter()
                .map(|k| -> Result<(f64, f64)> {
                    let mut rng = stream(sample_seed, k as u64);
                    let ds =
                        sample_from_distributions(&id, &settings, &dists, cfg.shots_per_basis, sample_seed, &mut rng);
                    let rho = mle_reconstruct(&ds)?.rho;
                    let lmax = eigvalsh(&rho).into_iter().fold(0.0, f64::max);
                    Ok((-lmax.log2(), 1.0 - fidelity(&rho, ideal)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let (z, inf): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
            let (zeta0_mean, zeta0_sd) = mean_sd(&z);
            let (infidelity_mean, infidelity_sd) = mean_sd(&inf);
            Ok(BreakdownStats {
                case: case.label().to_string(),
                trials: cfg.trials,
                zeta0_mean,
                zeta0_sd,
                infidelity_mean,
                infidelity_sd,
            })
        })
        .collect()
}
