//! Experiment configuration, grid resolution and cost estimates.

use anyhow::{anyhow, bail, Context, Result};
use mera_sim::gates::Circuit;
use mera_sim::mera::cone::MAX_T;
use mera_sim::mera::{build_boundary_cone, build_local_cone, MeraParams, UnitCell};
use mera_sim::noise::NoiseCalibration;
use mera_sim::optimizer::{default_depth, OptimizerConfig};
use mera_sim::shots::MAX_TOMOGRAPHY_QUBITS;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const DEFAULT_BUDGET: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SweepG,
    ScalingCritical,
    ScalingGapped,
    Tomography,
    NoiseBreakdown,
    CalibrateFit,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SweepG => "sweep_g",
            Scenario::ScalingCritical => "scaling_critical",
            Scenario::ScalingGapped => "scaling_gapped",
            Scenario::Tomography => "tomography",
            Scenario::NoiseBreakdown => "noise_breakdown",
            Scenario::CalibrateFit => "calibrate_fit",
        }
    }
}

/// Config file contents. Everything but `scenario` and `seed` has a
/// scenario-dependent default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub g: Option<Vec<f64>>,
    #[serde(default, rename = "T")]
    pub t: Option<Vec<usize>>,
    #[serde(default)]
    pub shots_per_basis: Option<u64>,
    /// "off", "reference" or a calibration file path.
    #[serde(default)]
    pub noise: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub n_measured: Option<usize>,
    #[serde(default)]
    pub bootstrap: Option<usize>,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub optimizer: Option<OptimizerConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| anyhow!("config parse error at line {}, column {}: {e}", e.line(), e.column()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| path.display().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub g: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub shots_per_basis: u64,
}

impl Cell {
    pub fn label(&self) -> String {
        match (self.g, self.t) {
            (Some(g), Some(t)) => format!("g{g:.4}_T{t}"),
            _ => "calibration".into(),
        }
    }

    pub fn g_field(&self) -> String {
        self.g.map(|g| g.to_string()).unwrap_or_default()
    }

    pub fn t_field(&self) -> String {
        self.t.map(|t| t.to_string()).unwrap_or_default()
    }
}

#[derive(Debug, Clone)]
pub enum NoiseChoice {
    Off,
    Calibrated { source: String, cal: NoiseCalibration },
}

impl NoiseChoice {
    pub fn resolve(spec: Option<&str>) -> Result<Option<Self>> {
        Ok(match spec {
            None => None,
            Some("off") => Some(NoiseChoice::Off),
            Some("reference") => {
                Some(NoiseChoice::Calibrated { source: "reference".into(), cal: NoiseCalibration::reference() })
            }
            Some(path) => Some(NoiseChoice::Calibrated {
                source: path.to_string(),
                cal: NoiseCalibration::from_path(Path::new(path)).with_context(|| format!("calibration {path}"))?,
            }),
        })
    }

    pub fn label(&self) -> &str {
        match self {
            NoiseChoice::Off => "off",
            NoiseChoice::Calibrated { source, .. } => source,
        }
    }

    pub fn calibration(&self) -> Option<&NoiseCalibration> {
        match self {
            NoiseChoice::Off => None,
            NoiseChoice::Calibrated { cal, .. } => Some(cal),
        }
    }
}

/// A validated, fully defaulted experiment.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub scenario: Scenario,
    pub seed: u64,
    pub noise: NoiseChoice,
    pub cells: Vec<Cell>,
    pub trials: usize,
    pub realizations: usize,
    pub bootstrap: usize,
    pub budget: f64,
    pub optimizer: OptimizerConfig,
}

fn check_g(g: &[f64]) -> Result<()> {
    if g.is_empty() {
        bail!("field `g` must not be empty");
    }
    if let Some(bad) = g.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        bail!("field `g`: transverse field must be non-negative, got {bad}");
    }
    Ok(())
}

fn check_t(t: &[usize], max: usize) -> Result<()> {
    if t.is_empty() {
        bail!("field `T` must not be empty");
    }
    if let Some(bad) = t.iter().find(|&&v| v == 0 || v > max) {
        bail!("field `T`: layer count {bad} outside 1..={max}");
    }
    Ok(())
}

fn grid(g: &[f64], t: &[usize], shots: impl Fn(f64, usize) -> u64) -> Vec<Cell> {
    g.iter()
        .flat_map(|&g| t.iter().map(move |&t| (g, t)))
        .map(|(g, t)| Cell { g: Some(g), t: Some(t), shots_per_basis: shots(g, t) })
        .collect()
}

impl Plan {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let scenario = config.scenario;
        let seed = config
            .seed
            .ok_or_else(|| anyhow!("missing required field `seed` (set it in the config or pass --seed)"))?;
        let noise_spec = config.noise.as_deref();
        let noise = match (scenario, NoiseChoice::resolve(noise_spec)?) {
            (Scenario::NoiseBreakdown | Scenario::CalibrateFit, Some(NoiseChoice::Off)) => {
                bail!("field `noise`: {} needs a calibration, not \"off\"", scenario.name())
            }
            (Scenario::NoiseBreakdown | Scenario::CalibrateFit, None) => {
                NoiseChoice::Calibrated { source: "reference".into(), cal: NoiseCalibration::reference() }
            }
            (_, None) => NoiseChoice::Off,
            (_, Some(n)) => n,
        };
        let shots = config.shots_per_basis;
        let cells = match scenario {
            Scenario::SweepG => {
                let g = config.g.clone().unwrap_or_else(|| (2..=20).map(|k| k as f64 / 10.0).collect());
                check_g(&g)?;
                match &config.t {
                    Some(t) => {
                        check_t(t, MAX_T)?;
                        grid(&g, t, |_, _| shots.unwrap_or(0))
                    }
                    None => g
                        .iter()
                        .map(|&g| Cell { g: Some(g), t: Some(default_depth(g)), shots_per_basis: shots.unwrap_or(0) })
                        .collect(),
                }
            }
            Scenario::ScalingCritical | Scenario::ScalingGapped | Scenario::Tomography => {
                let (g0, t0): (f64, Vec<usize>) = match scenario {
                    Scenario::ScalingCritical => (1.0, (1..=5).collect()),
                    Scenario::ScalingGapped => (1.5, (1..=4).collect()),
                    _ => (1.0, vec![3]),
                };
                let g = config.g.clone().unwrap_or(vec![g0]);
                let t = config.t.clone().unwrap_or(t0);
                check_g(&g)?;
                check_t(&t, MAX_T)?;
                if scenario == Scenario::Tomography {
                    if let Some(n) = config.n_measured {
                        if n > MAX_TOMOGRAPHY_QUBITS {
                            bail!(
                                "cost guard: tomography with n_measured = {n} needs 3^{n} = {} settings; the limit is {} qubits",
                                3usize.pow(n as u32),
                                MAX_TOMOGRAPHY_QUBITS
                            );
                        }
                        if t.iter().any(|&v| v != n) {
                            bail!("field `n_measured` = {n} must equal every entry of `T` (the boundary width)");
                        }
                    }
                }
                if let Some(&bad) = t.iter().find(|&&v| v > MAX_TOMOGRAPHY_QUBITS) {
                    if shots != Some(0) {
                        bail!(
                            "cost guard: T = {bad} measures {bad} qubits (3^{bad} settings); the limit is {MAX_TOMOGRAPHY_QUBITS}"
                        );
                    }
                }
                let default = if scenario == Scenario::Tomography { 1500 } else { 0 };
                grid(&g, &t, |_, _| shots.unwrap_or(default))
            }
            Scenario::NoiseBreakdown => {
                let cells: Vec<Cell> = match (&config.g, &config.t) {
                    (None, None) => vec![(1.0, 4), (1.5, 1)]
                        .into_iter()
                        .map(|(g, t)| Cell {
                            g: Some(g),
                            t: Some(t),
                            shots_per_basis: shots.unwrap_or(if t == 1 { 8000 } else { 1500 }),
                        })
                        .collect(),
                    (g, t) => {
                        let g = g.clone().unwrap_or(vec![1.0]);
                        let t = t.clone().unwrap_or(vec![4]);
                        check_g(&g)?;
                        check_t(&t, MAX_TOMOGRAPHY_QUBITS)?;
                        grid(&g, &t, |_, t| shots.unwrap_or(if t == 1 { 8000 } else { 1500 }))
                    }
                };
                if cells.iter().any(|c| c.shots_per_basis == 0) {
                    bail!("field `shots_per_basis` must be positive for noise_breakdown");
                }
                cells
            }
            Scenario::CalibrateFit => {
                if config.g.is_some() || config.t.is_some() {
                    bail!("calibrate_fit takes no `g` or `T` grid");
                }
                vec![Cell { g: None, t: None, shots_per_basis: shots.unwrap_or(100_000) }]
            }
        };
        let trials = config.trials.unwrap_or(1000);
        let realizations = config.realizations.unwrap_or(2000);
        let bootstrap = config.bootstrap.unwrap_or(if scenario == Scenario::Tomography { 200 } else { 0 });
        if trials == 0 || realizations == 0 {
            bail!("fields `trials` and `realizations` must be positive");
        }
        if bootstrap != 0 && bootstrap < 100 {
            bail!("field `bootstrap` must be 0 (off) or at least 100 resamples");
        }
        let optimizer = config.optimizer.clone().unwrap_or_default();
        optimizer.validate().map_err(|e| anyhow!("field `optimizer`: {e}"))?;
        let budget = config.budget.unwrap_or(DEFAULT_BUDGET);
        Ok(Self { scenario, seed, noise, cells, trials, realizations, bootstrap, budget, optimizer, config })
    }

    /// SHA-256 of the resolved config with the output location removed.
    pub fn config_hash(&self) -> String {
        let mut c = self.config.clone();
        c.out = None;
        c.seed = Some(self.seed);
        c.noise = Some(self.noise.label().to_string());
        let d = Sha256::digest(serde_json::to_vec(&c).expect("config serializes"));
        d.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Predicted simulation work in gate applications; shot sampling,
    /// noise averaging and trial repetition all scale it.
    pub fn cost_estimate(&self) -> Result<f64> {
        let mut total = 0.0;
        for c in &self.cells {
            total += match self.scenario {
                Scenario::SweepG => {
                    let ops = shape(build_local_cone(&dummy(c.t.unwrap()), c.t.unwrap())?);
                    let averaging = if self.noisy() { self.realizations } else { 1 } as f64;
                    2.0 * (c.shots_per_basis as f64 + averaging * ops)
                }
                Scenario::ScalingCritical | Scenario::ScalingGapped | Scenario::Tomography => {
                    let t = c.t.unwrap();
                    let ops = shape(build_boundary_cone(&dummy(t), t)?);
                    let settings = if c.shots_per_basis == 0 { 0.0 } else { 3f64.powi(t as i32) };
                    let per_shot = if self.scenario == Scenario::Tomography && self.noisy() { ops } else { 1.0 };
                    let averaging = if self.noisy() { self.realizations } else { 1 } as f64;
                    settings * (c.shots_per_basis as f64 * per_shot + averaging * ops)
                }
                Scenario::NoiseBreakdown => {
                    let t = c.t.unwrap();
                    let ops = shape(build_boundary_cone(&dummy(t), t)?);
                    let settings = 3f64.powi(t as i32);
                    7.0 * settings * (self.trials as f64 * c.shots_per_basis as f64 + self.realizations as f64 * ops)
                }
                Scenario::CalibrateFit => 2.0 * c.shots_per_basis as f64 + 4000.0 * 20.0 * 20.0,
            };
        }
        Ok(total)
    }

    pub fn noisy(&self) -> bool {
        matches!(self.noise, NoiseChoice::Calibrated { .. })
    }
}

/// Circuit of the right shape for cost estimates; angles do not matter.
fn dummy(t: usize) -> MeraParams {
    MeraParams::finite(vec![UnitCell::from_slice(&[0.1; 6]); t])
}

fn shape(c: Circuit) -> f64 {
    (c.ops.len() * c.n_qubits) as f64
}
