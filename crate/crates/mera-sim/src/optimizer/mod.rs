//! Variational optimization of MERA angles for the transverse-field Ising chain.

pub mod minimize;

use crate::error::{Error, Result};
use crate::linalg::{kron, pauli, projector, vectorize, CMat, SpectralDecomposition};
use crate::mera::channel::{averaged_window, window_fixed_point, DoubledMap, LayerChannel};
use crate::mera::{Flavor, MeraParams, TopAngles, UnitCell};
use crate::par::*;
use crate::rng::stream;
use minimize::{lbfgs_fd, nelder_mead, Minimum, TracePoint};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// H = −Σ XᵢXᵢ₊₁ − g Σ Zᵢ
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfimSpec {
    pub g: f64,
}

impl TfimSpec {
    pub fn new(g: f64) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidInput(format!("transverse field must be non-negative, got {g}")));
        }
        Ok(Self { g })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NelderMead,
    FiniteDiffLbfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { method: Method::NelderMead, max_evals: 20_000, tolerance: 1e-9, restarts: 5, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("optimizer tolerance must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("optimizer needs at least one restart".into()));
        }
        if self.max_evals == 0 {
            return Err(Error::Config("optimizer max_evals must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub params: MeraParams,
    pub energy: f64,
    pub evals: usize,
    /// False when a restart ran out of evaluations before converging.
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

impl OptimizeResult {
    /// Columns (eval_index, energy, wall_time_s).
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["eval_index", "energy", "wall_time_s"])?;
        for p in &self.trace {
            w.write_record(&[p.eval_index.to_string(), format!("{:.15e}", p.energy), format!("{:.6}", p.wall_time_s)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Translation-averaged local expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalObservables {
    pub x: f64,
    pub z: f64,
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
}

impl LocalObservables {
    pub fn energy(&self, g: f64) -> f64 {
        -self.xx - g * self.z
    }
}

fn window(params: &MeraParams, t: usize) -> Result<CMat> {
    match params.flavor {
        Flavor::FiniteT => averaged_window(params, t),
        Flavor::ScaleInvariant => {
            params.validate()?;
            window_fixed_point(&params.layers[0])
        }
    }
}

fn window_observables(w: &CMat) -> LocalObservables {
    let i = pauli('I');
    let on = |a: char, b: char| kron(&kron(&pauli(a), &pauli(b)), &i);
    let e = |op: CMat| (w * op).trace().re;
    LocalObservables {
        x: e(on('X', 'I')),
        z: e(on('Z', 'I')),
        xx: e(on('X', 'X')),
        yy: e(on('Y', 'Y')),
        zz: e(on('Z', 'Z')),
    }
}

/// Site- and bond-averaged observables. The scale-invariant flavor uses the
/// fixed point of the averaged window map and ignores `t`.
pub fn local_observables(params: &MeraParams, t: usize) -> Result<LocalObservables> {
    Ok(window_observables(&window(params, t)?))
}

/// Energy per site ⟨−XX⟩ − g⟨Z⟩, averaged over all bonds and sites.
pub fn energy_density(params: &MeraParams, spec: &TfimSpec, t: usize) -> Result<f64> {
    Ok(local_observables(params, t)?.energy(spec.g))
}

/// Default depth as a function of distance from criticality.
pub fn default_depth(g: f64) -> usize {
    let d = (g - 1.0).abs();
    if d >= 0.5 {
        2
    } else if d >= 0.3 {
        3
    } else if d >= 0.15 {
        4
    } else {
        5
    }
}

fn run_method(cfg: &OptimizerConfig, f: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> Minimum {
    match cfg.method {
        Method::NelderMead => nelder_mead(f, x0, 0.05 * PI, cfg.tolerance, cfg.max_evals),
        Method::FiniteDiffLbfgs => lbfgs_fd(f, x0, cfg.tolerance, cfg.max_evals),
    }
}

fn uniform_angles(rng: &mut crate::rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-0.2 * PI..=0.2 * PI)).collect()
}

/// Best of restarts; ties go to the lower restart index.
fn best_of(mut runs: Vec<(usize, Minimum)>) -> (Minimum, bool, usize) {
    runs.sort_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)));
    let converged = runs.iter().all(|r| r.1.converged);
    let evals = runs.iter().map(|r| r.1.evals).sum();
    (runs.swap_remove(0).1, converged, evals)
}

fn optimize_vector(
    template: &MeraParams,
    spec: &TfimSpec,
    t: usize,
    cfg: &OptimizerConfig,
    warm: Option<Vec<f64>>,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    let n = template.to_vec().len();
    let objective = |x: &[f64]| energy_density(&template.from_vec(x), spec, t).unwrap_or(f64::INFINITY);
    let runs: Vec<(usize, Minimum)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r as u64);
            let x0 = match (&warm, r) {
                (Some(w), 0) => w.clone(),
                _ => uniform_angles(&mut rng, n),
            };
            (r, run_method(cfg, objective, &x0))
        })
        .collect();
    let (best, converged, evals) = best_of(runs);
    Ok(OptimizeResult { params: template.from_vec(&best.x), energy: best.f, evals, converged, trace: best.trace })
}

/// Optimize a T-layer finite MERA, warm-started layer by layer from T = 1.
pub fn optimize_finite(spec: &TfimSpec, t: usize, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    if t == 0 {
        return Err(Error::InvalidInput("T must be at least 1".into()));
    }
    let mut prev: Option<MeraParams> = None;
    let mut result = None;
    for depth in 1..=t {
        let r = optimize_finite_from(spec, depth, cfg, prev.as_ref())?;
        prev = Some(r.params.clone());
        result = Some(r);
    }
    Ok(result.expect("t ≥ 1"))
}

/// One depth of the warm-start chain: the new top layer starts at identity.
pub fn optimize_finite_from(
    spec: &TfimSpec,
    t: usize,
    cfg: &OptimizerConfig,
    previous: Option<&MeraParams>,
) -> Result<OptimizeResult> {
    let template = MeraParams::identity_finite(t);
    let warm = match previous {
        Some(p) if p.flavor == Flavor::FiniteT && p.layers.len() + 1 == t => {
            let mut layers = p.layers.clone();
            layers.push(UnitCell::identity());
            Some(MeraParams::finite(layers).to_vec())
        }
        Some(_) => return Err(Error::InvalidInput("warm start must be a (T−1)-layer finite MERA".into())),
        None => None,
    };
    optimize_vector(&template, spec, t, cfg, warm)
}

/// Optimize a single shared cell with the energy of the fixed-point window.
pub fn optimize_scale_invariant(spec: &TfimSpec, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    optimize_vector(&MeraParams::scale_invariant(UnitCell::identity()), spec, 1, cfg, None)
}

/// Re-run an optimization from given parameters (no restarts).
pub fn refine(params: &MeraParams, spec: &TfimSpec, t: usize, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    let one = OptimizerConfig { restarts: 1, ..cfg.clone() };
    let template = params.clone();
    optimize_vector(&template, spec, t, &one, Some(params.to_vec()))
}

fn minimize_top(cfg: &OptimizerConfig, objective: impl Fn(&[f64]) -> f64 + Sync) -> Result<TopAngles> {
    cfg.validate()?;
    let runs: Vec<(usize, Minimum)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed ^ 0x70_70, r as u64);
            let x0 = if r == 0 { vec![0.0; 3] } else { uniform_angles(&mut rng, 3) };
            (r, run_method(cfg, &objective, &x0))
        })
        .collect();
    let (best, _, _) = best_of(runs);
    Ok(TopAngles::from_slice(&best.x))
}

/// Σ_{i>0} |m_i⟨⟨ℓ_i|ρ′⟩⟩|² for the pure top state `psi`.
pub fn top_local_objective(sd: &SpectralDecomposition, psi: &[C64]) -> f64 {
    let v = vectorize(&projector(psi));
    (1..sd.len()).map(|i| (sd.eigenvalues[i] * sd.left(i).dotc(&v)).norm_sqr()).sum()
}

/// Top angles that suppress the subleading modes of the layer channel.
pub fn optimize_top_local(channel: &LayerChannel, cfg: &OptimizerConfig) -> Result<TopAngles> {
    let sd = channel.spectrum()?;
    minimize_top(cfg, |x| top_local_objective(&sd, &TopAngles::from_slice(x).state()))
}

/// Σ_{i>0} |d_i⟨⟨𝟙|R_i⟩⟩⟨⟨L_i|φ,φ⟩⟩|² for the pure top state `psi`.
pub fn top_boundary_objective(sd: &SpectralDecomposition, psi: &[C64]) -> f64 {
    let phi = projector(psi);
    let pp = vectorize(&phi.kronecker(&phi));
    (1..sd.len())
        .map(|i| {
            let r = sd.right(i);
            let tr: C64 = (0..16).map(|k| r[k * 16 + k]).sum();
            (sd.eigenvalues[i] * tr * sd.left(i).dotc(&pp)).norm_sqr()
        })
        .sum()
}

/// Top angles that suppress the subleading modes of the doubled map.
pub fn optimize_top_boundary(dmap: &DoubledMap, cfg: &OptimizerConfig) -> Result<TopAngles> {
    let sd = dmap.spectrum()?;
    minimize_top(cfg, |x| top_boundary_objective(&sd, &TopAngles::from_slice(x).state()))
}

/// Scale-invariant optimum at g = 1 with the top chosen by
/// [`optimize_top_boundary`]; the state used for critical scaling runs.
pub fn critical_state(cfg: &OptimizerConfig) -> Result<MeraParams> {
    let r = optimize_scale_invariant(&TfimSpec::new(1.0)?, cfg)?;
    let top = optimize_top_boundary(&crate::mera::doubled_map(&r.params)?, cfg)?;
    Ok(r.params.with_top(Some(top)))
}
