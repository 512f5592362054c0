//! Per-cell computations. Each cell returns its CSV rows; the caller handles
//! files, manifests and ordering.

use crate::config::{Cell, NoiseChoice, Plan, Scenario};
use anyhow::{Context, Result};
use mera_sim::analysis::{
    concurrence, entanglement_report, exact_tfim_oracle, fidelity, renyi_entropy, single_site_entropy, trace_distance,
    EntanglementReport, Quantity,
};
use mera_sim::gates::{Basis, Circuit};
use mera_sim::linalg::{eigvalsh, project_to_density, CMat};
use mera_sim::mera::{build_boundary_cone, build_local_cone, MeraParams};
use mera_sim::noise::contrast::{fit_initial_phonons, simulate_p11};
use mera_sim::noise::photon::{
    fit_bright_counts, fit_dark_counts, fit_prep_error, mean_dark_photons, sample_counts, PhotonState,
};
use mera_sim::noise::{NoiseCalibration, NoiseModel, NoiseSources};
use mera_sim::optimizer::{critical_state, optimize_finite, TfimSpec};
use mera_sim::rng::{derive_seed, stream};
use mera_sim::shots::{
    bootstrap_ci, circuit_id, linear_inversion, mle_reconstruct, noise_breakdown, noisy_outcome_distributions,
    pauli_settings, run_shadow_shots, run_shots, sample_from_distributions, shadow_renyi2, BreakdownCase,
    BreakdownConfig, ShotDataset,
};
use rand::Rng as _;
use std::f64::consts::FRAC_PI_2;
use std::sync::Mutex;

pub const SPECTRA_HEADER: &[&str] = &["scenario", "g", "T", "seed", "source", "index", "lambda", "zeta", "parity"];

pub fn header(s: Scenario) -> &'static [&'static str] {
    match s {
        Scenario::SweepG => &[
            "scenario",
            "g",
            "T",
            "seed",
            "cell_seed",
            "shots_per_basis",
            "noise",
            "energy",
            "energy_exact",
            "x",
            "x_exact",
            "z",
            "z_exact",
            "xx",
            "xx_exact",
            "yy",
            "zz",
            "zz_exact",
            "s1",
            "concurrence",
            "x_meas",
            "z_meas",
            "xx_meas",
            "zz_meas",
        ],
        Scenario::ScalingCritical | Scenario::ScalingGapped => &[
            "scenario",
            "g",
            "T",
            "seed",
            "cell_seed",
            "shots_per_basis",
            "noise",
            "n_qubits",
            "n_xx",
            "s2_ideal",
            "zeta0_ideal",
            "zeta1_ideal",
            "gap_ideal",
            "parity0_ideal",
            "parity1_ideal",
            "s2_meas",
            "zeta0_meas",
            "zeta1_meas",
            "gap_meas",
            "parity0_meas",
            "parity1_meas",
            "infidelity",
            "s2_ci_lo",
            "s2_ci_hi",
        ],
        Scenario::Tomography => &[
            "scenario",
            "g",
            "T",
            "seed",
            "cell_seed",
            "shots_per_basis",
            "noise",
            "method",
            "fidelity",
            "trace_distance",
            "s2",
            "s2_ideal",
            "zeta0",
            "iterations",
            "log_likelihood",
            "s2_ci_lo",
            "s2_ci_hi",
        ],
        Scenario::NoiseBreakdown => &[
            "scenario",
            "g",
            "T",
            "seed",
            "cell_seed",
            "shots_per_basis",
            "trials",
            "realizations",
            "case",
            "zeta0_ideal",
            "zeta0_mean",
            "zeta0_sd",
            "infidelity_mean",
            "infidelity_sd",
        ],
        Scenario::CalibrateFit => {
            &["scenario", "g", "T", "seed", "cell_seed", "parameter", "injected", "fitted", "rel_error"]
        }
    }
}

pub fn has_spectra(s: Scenario) -> bool {
    matches!(s, Scenario::ScalingCritical | Scenario::ScalingGapped)
}

#[derive(Debug, Default)]
pub struct CellOutput {
    pub rows: Vec<Vec<String>>,
    pub spectra: Vec<Vec<String>>,
    /// Extra files relative to the scenario directory.
    pub files: Vec<(String, String)>,
}

pub struct Runner<'a> {
    pub plan: &'a Plan,
    critical: Mutex<Option<MeraParams>>,
}

fn f(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

pub fn cell_seed(plan: &Plan, cell: &Cell) -> u64 {
    derive_seed(plan.seed, &format!("{}/{}", plan.scenario.name(), cell.label()))
}

impl<'a> Runner<'a> {
    pub fn new(plan: &'a Plan) -> Self {
        Self { plan, critical: Mutex::new(None) }
    }

    /// g = 1 uses the scale-invariant critical state with an optimized top;
    /// every other field is optimized at the requested depth.
    fn state(&self, g: f64, t: usize) -> Result<MeraParams> {
        if (g - 1.0).abs() < 1e-12 {
            let mut c = self.critical.lock().expect("critical-state lock");
            if c.is_none() {
                *c = Some(critical_state(&self.plan.optimizer)?);
            }
            return Ok(c.clone().expect("set above"));
        }
        Ok(optimize_finite(&TfimSpec::new(g)?, t, &self.plan.optimizer)?.params)
    }

    fn model(&self) -> NoiseModel {
        match &self.plan.noise {
            NoiseChoice::Off => NoiseModel::new(NoiseCalibration::reference(), NoiseSources::none()),
            NoiseChoice::Calibrated { cal, .. } => NoiseModel::new(cal.clone(), NoiseSources::all()),
        }
    }

    /// Counts drawn from the noise-averaged outcome distributions.
    fn sampled(&self, circuit: &Circuit, settings: &[Vec<Basis>], shots: u64, seed: u64) -> Result<ShotDataset> {
        let dists = noisy_outcome_distributions(
            circuit,
            &self.model(),
            settings,
            self.plan.realizations,
            derive_seed(seed, "noise"),
        )?;
        Ok(sample_from_distributions(&circuit_id(circuit), settings, &dists, shots, seed, &mut stream(seed, 0)))
    }

    fn prefix(&self, cell: &Cell, seed: u64) -> Vec<String> {
        vec![
            self.plan.scenario.name().into(),
            cell.g_field(),
            cell.t_field(),
            self.plan.seed.to_string(),
            seed.to_string(),
        ]
    }

    pub fn run(&self, cell: &Cell) -> Result<CellOutput> {
        let seed = cell_seed(self.plan, cell);
        match self.plan.scenario {
            Scenario::SweepG => self.sweep(cell, seed),
            Scenario::ScalingCritical | Scenario::ScalingGapped => self.scaling(cell, seed),
            Scenario::Tomography => self.tomography(cell, seed),
            Scenario::NoiseBreakdown => self.breakdown(cell, seed),
            Scenario::CalibrateFit => self.calibrate(cell, seed),
        }
        .with_context(|| format!("cell {}", cell.label()))
    }

    fn sweep(&self, cell: &Cell, seed: u64) -> Result<CellOutput> {
        let (g, t) = (cell.g.expect("grid cell"), cell.t.expect("grid cell"));
        let params = optimize_finite(&TfimSpec::new(g)?, t, &self.plan.optimizer)?.params;
        let o = mera_sim::optimizer::local_observables(&params, t)?;
        let exact = |q| exact_tfim_oracle(g, q);
        let mut row = self.prefix(cell, seed);
        row.extend([cell.shots_per_basis.to_string(), self.plan.noise.label().to_string()]);
        row.extend(
            [
                o.energy(g),
                exact(Quantity::EnergyDensity),
                o.x,
                exact(Quantity::MagnetizationX),
                o.z,
                exact(Quantity::Z),
                o.xx,
                exact(Quantity::Xx),
                o.yy,
                o.zz,
                exact(Quantity::Zz),
                single_site_entropy(o.x, o.z)?,
                concurrence(o.xx, o.yy, o.zz, o.x, o.z)?,
            ]
            .map(f),
        );
        if cell.shots_per_basis > 0 {
            let c = build_local_cone(&params, t)?;
            let settings = vec![vec![Basis::X, Basis::X], vec![Basis::Z, Basis::Z]];
            let ds = self.sampled(&c, &settings, cell.shots_per_basis, seed)?;
            let moments = |k: usize| {
                let n = ds.groups[k].total() as f64;
                let p: Vec<f64> = ds.groups[k].counts.iter().map(|&c| c as f64 / n).collect();
                ((p[0] + p[1] - p[2] - p[3] + p[0] - p[1] + p[2] - p[3]) / 2.0, p[0] - p[1] - p[2] + p[3])
            };
            let ((x, xx), (z, zz)) = (moments(0), moments(1));
            row.extend([x, z, xx, zz].map(f));
        } else {
            row.extend(std::iter::repeat_n(String::new(), 4));
        }
        Ok(CellOutput { rows: vec![row], ..Default::default() })
    }

    fn spectrum_rows(&self, cell: &Cell, source: &str, r: &EntanglementReport) -> Vec<Vec<String>> {
        let parity = r.parity.clone().unwrap_or_default();
        r.spectrum
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                vec![
                    self.plan.scenario.name().into(),
                    cell.g_field(),
                    cell.t_field(),
                    self.plan.seed.to_string(),
                    source.into(),
                    i.to_string(),
                    f(l),
                    f(r.zeta[i]),
                    opt(parity.get(i).copied()),
                ]
            })
            .collect()
    }

    fn scaling(&self, cell: &Cell, seed: u64) -> Result<CellOutput> {
        let (g, t) = (cell.g.expect("grid cell"), cell.t.expect("grid cell"));
        let params = self.state(g, t)?;
        let c = build_boundary_cone(&params, t)?;
        let ideal = c.run().reduced(&c.measured_qubits);
        let ri = entanglement_report(&ideal, true)?;
        let mut out = CellOutput { spectra: self.spectrum_rows(cell, "ideal", &ri), ..Default::default() };
        let mut row = self.prefix(cell, seed);
        row.extend([cell.shots_per_basis.to_string(), self.plan.noise.label().to_string()]);
        row.extend([c.n_qubits.to_string(), c.entangling_count().to_string()]);
        row.extend(report_fields(&ri));
        if cell.shots_per_basis > 0 {
            let ds = self.sampled(&c, &pauli_settings(t)?, cell.shots_per_basis, seed)?;
            let rho = mle_reconstruct(&ds)?.rho;
            let rm = entanglement_report(&rho, true)?;
            row.extend(report_fields(&rm));
            row.push(f(1.0 - fidelity(&rho, &ideal)?));
            row.extend(self.s2_interval(&ds, seed)?);
            out.spectra.extend(self.spectrum_rows(cell, "measured", &rm));
        } else {
            row.extend(std::iter::repeat_n(String::new(), 9));
        }
        out.rows.push(row);
        Ok(out)
    }

    fn s2_interval(&self, ds: &ShotDataset, seed: u64) -> Result<[String; 2]> {
        if self.plan.bootstrap == 0 {
            return Ok([String::new(), String::new()]);
        }
        let est = |d: &ShotDataset| mle_reconstruct(d).and_then(|r| renyi_entropy(&r.rho, 2.0)).unwrap_or(f64::NAN);
        let (lo, hi) = bootstrap_ci(ds, est, self.plan.bootstrap, 0.95, derive_seed(seed, "bootstrap"))?;
        Ok([f(lo), f(hi)])
    }

    fn tomography(&self, cell: &Cell, seed: u64) -> Result<CellOutput> {
        let (g, t) = (cell.g.expect("grid cell"), cell.t.expect("grid cell"));
        let params = self.state(g, t)?;
        let c = build_boundary_cone(&params, t)?;
        let ideal = c.run().reduced(&c.measured_qubits);
        let s2_ideal = renyi_entropy(&ideal, 2.0)?;
        let model = self.plan.noise.calibration().map(|cal| NoiseModel::new(cal.clone(), NoiseSources::all()));
        let ds = run_shots(&c, model.as_ref(), &pauli_settings(t)?, cell.shots_per_basis as usize, seed)?;
        let mut out = CellOutput {
            files: vec![(format!("datasets/{}.jsonl", cell.label()), ds.to_jsonl())],
            ..Default::default()
        };
        let base = {
            let mut r = self.prefix(cell, seed);
            r.extend([cell.shots_per_basis.to_string(), self.plan.noise.label().to_string()]);
            r
        };
        let metrics = |rho: &CMat| -> Result<[String; 4]> {
            let lmax = eigvalsh(rho).into_iter().fold(0.0, f64::max);
            Ok([
                f(fidelity(rho, &ideal)?),
                f(trace_distance(rho, &ideal)?),
                f(renyi_entropy(rho, 2.0)?),
                f(-lmax.log2()),
            ])
        };
        let li = linear_inversion(&ds)?;
        let mut row = base.clone();
        row.push("linear_inversion".into());
        row.extend(metrics(&project_to_density(&li.rho))?);
        row.insert(row.len() - 1, f(s2_ideal));
        row.extend([li.iterations.to_string(), f(li.log_likelihood), String::new(), String::new()]);
        out.rows.push(row);

        let ml = mle_reconstruct(&ds)?;
        let mut row = base.clone();
        row.push("mle".into());
        row.extend(metrics(&ml.rho)?);
        row.insert(row.len() - 1, f(s2_ideal));
        row.extend([ml.iterations.to_string(), f(ml.log_likelihood)]);
        row.extend(self.s2_interval(&ds, seed)?);
        out.rows.push(row);

        let total = cell.shots_per_basis as usize * 3usize.pow(t as u32);
        let sh = run_shadow_shots(&c, model.as_ref(), total, derive_seed(seed, "shadow"))?;
        let mut row = base;
        row.push("shadow".into());
        row.extend([String::new(), String::new(), f(shadow_renyi2(&sh).unwrap_or(f64::NAN)), f(s2_ideal)]);
        row.extend(std::iter::repeat_n(String::new(), 5));
        out.rows.push(row);
        Ok(out)
    }

    fn breakdown(&self, cell: &Cell, seed: u64) -> Result<CellOutput> {
        let (g, t) = (cell.g.expect("grid cell"), cell.t.expect("grid cell"));
        let cal = self.plan.noise.calibration().expect("breakdown plans carry a calibration");
        let params = self.state(g, t)?;
        let c = build_boundary_cone(&params, t)?;
        let ideal = c.run().reduced(&c.measured_qubits);
        let zeta0 = -eigvalsh(&ideal).into_iter().fold(0.0, f64::max).log2();
        let cfg = BreakdownConfig {
            shots_per_basis: cell.shots_per_basis,
            trials: self.plan.trials,
            realizations: self.plan.realizations,
            seed,
        };
        let stats = noise_breakdown(&c, &ideal, cal, &BreakdownCase::standard(), &cfg)?;
        let rows = stats
            .into_iter()
            .map(|s| {
                let mut r = self.prefix(cell, seed);
                r.extend([
                    cell.shots_per_basis.to_string(),
                    s.trials.to_string(),
                    self.plan.realizations.to_string(),
                    s.case,
                ]);
                r.extend([zeta0, s.zeta0_mean, s.zeta0_sd, s.infidelity_mean, s.infidelity_sd].map(f));
                r
            })
            .collect();
        Ok(CellOutput { rows, ..Default::default() })
    }

    /// Simulate calibration experiments from the configured parameters and
    /// fit them back.
    fn calibrate(&self, cell: &Cell, seed: u64) -> Result<CellOutput> {
        let cal = self.plan.noise.calibration().expect("calibration plans carry a calibration");
        let shots = cell.shots_per_basis as usize;
        let tau = 1e-3;
        let bright = sample_counts(PhotonState::Bright, tau, cal, shots, derive_seed(seed, "bright"));
        let (eta_gamma, r_b) = fit_bright_counts(&bright, tau)?;
        let dark = sample_counts(PhotonState::Dark, tau, cal, shots, derive_seed(seed, "dark"));
        let r_d = fit_dark_counts(&dark, tau, eta_gamma)?;

        let taus: Vec<f64> = (1..=20).map(|k| k as f64 * 1e-4).collect();
        let sigma = vec![2e-4; taus.len()];
        let mut rng = stream(derive_seed(seed, "prep"), 0);
        let nbar = taus
            .iter()
            .map(|&t| -> Result<f64> {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                Ok(mean_dark_photons(t, cal.p, cal)? + 2e-4 * z)
            })
            .collect::<Result<Vec<_>>>()?;
        let (p, _) = fit_prep_error(&taus, &nbar, &sigma, cal)?;

        let ions = (6.min(cal.n_ions - 2), 8.min(cal.n_ions - 1));
        let p11 = simulate_p11(cal, ions, FRAC_PI_2, 20, 0.0, 4000, derive_seed(seed, "contrast"))?;
        let n0 = fit_initial_phonons(&p11, cal, ions, FRAC_PI_2, 0.0)?;

        let rows = [
            ("eta_gamma", cal.eta_gamma, eta_gamma),
            ("r_b", cal.r_b, r_b),
            ("r_d", cal.r_d, r_d),
            ("p", cal.p, p),
            ("n_bar_0", cal.n_bar_0, n0),
        ]
        .into_iter()
        .map(|(name, injected, fitted)| {
            let mut r = self.prefix(cell, seed);
            r.extend([name.to_string(), f(injected), f(fitted), f((fitted - injected) / injected)]);
            r
        })
        .collect();
        Ok(CellOutput { rows, ..Default::default() })
    }
}

fn report_fields(r: &EntanglementReport) -> Vec<String> {
    let parity = r.parity.clone().unwrap_or_default();
    vec![
        f(r.renyi2),
        f(r.zeta[0]),
        opt(r.zeta.get(1).copied()),
        f(r.schmidt_gap),
        opt(parity.first().copied()),
        opt(parity.get(1).copied()),
    ]
}
