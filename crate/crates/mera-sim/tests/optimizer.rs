use mera_sim::analysis::oracle;
use mera_sim::analysis::{renyi_entropy, scaling_fit};
use mera_sim::mera::channel::{local_density, steady_state};
use mera_sim::mera::{boundary_density, doubled_map, layer_channel, MeraParams, TopAngles, UnitCell};
use mera_sim::optimizer::*;
use num_complex::Complex64;
use std::sync::OnceLock;

fn critical() -> &'static OptimizeResult {
    static R: OnceLock<OptimizeResult> = OnceLock::new();
    R.get_or_init(|| optimize_scale_invariant(&TfimSpec::new(1.0).unwrap(), &OptimizerConfig::default()).unwrap())
}

#[test]
fn energy_density_limits() {
    let plus = UnitCell {
        iso_ry_left: std::f64::consts::FRAC_PI_2,
        iso_ry_right: std::f64::consts::FRAC_PI_2,
        ..UnitCell::identity()
    };
    let p = MeraParams::finite(vec![plus]);
    assert!((energy_density(&p, &TfimSpec::new(0.0).unwrap(), 1).unwrap() + 1.0).abs() < 1e-12);
    let p = MeraParams::identity_finite(2);
    assert!((energy_density(&p, &TfimSpec::new(10.0).unwrap(), 2).unwrap() + 10.0).abs() < 1e-12);
    assert!(TfimSpec::new(-0.1).is_err());
}

#[test]
fn config_validation() {
    let bad = OptimizerConfig { restarts: 0, ..Default::default() };
    assert!(optimize_finite(&TfimSpec::new(1.0).unwrap(), 1, &bad).is_err());
    let bad = OptimizerConfig { tolerance: 0.0, ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn gapped_energy_and_symmetry() {
    let spec = TfimSpec::new(2.0).unwrap();
    let r = optimize_finite(&spec, 2, &OptimizerConfig::default()).unwrap();
    let exact = oracle::energy_density(2.0);
    assert!(r.energy >= exact - 1e-9);
    assert!(r.energy - exact < 5e-3, "{} vs {exact}", r.energy);
    // Z2-symmetric phase: the Ry angles stay at zero
    for c in &r.params.layers {
        assert!(c.iso_ry_left.abs() < 1e-2 && c.iso_ry_right.abs() < 1e-2, "{c:?}");
    }
    assert!(r.trace.windows(2).all(|w| w[1].energy <= w[0].energy));
    let x = local_observables(&r.params, 2).unwrap().x;
    assert!(x.abs() < 1e-2);
}

#[test]
fn ordered_phase_breaks_symmetry() {
    let g = 0.5;
    let r = optimize_finite(&TfimSpec::new(g).unwrap(), 2, &OptimizerConfig::default()).unwrap();
    assert!(r.params.layers.iter().any(|c| c.iso_ry_left.abs() > 0.05 || c.iso_ry_right.abs() > 0.05));
    let x = local_observables(&r.params, 2).unwrap().x.abs();
    assert!((x - oracle::magnetization_x(g)).abs() < 0.02, "{x}");
}

#[test]
fn determinism_and_warm_start_monotonicity() {
    let spec = TfimSpec::new(1.0).unwrap();
    let cfg = OptimizerConfig { restarts: 2, max_evals: 3000, seed: 11, ..Default::default() };
    let a = optimize_finite(&spec, 2, &cfg).unwrap();
    let b = optimize_finite(&spec, 2, &cfg).unwrap();
    assert_eq!(a.params.to_vec(), b.params.to_vec());
    let one = optimize_finite(&spec, 1, &cfg).unwrap();
    let two = optimize_finite_from(&spec, 2, &cfg, Some(&one.params)).unwrap();
    assert!(two.energy <= one.energy + 1e-6);
    assert!(two.energy >= oracle::energy_density(1.0) - 1e-9);
}

#[test]
fn lbfgs_agrees_with_nelder_mead() {
    let spec = TfimSpec::new(1.5).unwrap();
    let nm = optimize_finite(&spec, 1, &OptimizerConfig::default()).unwrap();
    let cfg = OptimizerConfig { method: Method::FiniteDiffLbfgs, ..Default::default() };
    let lb = optimize_finite(&spec, 1, &cfg).unwrap();
    assert!((nm.energy - lb.energy).abs() < 1e-6, "{} {}", nm.energy, lb.energy);
}

#[test]
fn trace_csv_has_expected_columns() {
    let spec = TfimSpec::new(1.2).unwrap();
    let cfg = OptimizerConfig { restarts: 1, max_evals: 200, ..Default::default() };
    let r = optimize_finite(&spec, 1, &cfg).unwrap();
    assert!(!r.converged);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    r.write_trace(&path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("eval_index,energy,wall_time_s\n"));
    assert!(text.lines().count() > 100);
}

#[test]
fn scale_invariant_critical_point() {
    let r = critical();
    assert!((r.energy - oracle::energy_density(1.0)).abs() < 5e-3);
    let d0 = doubled_map(&r.params).unwrap().dominant().unwrap().re;
    let c = -8.0 * d0.log2();
    assert!((0.45..=0.50).contains(&c), "{c}");
    let again = refine(&r.params, &TfimSpec::new(1.0).unwrap(), 1, &OptimizerConfig::default()).unwrap();
    assert!(r.energy - again.energy < 1e-9);
}

#[test]
fn top_local_optimization() {
    let cfg = OptimizerConfig::default();
    let id = layer_channel(&MeraParams::scale_invariant(UnitCell::identity())).unwrap();
    let top = optimize_top_local(&id, &cfg).unwrap();
    let sd = id.spectrum().unwrap();
    assert!(top_local_objective(&sd, &top.state()) < 1e-12);

    let r = critical();
    let ch = layer_channel(&r.params).unwrap();
    let sd = ch.spectrum().unwrap();
    let top = optimize_top_local(&ch, &cfg).unwrap();
    let psi = top.state();
    let zero = TopAngles::default().state();
    assert!(top_local_objective(&sd, &psi) <= top_local_objective(&sd, &zero));
    let phase = Complex64::from_polar(1.0, 0.7);
    let rotated: Vec<Complex64> = psi.iter().map(|a| a * phase).collect();
    assert!((top_local_objective(&sd, &psi) - top_local_objective(&sd, &rotated)).abs() < 1e-15);

    let ss = steady_state(&ch).unwrap();
    let error = |top: Option<TopAngles>| {
        let stack = local_density(&r.params.clone().with_top(top), 5).unwrap();
        ["XX", "ZI", "IZ", "YY", "ZZ", "XI"]
            .iter()
            .map(|op| {
                let m = mera_sim::linalg::pauli_string(op);
                (mera_sim::linalg::expect(&stack, &m) - mera_sim::linalg::expect(&ss, &m)).abs()
            })
            .fold(0.0, f64::max)
    };
    let (opt, plain) = (error(Some(top)), error(None));
    assert!(opt < 5e-3 && opt < 0.2 * plain, "{opt} vs {plain}");
}

#[test]
fn top_boundary_optimization() {
    let r = critical();
    let dm = doubled_map(&r.params).unwrap();
    let d0 = dm.dominant().unwrap().re;
    let top = optimize_top_boundary(&dm, &OptimizerConfig::default()).unwrap();
    let p = r.params.clone().with_top(Some(top));
    let s: Vec<f64> = (1..=5).map(|t| renyi_entropy(&boundary_density(&p, t).unwrap(), 2.0).unwrap()).collect();
    for t in 2..=5 {
        let inc = s[t - 1] - s[t - 2];
        assert!((inc / -d0.log2() - 1.0).abs() < 0.1, "T={t}: {inc}");
    }
    let pts: Vec<(f64, f64)> = (2..=5).map(|t| (t as f64, s[t - 1])).collect();
    let fit = scaling_fit(&pts).unwrap();
    assert!(fit.residuals.iter().all(|r| r.abs() < 0.02));

    let id = MeraParams::scale_invariant(UnitCell::identity());
    let top = optimize_top_boundary(&doubled_map(&id).unwrap(), &OptimizerConfig::default()).unwrap();
    let p = id.with_top(Some(top));
    for t in 1..=4 {
        assert!(renyi_entropy(&boundary_density(&p, t).unwrap(), 2.0).unwrap().abs() < 1e-9);
    }
}

#[test]
fn default_depth_schedule() {
    assert_eq!(default_depth(2.0), 2);
    assert_eq!(default_depth(0.6), 3);
    assert_eq!(default_depth(0.8), 4);
    assert_eq!(default_depth(1.0), 5);
}
