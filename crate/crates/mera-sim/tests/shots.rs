use mera_sim::analysis::{fidelity, trace_distance};
use mera_sim::gates::{Basis, Circuit, GateOp};
use mera_sim::linalg::{eigvalsh, projector, CMat};
use mera_sim::mera::{build_boundary_cone, build_local_cone};
use mera_sim::noise::{NoiseCalibration, NoiseModel, NoiseSource, NoiseSources};
use mera_sim::optimizer::{critical_state, default_depth, optimize_finite, OptimizerConfig, TfimSpec};
use mera_sim::rng::stream;
use mera_sim::shots::*;
use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_PI_2;

fn ry(q: usize, t: f64) -> GateOp {
    GateOp::r(q, t, FRAC_PI_2)
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn check_density(rho: &CMat) {
    assert!((rho.trace().re - 1.0).abs() < 1e-10);
    assert!(eigvalsh(rho).iter().all(|&v| v > -1e-10));
}

#[test]
fn ideal_zero_state_reads_zeros() {
    let c = Circuit::new(3, vec![], vec![0, 2]).unwrap();
    let ds = run_shots(&c, None, &[vec![Basis::Z, Basis::Z]], 500, 1).unwrap();
    assert_eq!(ds.groups[0].counts, vec![500, 0, 0, 0]);
    assert_eq!(ds.n_qubits, 2);
    assert!(run_shots(&c, None, &[vec![Basis::Z]], 10, 1).is_err());
}

#[test]
fn spam_only_dark_rate() {
    let cal = NoiseCalibration::reference();
    let model = NoiseModel::new(cal.clone(), NoiseSources::only(NoiseSource::Spam));
    let c = Circuit::new(1, vec![], vec![0]).unwrap();
    let n = 1_000_000;
    let ds = run_shots(&c, Some(&model), &[vec![Basis::Z]], n, 3).unwrap();
    let rate = ds.groups[0].counts[1] as f64 / n as f64;
    let want = cal.p * (1.0 - (cal.p_b - cal.p)) + (1.0 - cal.p) * (cal.p_d - cal.p);
    assert!((want - 1.6e-3).abs() < 1e-5);
    let sd = (want * (1.0 - want) / n as f64).sqrt();
    assert!((rate - want).abs() < 3.0 * sd, "{rate} vs {want}");
}

#[test]
fn datasets_are_deterministic() {
    let c = Circuit::new(2, vec![ry(0, 0.7), GateOp::xx(0, 1, 0.9)], vec![0, 1]).unwrap();
    let model = NoiseModel::new(NoiseCalibration::reference(), NoiseSources::all());
    let bases = pauli_settings(2).unwrap();
    let a = run_shots(&c, Some(&model), &bases, 300, 42).unwrap();
    let b = run_shots(&c, Some(&model), &bases, 300, 42).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, run_shots(&c, Some(&model), &bases, 300, 43).unwrap());
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| run_shots(&c, Some(&model), &bases, 300, 42).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let three = pool.install(|| run_shots(&c, Some(&model), &bases, 300, 42).unwrap());
        assert_eq!(one, a);
        assert_eq!(three, a);
    }
}

#[test]
fn jsonl_round_trip_and_errors() {
    let c = Circuit::new(2, vec![ry(0, 1.1), GateOp::xx(0, 1, 0.4)], vec![1, 0]).unwrap();
    let ds = run_shots(&c, None, &pauli_settings(2).unwrap(), 100, 5).unwrap();
    let text = ds.to_jsonl();
    assert!(text.lines().next().unwrap().contains("\"seed\":5"));
    assert!(text.lines().nth(1).unwrap().contains("\"basis\":\"XX\""));
    assert_eq!(ShotDataset::from_jsonl(&text).unwrap(), ds);
    let broken = text.replacen("\"basis\":\"XY\"", "\"basis\":\"XQ\"", 1);
    assert!(ShotDataset::from_jsonl(&broken).is_err());
    let short = text.replacen("\"00\":", "\"0\":", 1);
    let err = ShotDataset::from_jsonl(&short).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn noisy_shots_follow_averaged_distribution() {
    let c = Circuit::new(3, vec![ry(0, 1.0), GateOp::xx(0, 1, 1.2), GateOp::xx(1, 2, -0.8)], vec![0, 2]).unwrap();
    let model = NoiseModel::new(NoiseCalibration::reference(), NoiseSources::all());
    let bases = vec![vec![Basis::X, Basis::Z], vec![Basis::Y, Basis::Y]];
    let avg = noisy_outcome_distributions(&c, &model, &bases, 20_000, 8).unwrap();
    let n = 40_000;
    let ds = run_shots(&c, Some(&model), &bases, n, 9).unwrap();
    for (g, p) in ds.groups.iter().zip(&avg) {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Pearson statistic, 3 degrees of freedom
        let chi2: f64 = g.counts.iter().zip(p).map(|(&o, &q)| (o as f64 - n as f64 * q).powi(2) / (n as f64 * q)).sum();
        assert!(chi2 < 16.3, "χ² = {chi2}");
    }
}

#[test]
fn full_noise_depresses_order_parameter() {
    let g = 0.2;
    let t = default_depth(g);
    let params = optimize_finite(&TfimSpec::new(g).unwrap(), t, &OptimizerConfig::default()).unwrap().params;
    let c = build_local_cone(&params, t).unwrap();
    let x_of = |p: &[f64]| p[0] + p[1] - p[2] - p[3];
    let setting = vec![vec![Basis::X, Basis::Z]];
    let ideal = noisy_outcome_distributions(
        &c,
        &NoiseModel::new(NoiseCalibration::reference(), NoiseSources::none()),
        &setting,
        1,
        0,
    )
    .unwrap();
    let noisy = noisy_outcome_distributions(
        &c,
        &NoiseModel::new(NoiseCalibration::reference(), NoiseSources::all()),
        &setting,
        4000,
        1,
    )
    .unwrap();
    let (xi, xn) = (x_of(&ideal[0]), x_of(&noisy[0]));
    assert!(xi.abs() > 0.9, "ideal {xi}");
    assert!(xn.abs() < xi.abs() - 0.005, "noisy {xn} vs ideal {xi}");
}

#[test]
fn shadow_pure_and_mixed() {
    let zero = Circuit::new(1, vec![], vec![0]).unwrap();
    let s = shadow_renyi2(&run_shadow_shots(&zero, None, 10_000, 1).unwrap()).unwrap();
    assert!(s.abs() < 0.02, "{s}");
    let bell = Circuit::new(2, vec![GateOp::xx(0, 1, FRAC_PI_2)], vec![0]).unwrap();
    let s = shadow_renyi2(&run_shadow_shots(&bell, None, 10_000, 2).unwrap()).unwrap();
    assert!((s - 1.0).abs() < 0.05, "{s}");
}

#[test]
fn shadow_matches_exact_purity_on_critical_cone() {
    let params = critical_state(&OptimizerConfig::default()).unwrap();
    let c = build_boundary_cone(&params, 3).unwrap();
    assert_eq!(c.measured_qubits.len(), 3);
    let rho = c.run().reduced(&c.measured_qubits);
    let exact = (&rho * &rho).trace().re;
    let est: Vec<f64> =
        (0..100).map(|k| shadow_purity(&run_shadow_shots(&c, None, 20_000, 100 + k).unwrap()).unwrap()).collect();
    let (m, sd) = mean_sd(&est);
    assert!((m - exact).abs() < 2.0 * sd, "{m} ± {sd} vs {exact}");
    assert!((m - exact).abs() < 3.0 * sd / 10.0, "{m} ± {sd} vs {exact}");
}

fn plus_dataset(shots: usize, seed: u64) -> (ShotDataset, CMat) {
    let c = Circuit::new(1, vec![ry(0, FRAC_PI_2)], vec![0]).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (
        run_shots(&c, None, &pauli_settings(1).unwrap(), shots, seed).unwrap(),
        projector(&[C64::new(s, 0.0), C64::new(s, 0.0)]),
    )
}

#[test]
fn mle_recovers_plus_state() {
    let (ds, target) = plus_dataset(10_000, 4);
    let opt = MleOptions { record_history: true, ..Default::default() };
    let r = mle_reconstruct_with(&ds, &opt).unwrap();
    check_density(&r.rho);
    assert!(fidelity(&r.rho, &target).unwrap() >= 0.999);
    assert_eq!(r.method, Method::Mle);
    assert!(r.iterations > 0 && r.iterations <= 10_000);
    assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn mle_on_maximally_mixed_qubit() {
    let c = Circuit::new(2, vec![GateOp::xx(0, 1, FRAC_PI_2)], vec![1]).unwrap();
    let ds = run_shots(&c, None, &pauli_settings(1).unwrap(), 10_000, 6).unwrap();
    let r = mle_reconstruct(&ds).unwrap();
    check_density(&r.rho);
    let half = CMat::identity(2, 2) * C64::new(0.5, 0.0);
    assert!(trace_distance(&r.rho, &half).unwrap() < 0.01);
}

#[test]
fn incomplete_data_is_rejected() {
    let c = Circuit::new(2, vec![], vec![0, 1]).unwrap();
    let ds = run_shots(&c, None, &[vec![Basis::Z, Basis::Z], vec![Basis::X, Basis::X]], 100, 1).unwrap();
    assert!(matches!(mle_reconstruct(&ds), Err(mera_sim::Error::NotInformationallyComplete(_))));
    assert!(linear_inversion(&ds).is_err());
}

/// Full-rank two-qubit state: an entangled pure state mixed with a diagonal.
fn full_rank_state() -> (Circuit, CMat) {
    let c = Circuit::new(
        4,
        vec![ry(0, 0.9), GateOp::xx(0, 1, 0.7), GateOp::xx(1, 2, 0.5), GateOp::xx(0, 3, 0.6)],
        vec![0, 1],
    )
    .unwrap();
    let rho = c.run().reduced(&c.measured_qubits);
    (c, rho)
}

#[test]
fn mle_median_fidelity_on_full_rank_state() {
    let (c, rho) = full_rank_state();
    assert!(eigvalsh(&rho).iter().all(|&v| v > 1e-3));
    let bases = pauli_settings(2).unwrap();
    let mut f: Vec<f64> = (0..100)
        .map(|k| {
            let ds = run_shots(&c, None, &bases, 10_000, 1000 + k).unwrap();
            let r = mle_reconstruct(&ds).unwrap();
            check_density(&r.rho);
            fidelity(&r.rho, &rho).unwrap()
        })
        .collect();
    f.sort_by(f64::total_cmp);
    assert!(f[50] >= 0.995, "median {}", f[50]);
}

#[test]
fn linear_inversion_agrees_with_mle_at_high_counts() {
    let (c, _) = full_rank_state();
    let ds = run_shots(&c, None, &pauli_settings(2).unwrap(), 100_000, 77).unwrap();
    let li = linear_inversion(&ds).unwrap();
    let ml = mle_reconstruct(&ds).unwrap();
    assert!(trace_distance(&li.rho, &ml.rho).unwrap() < 0.01);
    assert!(ml.log_likelihood >= li.log_likelihood - 1e-6 * li.log_likelihood.abs());
}

#[test]
fn shot_noise_scales_as_inverse_sqrt() {
    let c = Circuit::new(1, vec![ry(0, 1.2)], vec![0]).unwrap();
    let p = pauli_settings(1).unwrap();
    let sd_at = |n: usize| {
        let v: Vec<f64> = (0..1000)
            .map(|k| {
                let ds = run_shots(&c, None, &p[2..], n, k).unwrap();
                let g = &ds.groups[0];
                (g.counts[0] as f64 - g.counts[1] as f64) / n as f64
            })
            .collect();
        mean_sd(&v).1
    };
    let s: Vec<f64> = [1_000, 10_000, 100_000].iter().map(|&n| sd_at(n) * (n as f64).sqrt()).collect();
    for w in s.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{s:?}");
    }
}

fn coin_dataset(n: u64, heads: u64) -> ShotDataset {
    ShotDataset {
        circuit_id: "coin".into(),
        n_qubits: 1,
        seed: 0,
        groups: vec![ShotGroup { basis: vec![Basis::Z], counts: vec![heads, n - heads] }],
    }
}

fn z_mean(ds: &ShotDataset) -> f64 {
    let g = &ds.groups[0];
    (g.counts[0] as f64 - g.counts[1] as f64) / g.total() as f64
}

#[test]
fn bootstrap_constant_and_width() {
    let ds = coin_dataset(10_000, 6_000);
    assert_eq!(bootstrap_ci(&ds, |_| 0.25, 200, 0.95, 1).unwrap(), (0.25, 0.25));
    assert!(bootstrap_ci(&ds, z_mean, 50, 0.95, 1).is_err());
    let (lo, hi) = bootstrap_ci(&ds, z_mean, 2000, 0.95, 2).unwrap();
    let sigma = (1.0f64 - 0.2 * 0.2).sqrt();
    let want = 2.0 * 1.959964 * sigma / 100.0;
    assert!(((hi - lo) / want - 1.0).abs() < 0.15, "{} vs {want}", hi - lo);
    assert_eq!(bootstrap_ci(&ds, z_mean, 500, 0.9, 3).unwrap(), bootstrap_ci(&ds, z_mean, 500, 0.9, 3).unwrap());
}

#[test]
fn bootstrap_coverage() {
    use rand_distr::{Binomial, Distribution};
    let (n, p) = (400u64, 0.3);
    let truth = 2.0 * p - 1.0;
    let mut rng = stream(99, 0);
    let hits = (0..1000)
        .filter(|&k| {
            let heads = Binomial::new(n, p).unwrap().sample(&mut rng);
            let (lo, hi) = bootstrap_ci(&coin_dataset(n, heads), z_mean, 400, 0.95, k).unwrap();
            lo <= truth && truth <= hi
        })
        .count();
    assert!((930..=970).contains(&hits), "coverage {hits}/1000");
}
