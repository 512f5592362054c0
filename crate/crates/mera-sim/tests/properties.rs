use mera_sim::analysis::{fidelity, infidelity_ratio, renyi_from_spectrum, trace_distance, wootters};
use mera_sim::gates::{unitaries_equal_up_to_phase, Basis, Circuit, GateOp};
use mera_sim::linalg::{eigvalsh, frobenius, CMat};
use mera_sim::mera::channel::LayerChannel;
use mera_sim::mera::UnitCell;
use mera_sim::noise::{dephasing_prob, NoiseCalibration};
use mera_sim::rng::stream;
use mera_sim::shots::pauli::{from_pauli, to_pauli};
use mera_sim::shots::{multinomial, ShotDataset, ShotGroup};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn density(d: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |v| {
        let a = CMat::from_fn(d, d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        let m = &a * a.adjoint() + CMat::identity(d, d) * C64::new(1e-3, 0.0);
        let t = m.trace();
        m / t
    })
}

fn gate(n: usize) -> impl Strategy<Value = GateOp> {
    (0..6u8, 0..n, 1..n, -3.2f64..3.2, -3.2f64..3.2).prop_map(move |(k, a, s, t, p)| {
        let b = (a + s) % n;
        match k {
            0 => GateOp::r(a, t, p),
            1 => GateOp::rz(a, t),
            2 => GateOp::ry(a, t),
            3 => GateOp::xx(a, b, t),
            4 => GateOp::xy(a, b, t),
            _ => GateOp::yx(a, b, t),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn renyi_non_increasing_in_alpha(w in prop::collection::vec(1e-4f64..1.0, 2..9), a in 0.2f64..4.0, da in 0.01f64..3.0) {
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / s).collect();
        let lo = renyi_from_spectrum(&p, a);
        let hi = renyi_from_spectrum(&p, a + da);
        prop_assert!(hi <= lo + 1e-10);
        prop_assert!(lo <= (p.len() as f64).log2() + 1e-10);
    }

    #[test]
    fn fidelity_bounds_and_symmetry(r in density(4), s in density(4)) {
        let f = fidelity(&r, &s).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&s, &r).unwrap()).abs() < 1e-9);
        prop_assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-9);
        let d = trace_distance(&r, &s).unwrap();
        prop_assert!(1.0 - f.sqrt() <= d + 1e-9);
        prop_assert!(d <= (1.0 - f).sqrt() + 1e-9);
    }

    #[test]
    fn full_rank_infidelity_is_quadratic(l in 0.1f64..0.5, v in prop::collection::vec(-1.0f64..1.0, 3), u in -3.0f64..3.0) {
        let (c, s) = (u.cos(), u.sin());
        let rot = CMat::from_fn(2, 2, |i, j| C64::new([[c, -s], [s, c]][i][j], 0.0));
        let rho = &rot * mera_sim::linalg::diag_real(&[1.0 - l, l]) * rot.adjoint();
        let d = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(v[0], 0.0),
            (1, 1) => C64::new(-v[0], 0.0),
            (0, 1) => C64::new(v[1], v[2]),
            _ => C64::new(v[1], -v[2]),
        });
        prop_assume!(frobenius(&d) > 0.1);
        let d = &d / C64::new(frobenius(&d), 0.0);
        let r = infidelity_ratio(&rho, &d, 1e-3).unwrap();
        prop_assert!((r / 4.0 - 1.0).abs() < 0.1, "ratio {}", r);
    }

    #[test]
    fn concurrence_in_unit_interval(r in density(4)) {
        let c = wootters(&r).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&c));
    }

    #[test]
    fn circuits_preserve_norm(ops in prop::collection::vec(gate(4), 0..25)) {
        let c = Circuit::new(4, ops, vec![1, 3]).unwrap();
        let s = c.run();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        let rho = s.reduced(&c.measured_qubits);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(eigvalsh(&rho).iter().all(|&x| x > -1e-12));
    }

    #[test]
    fn lowering_preserves_unitary(ops in prop::collection::vec(gate(3), 1..12)) {
        let c = Circuit::new(3, ops, vec![0]).unwrap();
        prop_assert!(unitaries_equal_up_to_phase(&c.unitary(), &c.lowered().unitary(), 1e-10));
    }

    #[test]
    fn layer_channel_is_cptp(a in prop::collection::vec(-3.2f64..3.2, 6), r in density(4)) {
        let ch = LayerChannel::from_cell(&UnitCell::from_slice(&a)).unwrap();
        prop_assert!(ch.check_cptp().is_ok());
        let out = ch.apply(&r);
        prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(eigvalsh(&out).iter().all(|&x| x > -1e-10));
    }

    #[test]
    fn pauli_coefficients_round_trip(r in density(4)) {
        let back = from_pauli(&to_pauli(&r, 2), 2, 4.0);
        prop_assert!(frobenius(&(back - &r)) < 1e-12);
    }

    #[test]
    fn dephasing_probability_is_capped(t in 0.0f64..1.0) {
        let p = dephasing_prob(&NoiseCalibration::reference(), t);
        prop_assert!((0.0..=0.5).contains(&p));
    }

    #[test]
    fn multinomial_conserves_counts(n in 0u64..5000, w in prop::collection::vec(0.0f64..1.0, 1..9), seed in any::<u64>()) {
        let s: f64 = w.iter().sum();
        prop_assume!(s > 0.0);
        let p: Vec<f64> = w.iter().map(|x| x / s).collect();
        let c = multinomial(n, &p, &mut stream(seed, 0));
        prop_assert_eq!(c.iter().sum::<u64>(), n);
        prop_assert!(c.iter().zip(&p).all(|(&k, &q)| q > 0.0 || k == 0));
    }

    #[test]
    fn jsonl_round_trip(groups in prop::collection::vec((prop::collection::vec(0..3usize, 3), prop::collection::vec(0u64..100, 8)), 1..6), seed in any::<u64>()) {
        let ds = ShotDataset {
            circuit_id: "prop".into(),
            n_qubits: 3,
            seed,
            groups: groups.into_iter().map(|(b, counts)| ShotGroup { basis: b.into_iter().map(|i| Basis::ALL[i]).collect(), counts }).collect(),
        };
        prop_assert_eq!(ShotDataset::from_jsonl(&ds.to_jsonl()).unwrap(), ds);
    }
}

#[test]
fn pure_state_infidelity_is_linear() {
    let psi = mera_sim::linalg::projector(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
    let perp = mera_sim::linalg::projector(&[C64::new(0.0, 0.8), C64::new(0.6, 0.0)]);
    let d = &perp - &psi;
    for eps in [1e-3, 5e-4, 0.1] {
        let inf = mera_sim::analysis::perturbed_infidelity(&psi, &d, eps).unwrap();
        assert!((inf - eps).abs() < 1e-7, "{inf} vs {eps}");
    }
    assert!((infidelity_ratio(&psi, &d, 1e-3).unwrap() - 2.0).abs() < 1e-3);
}
