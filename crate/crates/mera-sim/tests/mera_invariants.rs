use mera_sim::linalg::{frobenius, kron, pauli, CMat};
use mera_sim::mera::channel::{averaged_window, local_density, zero_state};
use mera_sim::mera::periodic::{
    causal_range_bound, connected_correlator, n_sites, periodic_energy, periodic_half_chain_spectrum, periodic_reduced,
};
use mera_sim::mera::{
    boundary_density, build_local_cone, doubled_purity, half_chain_spectrum, layer_channel, steady_state, DoubledMap,
    MeraParams, TopAngles, UnitCell,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cell(rng: &mut ChaCha8Rng) -> UnitCell {
    let a: Vec<f64> = (0..6).map(|_| rng.random_range(-0.8..0.8)).collect();
    UnitCell::from_slice(&a)
}

fn random_top(rng: &mut ChaCha8Rng) -> TopAngles {
    TopAngles {
        xy: rng.random_range(-1.0..1.0),
        ry_left: rng.random_range(-1.0..1.0),
        ry_right: rng.random_range(-1.0..1.0),
    }
}

fn random_finite(rng: &mut ChaCha8Rng, t: usize, with_top: bool) -> MeraParams {
    let p = MeraParams::finite((0..t).map(|_| random_cell(rng)).collect());
    if with_top {
        p.with_top(Some(random_top(rng)))
    } else {
        p
    }
}

#[test]
fn channel_stack_matches_cone_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in 1..=5 {
        for with_top in [false, true] {
            let p = random_finite(&mut rng, t, with_top);
            let c = build_local_cone(&p, t).unwrap();
            let rho_circ = c.run().reduced(&c.measured_qubits);
            let rho_ch = local_density(&p, t).unwrap();
            assert!(frobenius(&(rho_circ - rho_ch)) < 1e-10, "T={t} top={with_top}");
        }
        let si = MeraParams::scale_invariant(random_cell(&mut rng)).with_top(Some(random_top(&mut rng)));
        let c = build_local_cone(&si, t).unwrap();
        let ch = layer_channel(&si).unwrap();
        let mut rho = mera_sim::mera::top_state(si.top.as_ref());
        for _ in 0..t {
            rho = ch.apply(&rho);
        }
        assert!(frobenius(&(c.run().reduced(&c.measured_qubits) - rho)) < 1e-10);
    }
}

#[test]
fn doubled_map_purity_matches_boundary_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 1..=4 {
        for with_top in [false, true] {
            let p = random_finite(&mut rng, t, with_top);
            let rho = boundary_density(&p, t).unwrap();
            let purity = (&rho * &rho).trace().re;
            assert!((doubled_purity(&p, t).unwrap() - purity).abs() < 1e-9, "T={t}");
        }
        let si = MeraParams::scale_invariant(random_cell(&mut rng)).with_top(Some(random_top(&mut rng)));
        let rho = boundary_density(&si, t).unwrap();
        let dm = DoubledMap::from_cell(&si.layers[0]);
        let top = mera_sim::mera::top_state(si.top.as_ref());
        assert!((dm.purity(&top, t) - (&rho * &rho).trace().re).abs() < 1e-9);
    }
}

#[test]
fn doubled_map_is_not_a_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dm = DoubledMap::from_cell(&random_cell(&mut rng));
    let d0 = dm.dominant().unwrap();
    assert!(d0.norm() < 1.0);
}

#[test]
fn layer_channel_is_cptp_and_has_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let p = MeraParams::scale_invariant(random_cell(&mut rng));
        let ch = layer_channel(&p).unwrap();
        ch.check_cptp().unwrap();
        let ss = steady_state(&ch).unwrap();
        assert!((ss.trace().re - 1.0).abs() < 1e-12);
        assert!(frobenius(&(ch.apply(&ss) - &ss)) < 1e-9);
        let min = mera_sim::linalg::eigvalsh(&ss).into_iter().fold(1.0, f64::min);
        assert!(min > -1e-9);
    }
}

#[test]
fn periodic_and_infinite_local_observables_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for with_top in [false, true] {
        let p = random_finite(&mut rng, 1, with_top);
        let per = periodic_reduced(&p, 1, &[0, 1]).unwrap();
        let inf = local_density(&p, 1).unwrap();
        assert!(frobenius(&(per - inf)) < 1e-10);
    }
    // translation-averaged energy from three-site windows equals the periodic average
    for t in 1..=2 {
        let p = random_finite(&mut rng, t, false);
        let w = averaged_window(&p, t).unwrap();
        let xx = kron(&kron(&pauli('X'), &pauli('X')), &pauli('I'));
        let z = kron(&kron(&pauli('Z'), &pauli('I')), &pauli('I'));
        let g = 0.7;
        let e_win = -(&w * xx).trace().re - g * (&w * z).trace().re;
        let e_per = periodic_energy(&p, t, g).unwrap();
        assert!((e_win - e_per).abs() < 1e-10, "T={t}: {e_win} vs {e_per}");
    }
}

#[test]
fn causal_range_law_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let labels = ['X', 'Y', 'Z'];
    for t in 1..=2 {
        let p = random_finite(&mut rng, t, false);
        let l = n_sites(t);
        let bound = causal_range_bound(t, 1);
        for i in 0..l as i64 {
            for d in bound..=(l - bound) {
                for a in labels {
                    for b in labels {
                        let c = connected_correlator(&p, t, a, b, i, d).unwrap();
                        assert!(c.abs() < 1e-12, "T={t} i={i} d={d} {a}{b}: {c}");
                    }
                }
            }
        }
    }
}

#[test]
fn correlators_inside_range_can_be_nonzero() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = random_finite(&mut rng, 1, true);
    let bound = causal_range_bound(1, 1);
    let max = (0..n_sites(1) as i64)
        .flat_map(|i| (1..bound).map(move |d| (i, d)))
        .map(|(i, d)| connected_correlator(&p, 1, 'X', 'X', i, d).unwrap().abs())
        .fold(0.0, f64::max);
    assert!(max > 1e-6);
}

#[test]
fn half_chain_spectrum_matches_periodic_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = random_finite(&mut rng, 1, false);
    let edge = boundary_density(&p, 1).unwrap();
    let mut prod = half_chain_spectrum(&edge);
    prod.retain(|&x| x > 1e-13);
    let direct = periodic_half_chain_spectrum(&p, 1).unwrap();
    assert_eq!(prod.len(), direct.len());
    for (a, b) in prod.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn identity_mera_is_product() {
    let p = MeraParams::identity_finite(2);
    for d in 1..6 {
        assert!(connected_correlator(&p, 2, 'Z', 'Z', 3, d).unwrap().abs() < 1e-15);
    }
    let rho: CMat = local_density(&p, 2).unwrap();
    assert!(frobenius(&(rho - zero_state(2))) < 1e-15);
}
