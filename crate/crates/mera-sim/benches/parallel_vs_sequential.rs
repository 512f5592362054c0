use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mera_sim::mera::{build_boundary_cone, MeraParams, TopAngles, UnitCell};
use mera_sim::noise::{NoiseCalibration, NoiseModel, NoiseSources};
use mera_sim::par::{current_num_threads, with_threads};
use mera_sim::shots::{noisy_outcome_distributions, pauli_settings};

fn params() -> MeraParams {
    let mut p = MeraParams::scale_invariant(UnitCell::from_slice(&[0.41, -0.23, 0.37, -0.12, 0.29, -0.18]));
    p.top = Some(TopAngles::from_slice(&[0.6, 0.2, -0.3]));
    p
}

fn averaged_distributions(c: &mut Criterion) {
    let circuit = build_boundary_cone(&params(), 3).unwrap();
    let model = NoiseModel::new(NoiseCalibration::reference(), NoiseSources::all());
    let settings = pauli_settings(circuit.measured_qubits.len()).unwrap();
    let mut group = c.benchmark_group("noisy_outcome_distributions");
    group.sample_size(10);
    let threads = [("sequential", Some(1)), ("parallel", None)];
    for (name, jobs) in threads {
        let label = format!("{name}/{}", if jobs.is_some() { 1 } else { current_num_threads() });
        group.bench_function(BenchmarkId::new("T3_200_realizations", label), |b| {
            b.iter(|| with_threads(jobs, || noisy_outcome_distributions(&circuit, &model, &settings, 200, 7).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, averaged_distributions);
criterion_main!(benches);
