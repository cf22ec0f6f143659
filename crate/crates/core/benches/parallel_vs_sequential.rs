//! Batch resonance fitting and a seeded Monte-Carlo loop under both execution
//! policies. Built without the `parallel` feature, both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sawkit::resonance::{fit_batch, fit_resonance, ModelKind};
use sawkit::spectra::{
    linewidth_grid, noise_sigma_for_snr_db, synth_s11, ComplexSpectrum, S11Spec,
};
use sawkit::{par, Execution};

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn trace(seed: u64) -> ComplexSpectrum {
    let spec = S11Spec::from_q(688.4e6, 6.8e3, 1.4e4);
    let grid = linewidth_grid(spec.f0_hz, spec.kappa_hz, 20, 3.0);
    synth_s11(&spec, &grid, noise_sigma_for_snr_db(40.0), seed).expect("valid spec")
}

fn batch_fit(c: &mut Criterion) {
    let spectra: Vec<ComplexSpectrum> = (0..32).map(trace).collect();
    let mut group = c.benchmark_group("fit_batch_32_traces");
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| fit_batch(&spectra, ModelKind::Lorentzian, exec))
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("synth_and_fit_32_seeds");
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                par::over_seeds(exec, 0..32, |seed| {
                    fit_resonance(&trace(seed), ModelKind::Lorentzian, None).map(|f| f.qi)
                })
            })
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = batch_fit, monte_carlo
}
criterion_main!(benches);
