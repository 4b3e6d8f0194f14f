use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use entdist_core::analysis::{run_monte_carlo, sample_noise};
use entdist_core::elements::{apply_collective_noise, HomodyneModel};
use entdist_core::protocols::{make_two_photon_source, GhzProtocol, TwoQubitProtocol};
use entdist_core::{TrialRng, TwoQubitSettings};

fn elements(c: &mut Criterion) {
    let source = make_two_photon_source();
    let mut rng = TrialRng::new(1);
    let noise = sample_noise(&mut rng);
    c.bench_function("collective_noise/two_photon", |b| {
        b.iter(|| apply_collective_noise(black_box(&source), 0, black_box(&noise)).unwrap())
    });
}

fn two_qubit(c: &mut Criterion) {
    let protocol = TwoQubitProtocol::standard();
    let settings = TwoQubitSettings {
        homodyne: HomodyneModel::new(0.1).unwrap(),
        ..Default::default()
    };
    let mut seed = 0u64;
    c.bench_function("two_qubit/run", |b| {
        b.iter_batched(
            || {
                seed += 1;
                let mut rng = TrialRng::new(seed);
                let noise = (sample_noise(&mut rng), sample_noise(&mut rng));
                (rng, noise)
            },
            |(mut rng, (a, bn))| protocol.run(&a, &bn, &settings, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });

    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(20);
    group.bench_function("10k_trials", |b| {
        b.iter(|| run_monte_carlo(10_000, &settings, black_box(7)).unwrap())
    });
    group.finish();
}

fn ghz(c: &mut Criterion) {
    let mut group = c.benchmark_group("ghz/run");
    for n in [4usize, 8, 12] {
        let protocol = GhzProtocol::new(n, false).unwrap();
        let mut seed = 0u64;
        group.bench_function(format!("n{n}"), |b| {
            b.iter_batched(
                || {
                    seed += 1;
                    let mut rng = TrialRng::new(seed);
                    let noises: Vec<_> = (0..n).map(|_| sample_noise(&mut rng)).collect();
                    (rng, noises)
                },
                |(mut rng, noises)| {
                    let id = rng.id();
                    protocol
                        .run(&noises, &HomodyneModel::ideal(), &mut rng, id)
                        .unwrap()
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, elements, two_qubit, ghz);
criterion_main!(benches);
