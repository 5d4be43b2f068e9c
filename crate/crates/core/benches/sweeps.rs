use criterion::{criterion_group, criterion_main, Criterion};

use bjj_core::scenarios::{par_map, seq_map};
use bjj_core::twomode::{tm_integrate_sampled, ModelVariant, TwoModeParams, TwoModeState};

fn frequency(z0: &f64) -> f64 {
    let p = TwoModeParams::with_lambda(1.0, 8.0);
    let t = tm_integrate_sampled(TwoModeState::new(*z0, 0.0), &p, ModelVariant::Jgp, 60.0, 2e-3, 10)
        .expect("integration");
    t.fit().map(|f| f.omega).unwrap_or(f64::NAN)
}

fn sweeps(c: &mut Criterion) {
    let z0: Vec<f64> = (1..=32).map(|i| 0.02 * i as f64).collect();
    let mut g = c.benchmark_group("z0_sweep");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| seq_map(&z0, frequency)));
    g.bench_function("par_map", |b| b.iter(|| par_map(&z0, frequency)));
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
