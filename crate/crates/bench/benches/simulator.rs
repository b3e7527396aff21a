use acmeter::power::PowerScheme;
use acmeter::{simulate, AntennaMode, SimConfig};
use acmeter_bench::scenario;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn one_second(c: &mut Criterion) {
    let cfg = SimConfig {
        sim_time_s: 1.0,
        ..SimConfig::default()
    };
    let mut g = c.benchmark_group("simulate_1s");
    g.sample_size(10);
    for n in [9, 36] {
        for antenna in [AntennaMode::Oa, AntennaMode::Da] {
            let (t, p) = scenario(1, n, antenna, PowerScheme::DpNchan);
            g.bench_with_input(BenchmarkId::new(antenna.to_string(), n), &(t, p), |b, (t, p)| {
                b.iter(|| simulate(black_box(t), black_box(p), &cfg).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, one_second);
criterion_main!(benches);
