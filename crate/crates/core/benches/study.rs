use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wstrank::sim::{run_study_with, Method, Scenario, SimConfig, StudyOptions};
use wstrank::Execution;

fn study(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_study");
    group.sample_size(10);
    for n in [50, 100] {
        let config = SimConfig::new(Scenario::TwoGroup, n).with_replicates(8).with_seed(1);
        for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let opts = StudyOptions {
                execution,
                ..StudyOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(name, n), &config, |b, cfg| {
                b.iter(|| run_study_with(black_box(cfg), &Method::ALL, &opts).unwrap());
            });
        }
    }
    group.finish();
}

criterion_group!(benches, study);
criterion_main!(benches);
