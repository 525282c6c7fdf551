//! Parallel versus sequential fuzzing and scenario runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdini::{builtin_scenario, inequality_fuzz, run_scenario, RunOptions};
use qdini_core::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn fuzz(c: &mut Criterion) {
    let mut g = c.benchmark_group("inequality_fuzz");
    g.sample_size(10);
    for suite in ["entropy", "channel"] {
        for (name, exec) in MODES {
            g.bench_function(BenchmarkId::new(name, suite), |b| {
                b.iter(|| inequality_fuzz(suite, 6, 200, 1, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn scenarios(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_scenario");
    g.sample_size(10);
    for scenario in ["simon-dct", "channel-mi-depolarizing"] {
        let s = builtin_scenario(scenario).unwrap();
        for (name, exec) in MODES {
            let opts = RunOptions { exec, ..RunOptions::default() };
            g.bench_function(BenchmarkId::new(name, scenario), |b| b.iter(|| run_scenario(&s, 0, &opts).unwrap()));
        }
    }
    g.finish();
}

criterion_group!(benches, fuzz, scenarios);
criterion_main!(benches);
