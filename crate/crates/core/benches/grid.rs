//! Parallel versus sequential evaluation of the diagnostics that dominate run time.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdini_core::diagnostics::{approximation_gap_grid, FunctionalFamily};
use qdini_core::dini::{commuting_schedule, validate_schedule, ApproximationScheme, OperatorSequence};
use qdini_core::operator::PositiveOperator;
use qdini_core::random::{random_density, trial_rng};
use qdini_core::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

/// Dense `ρ_n = (1 − t_n) ρ_0 + t_n ω` with random full-rank `ρ_0`, `ω`.
fn dense_sequence(dim: usize) -> OperatorSequence {
    let mut rng = trial_rng(0, "bench", dim as u64);
    let limit = random_density(&mut rng, dim, dim).into_inner();
    let target = random_density(&mut rng, dim, dim).into_inner();
    OperatorSequence::from_fn(dim, "dense", move |n| {
        let t = if n == 0 { 0.0 } else { 0.5 / n as f64 };
        PositiveOperator::mix(&limit, &target, t)
    })
}

fn grid(c: &mut Criterion) {
    let mut g = c.benchmark_group("approximation_gap_grid");
    g.sample_size(10);
    for dim in [8, 24] {
        let seq = dense_sequence(dim);
        let sigma =
            OperatorSequence::constant(PositiveOperator::identity(dim).scaled(1.0 / dim as f64).unwrap(), "mixed");
        let family = FunctionalFamily::relative_entropy(sigma);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, dim), &dim, |b, &dim| {
                b.iter(|| {
                    approximation_gap_grid(&family, &seq, &ApproximationScheme::SpectralTruncation, 12, (1, dim), exec)
                        .unwrap()
                })
            });
        }
    }
    g.finish();
}

fn schedule(c: &mut Criterion) {
    let mut g = c.benchmark_group("commuting_schedule");
    g.sample_size(10);
    let dim = 16;
    let seq = dense_sequence(dim);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, dim), |b| {
            b.iter(|| {
                let s = commuting_schedule(&seq, dim, 12, exec).unwrap();
                validate_schedule(&s, &seq, 12, dim, exec).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, grid, schedule);
criterion_main!(benches);
