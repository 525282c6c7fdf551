use proptest::prelude::*;
use qdini_core::channel::ChannelSequence;
use qdini_core::diagnostics::{
    approximation_gap_grid, laa_slacks, FunctionalFamily, Modulus, CELL_BOUND_TOL, INEQUALITY_TOL, MASS_TOL,
};
use qdini_core::dini::{spectral_truncation, truncated_state_entropy, ApproximationScheme, OperatorSequence};
use qdini_core::entropy::regularized_log_ladder;
use qdini_core::random::{random_channel, random_density, trial_rng};
use qdini_core::Execution;

const EXEC: Execution = Execution::Sequential;

fn family(kind: usize, seed: u64, dim: usize) -> FunctionalFamily {
    let mut rng = trial_rng(seed, "family", 0);
    match kind {
        0 => FunctionalFamily::entropy(),
        1 => {
            let sigma = random_density(&mut rng, dim, dim).into_inner();
            FunctionalFamily::relative_entropy(OperatorSequence::constant(sigma, "sigma"))
        }
        2 => {
            let sigma = random_density(&mut rng, dim, dim).into_inner();
            FunctionalFamily::trace_neg_log(OperatorSequence::constant(sigma, "sigma"))
        }
        3 => {
            let ch = random_channel(&mut rng, dim, 3, 2).unwrap();
            FunctionalFamily::channel_mutual_information(ChannelSequence::constant(ch, "phi"))
        }
        4 => {
            let ch = random_channel(&mut rng, dim, 3, 2).unwrap();
            FunctionalFamily::coherent_information(ChannelSequence::constant(ch, "phi"))
        }
        _ => {
            let ch = random_channel(&mut rng, dim, 3, 3).unwrap();
            FunctionalFamily::output_entropy(ChannelSequence::constant(ch, "phi"))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn almost_affinity_bounds_hold(seed in any::<u64>(), kind in 0usize..6, dim in 2usize..5, p in 0.0f64..=1.0) {
        let f = family(kind, seed, dim).bind(0, EXEC).unwrap();
        let mut rng = trial_rng(seed, "laa", kind as u64);
        let x = random_density(&mut rng, dim, 1 + (seed as usize) % dim).into_inner();
        let y = random_density(&mut rng, dim, dim).into_inner();
        let (lower, upper) = laa_slacks(&f, 0, &x, &y, p).unwrap();
        if let Some(s) = lower {
            prop_assert!(s >= -INEQUALITY_TOL, "{}: a-side slack {s}", f.family().name());
        }
        if let Some(s) = upper {
            prop_assert!(s >= -INEQUALITY_TOL, "{}: b-side slack {s}", f.family().name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn truncated_state_entropy_is_at_most_ln_m(seed in any::<u64>(), dim in 1usize..=10, m in 1usize..=10) {
        let mut rng = trial_rng(seed, "trunc", 0);
        let rho = random_density(&mut rng, dim, 1 + (seed as usize) % dim).into_inner();
        let s = truncated_state_entropy(&rho, m).unwrap();
        prop_assert!(s <= (m as f64).ln() + 1e-10);
        let t = spectral_truncation(&rho, m).unwrap();
        prop_assert!(t.mass >= -MASS_TOL && t.mass <= rho.trace() + MASS_TOL);
    }

    #[test]
    fn ladder_is_non_decreasing(seed in any::<u64>(), dim in 2usize..=6) {
        let mut rng = trial_rng(seed, "ladder", 0);
        let rho = random_density(&mut rng, dim, dim).into_inner();
        let sigma = random_density(&mut rng, dim, dim).into_inner();
        let ks: Vec<u64> = (0..8).map(|i| 10u64.pow(i)).collect();
        let ladder = regularized_log_ladder(&rho, &sigma, &ks).unwrap();
        for w in ladder.a_k.windows(2) {
            prop_assert!(w[1] - w[0] >= -1e-10 * (1.0 + w[1].abs()));
        }
        prop_assert!(ladder.a_k.last().unwrap() <= &(ladder.limit_estimate.to_f64() + 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grids_are_sane_and_respect_the_cell_bound(seed in any::<u64>(), dim in 2usize..=5, kind in 0usize..2) {
        let seq = OperatorSequence::from_fn(dim, "random", move |n| {
            let mut rng = trial_rng(seed, "grid-seq", n as u64);
            Ok(random_density(&mut rng, dim, 1 + n % dim).into_inner())
        });
        let f = family(kind, seed, dim);
        let grid = approximation_gap_grid(&f, &seq, &ApproximationScheme::SpectralTruncation, 4, (1, dim), EXEC).unwrap();
        prop_assert!(grid.mass_sane);
        if let Some((slack, n, m)) = grid.min_cell_bound_slack() {
            prop_assert!(slack >= -CELL_BOUND_TOL, "slack {slack} at ({n}, {m})");
        }
    }
}

#[test]
fn parallel_and_sequential_grids_agree() {
    let seq = OperatorSequence::from_fn(6, "random", |n| {
        let mut rng = trial_rng(7, "agree", n as u64);
        Ok(random_density(&mut rng, 6, 6).into_inner())
    });
    let f = FunctionalFamily::entropy();
    let scheme = ApproximationScheme::SpectralTruncation;
    let a = approximation_gap_grid(&f, &seq, &scheme, 6, (1, 6), Execution::Sequential).unwrap();
    let b = approximation_gap_grid(&f, &seq, &scheme, 6, (1, 6), Execution::Parallel).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn registered_moduli_are_admissible() {
    for m in [Modulus::Zero, Modulus::h2(), Modulus::scaled(2.0, Modulus::h2()), Modulus::over_c(0.5)] {
        assert!(m.is_admissible(), "{}", m.name());
    }
}
