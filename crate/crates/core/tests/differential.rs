//! Enumerator and constrained search against the brute-force oracle.

use proptest::prelude::*;
use vl_core::dcs::{solve_cop, CopOutcome, Enumerator};
use vl_core::oracle::{brute_force_ranking, oracle};
use vl_core::score::{ScoreKey, ScoreModel, ScoreVariant};
use vl_core::verifiers::Verifier;
use vl_core::{Assignment, ConfidenceGrid};

fn grid_strategy() -> impl Strategy<Value = ConfidenceGrid> {
    (1usize..6, 2usize..5).prop_flat_map(|(l, k)| {
        // coarse weights make exact ties common
        prop::collection::vec(prop::collection::vec(1u8..5, k), l).prop_map(|rows| {
            let rows = rows
                .into_iter()
                .map(|r| {
                    let s: f64 = r.iter().map(|&v| v as f64).sum();
                    r.into_iter().map(|v| v as f64 / s).collect()
                })
                .collect();
            ConfidenceGrid::from_rows_unchecked_sum(rows).unwrap()
        })
    })
}

fn model_for(variant: u8, grid: &ConfidenceGrid, shift: usize) -> ScoreModel {
    let k = grid.cols();
    let reference =
        Assignment::new(grid.argmax().iter().map(|&s| (s + shift) % k).collect(), k).unwrap();
    match variant % 3 {
        0 => ScoreModel::independent(),
        1 => ScoreModel::consistency(reference),
        _ => ScoreModel::lex(reference),
    }
}

fn full(grid: &ConfidenceGrid, model: &ScoreModel) -> Vec<(Assignment, ScoreKey)> {
    let mut e = Enumerator::new(grid, model).unwrap();
    std::iter::from_fn(|| e.next_scored()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn enumeration_equals_sorted_space(grid in grid_strategy(), variant in 0u8..3, shift in 0usize..3) {
        let model = model_for(variant, &grid, shift);
        prop_assert_eq!(full(&grid, &model), brute_force_ranking(&grid, &model).unwrap());
    }

    #[test]
    fn prefixes_are_stable(grid in grid_strategy(), n in 1usize..20) {
        let model = ScoreModel::independent();
        let all = full(&grid, &model);
        let mut e = Enumerator::new(&grid, &model).unwrap();
        let prefix: Vec<_> = std::iter::from_fn(|| e.next_scored()).take(n).collect();
        prop_assert_eq!(&prefix[..], &all[..prefix.len()]);
    }

    #[test]
    fn sort_search_matches_oracle(grid in grid_strategy(), variant in 0u8..3, budget in 1usize..300) {
        let model = model_for(variant, &grid, 1);
        let reference = oracle(&grid, &model, &Verifier::Sort).unwrap();
        let out = solve_cop(&grid, &model, &Verifier::Sort, budget).unwrap();
        let rank = reference
            .best_feasible
            .as_ref()
            .map(|b| reference.full_ranking.iter().position(|(a, _)| a == b).unwrap() + 1);
        match (rank, out) {
            (Some(r), CopOutcome::Solved { assignment, rank, verifications }) => {
                prop_assert!(r <= budget);
                prop_assert_eq!(Some(assignment), reference.best_feasible);
                prop_assert_eq!(rank, r);
                prop_assert_eq!(verifications, r);
            }
            (Some(r), CopOutcome::Exhausted { verifications, .. }) => {
                prop_assert!(r > budget);
                prop_assert_eq!(verifications, budget);
            }
            (None, CopOutcome::Exhausted { .. }) => {}
            (None, CopOutcome::Solved { .. }) => prop_assert!(false, "solved an infeasible instance"),
        }
    }
}

#[test]
fn exhaustive_small_spaces() {
    // every 2x2 grid on a coarse lattice, every variant
    let steps = [0.1, 0.25, 0.5, 0.75, 0.9];
    for &a in &steps {
        for &b in &steps {
            let grid = ConfidenceGrid::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]]).unwrap();
            for variant in [
                ScoreVariant::IndependentProduct,
                ScoreVariant::ConsistencyCount,
                ScoreVariant::LexConsistencyThenProduct,
            ] {
                for reference in [[0, 0], [0, 1], [1, 0], [1, 1]] {
                    let r = (variant != ScoreVariant::IndependentProduct)
                        .then(|| Assignment::new(reference.to_vec(), 2).unwrap());
                    let model = ScoreModel::with_variant(variant, r).unwrap();
                    assert_eq!(
                        full(&grid, &model),
                        brute_force_ranking(&grid, &model).unwrap()
                    );
                }
            }
        }
    }
}
