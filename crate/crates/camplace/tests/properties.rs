//! Randomized invariants for the geometry and objective layers.

mod common;

use camplace::geometry::{voxelize, PointCloud};
use camplace::objective::{
    deficit_cost, gamma_norm, marginal_gain_of_counts, Selection,
};
use camplace::solvers::{solve_greedy_proposed, SolverConfig};
use camplace::Vec3;
use proptest::prelude::*;

// extents and voxel sizes kept in a range where the grid stays far below
// the voxel-count cap
fn finite_point() -> impl Strategy<Value = (f64, f64, f64)> {
    (
        -10.0..10.0f64,
        -10.0..10.0f64,
        -10.0..10.0f64,
    )
}

proptest! {
    // no failure-persistence files in integration-test targets
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    /// Every input point lands in an occupied voxel that contains it.
    #[test]
    fn voxelize_covers_every_point(
        pts in prop::collection::vec(finite_point(), 1..60),
        size in 0.2..2.0f64,
    ) {
        let cloud = PointCloud {
            points: pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect(),
            colors: None,
        };
        let grid = voxelize(&cloud, size, 1).unwrap();
        for p in &cloud.points {
            let c = grid.voxel_containing(*p).expect("point outside its own grid");
            let idx = grid.linear_index(c);
            prop_assert!(grid.occupied(idx));
            // containment: the voxel's center is within half a diagonal
            let d = grid.center_of(idx) - *p;
            prop_assert!(d.norm() <= size * 3f64.sqrt() / 2.0 + 1e-9);
        }
    }

    /// Voxel centers map back to their own voxel.
    #[test]
    fn center_round_trips(
        pts in prop::collection::vec(finite_point(), 1..40),
        size in 0.5..2.0f64,
    ) {
        let cloud = PointCloud {
            points: pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect(),
            colors: None,
        };
        let grid = voxelize(&cloud, size, 1).unwrap();
        for idx in 0..grid.n_voxels() {
            let c = grid.voxel_containing(grid.center_of(idx)).unwrap();
            prop_assert_eq!(grid.linear_index(c), idx);
        }
    }

    /// The closed-form marginal gain equals the brute-force deficit delta,
    /// and adding a camera never increases the deficit (monotonicity).
    #[test]
    fn marginal_gain_matches_brute_force(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, 8, 10, 4, 0.35, 3);
        let view = inst.view();
        let mut counts = vec![0u32; view.n_p()];
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..view.n_g() {
            let gain = marginal_gain_of_counts(&inst.matrix.rows[i], &counts, &inst.gamma);
            let before = view.deficit_of(&chosen);
            chosen.push(i);
            let after = view.deficit_of(&chosen);
            prop_assert_eq!(gain, before - after);
            prop_assert!(after <= before);
            for j in inst.matrix.rows[i].iter_ones() {
                counts[j] += 1;
            }
        }
        // full selection sanity: deficit + utility telescopes to the norm of
        // whatever remains uncovered
        let sel = Selection::from_indices(view.n_g(), view.n_g(), &chosen).unwrap();
        prop_assert_eq!(
            deficit_cost(&inst.matrix, &sel, &inst.gamma).unwrap(),
            view.deficit_of(&chosen)
        );
    }

    /// Squared-deficit utility is submodular: a candidate's gain never grows
    /// as the selection it joins grows. Exhaustive over all nested pairs on
    /// small instances.
    #[test]
    fn deficit_utility_is_submodular(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n_g = 6usize;
        let inst = common::random_instance(&mut rng, n_g, 8, n_g, 0.4, 3);
        let view = inst.view();
        for small in 0u32..(1 << n_g) {
            for add in 0..n_g {
                let big = small | (1 << add);
                if big == small {
                    continue;
                }
                for cand in 0..n_g {
                    if big >> cand & 1 == 1 {
                        continue;
                    }
                    let gain = |mask: u32| {
                        let mut counts = vec![0u32; view.n_p()];
                        for i in 0..n_g {
                            if mask >> i & 1 == 1 {
                                for j in inst.matrix.rows[i].iter_ones() {
                                    counts[j] += 1;
                                }
                            }
                        }
                        marginal_gain_of_counts(&inst.matrix.rows[cand], &counts, &inst.gamma)
                    };
                    prop_assert!(gain(big) <= gain(small));
                }
            }
        }
    }

    /// Greedy never exceeds the budget, never reuses a mount location, and
    /// its utility is monotone in the budget.
    #[test]
    fn greedy_respects_structure(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, 12, 10, 5, 0.3, 3);
        let view = inst.view();
        let norm = gamma_norm(&inst.gamma);
        let mut last_utility = 0u64;
        for budget in 1..=5usize {
            let rep = solve_greedy_proposed(&view, &SolverConfig::new(budget)).unwrap();
            prop_assert!(rep.selected.len() <= budget);
            let mut groups: Vec<u32> =
                rep.selected.iter().map(|&i| inst.groups[i]).collect();
            groups.sort_unstable();
            groups.dedup();
            prop_assert_eq!(groups.len(), rep.selected.len());
            let utility = norm - rep.objective;
            prop_assert!(utility >= last_utility);
            last_utility = utility;
        }
    }
}
