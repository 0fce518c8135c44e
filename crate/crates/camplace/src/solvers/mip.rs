//! The mixed-integer model: epigraph variables plus an incremental
//! piecewise-linear decomposition of the squared deficit, and the
//! branch-and-bound solvers built on it.
//!
//! Per target voxel j with desired coverage G = gamma_j and achieved
//! coverage c, the deficit term max(G - c, 0)^2 is linearized with one
//! binary piece indicator pl_j_k and one integer piece value f_j_k per
//! coverage level k in 0..=gamma_max:
//!
//!   sum_k f_j_k + sum_{i sees j} x_i = G        (piece decomposition)
//!   sum_k pl_j_k = 1                            (exactly one active piece)
//!   lo2_k * pl_j_k <= 2 f_j_k <= hi2_k * pl_j_k (piece intervals)
//!   Q_j = sum_k k * pl_j_k,  Q_j >= 0           (epigraph deficit value)
//!   objective: minimize sum_j sum_k k * f_j_k
//!
//! The half-open printed intervals (k - 0.5, k + 0.5] become, after
//! doubling to keep everything integer, lo2_k = 2k and hi2_k = 2k + 1;
//! piece 0 spans [2 * min(G - degree_j, 0), 1] so its value variable can
//! absorb any over-coverage. With integer f the active piece k forces
//! f_j_k = k, making the objective contribution exactly k * k = Q_j^2 for
//! every feasible assignment, not merely at the minimum.

use std::time::Instant;

use crate::objective::gamma_norm;
use crate::{Error, Result};

use super::bnb::{branch_and_bound, BnbOutcome, DeficitUtility, SatisfactionUtility};
use super::{
    solve_greedy_proposed, Method, ProblemInstance, SolverConfig, SolverReport, SolverStatus,
};

/// The MILP data: selection variables x_i, per-voxel epigraph variable Q_j,
/// piece indicators pl_j_k and piece values f_j_k, with budget and
/// location-group constraints.
pub struct MipModel<'a, 'b> {
    pub inst: &'a ProblemInstance<'b>,
    pub gamma_max: u32,
    pub budget: usize,
    /// Candidates seeing each voxel (columns of V).
    pub columns: Vec<Vec<usize>>,
    /// Per voxel, per piece k: (lo2, hi2) with lo2 * pl <= 2 f <= hi2 * pl.
    pub piece_bounds2: Vec<Vec<(i64, i64)>>,
}

impl MipModel<'_, '_> {
    pub fn n_pieces(&self) -> usize {
        self.gamma_max as usize + 1
    }

    /// Whether an auxiliary assignment (active piece, piece values doubled)
    /// for voxel j is feasible at achieved coverage `count`.
    pub fn aux_feasible(&self, j: usize, count: u32, active_piece: usize, f2: &[i64]) -> bool {
        if active_piece >= self.n_pieces() || f2.len() != self.n_pieces() {
            return false;
        }
        // integer f: every doubled value must be even
        if f2.iter().any(|v| v % 2 != 0) {
            return false;
        }
        for (k, &(lo2, hi2)) in self.piece_bounds2[j].iter().enumerate() {
            let pl = (k == active_piece) as i64;
            if !(lo2 * pl <= f2[k] && f2[k] <= hi2 * pl) {
                return false;
            }
        }
        // decomposition: sum_k f_j_k = gamma_j - count
        let sum2: i64 = f2.iter().sum();
        sum2 == 2 * (self.inst.gamma[j] as i64 - count as i64)
    }

    /// Objective contribution sum_k k * f_j_k of an auxiliary assignment.
    pub fn aux_objective(&self, f2: &[i64]) -> i64 {
        f2.iter()
            .enumerate()
            .map(|(k, &v)| k as i64 * v / 2)
            .sum()
    }
}

/// Assemble the MILP for an instance. Errors when any gamma exceeds the
/// configured gamma_max (the piecewise model would be too short).
pub fn build_mip<'a, 'b>(
    inst: &'a ProblemInstance<'b>,
    cfg: &SolverConfig,
) -> Result<MipModel<'a, 'b>> {
    cfg.validate()?;
    for &g in inst.gamma {
        if g > cfg.gamma_max {
            return Err(Error::GammaExceedsMax {
                gamma: g,
                gamma_max: cfg.gamma_max,
            });
        }
    }
    let mut columns = vec![Vec::new(); inst.n_p()];
    for i in 0..inst.n_g() {
        for j in inst.matrix.rows[i].iter_ones() {
            columns[j].push(i);
        }
    }
    let n_pieces = cfg.gamma_max as usize + 1;
    let piece_bounds2 = (0..inst.n_p())
        .map(|j| {
            let degree = columns[j].len() as i64;
            (0..n_pieces)
                .map(|k| {
                    if k == 0 {
                        (2 * (inst.gamma[j] as i64 - degree).min(0), 1)
                    } else if k == n_pieces - 1 {
                        (2 * k as i64, 2 * cfg.gamma_max as i64)
                    } else {
                        (2 * k as i64, 2 * k as i64 + 1)
                    }
                })
                .collect()
        })
        .collect();
    Ok(MipModel {
        inst,
        gamma_max: cfg.gamma_max,
        budget: cfg.budget,
        columns,
        piece_bounds2,
    })
}

fn report_from_outcome(
    method: Method,
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    out: BnbOutcome,
    deficit_bound: Option<u64>,
) -> SolverReport {
    let objective = inst.deficit_of(&out.chosen);
    let status = if out.exhausted {
        SolverStatus::Optimal
    } else {
        SolverStatus::TimeLimitIncumbent
    };
    let best_bound = if out.exhausted {
        objective
    } else {
        deficit_bound.unwrap_or(0)
    };
    SolverReport {
        method,
        selected: out.chosen,
        budget: cfg.budget,
        objective,
        best_bound,
        status,
        elapsed_s: out.elapsed_s,
        nodes_explored: out.nodes,
    }
}

/// Solve the model by branch-and-bound on x, warm-started from the
/// proposed greedy so the incumbent never trails it.
pub fn solve_mip(model: &MipModel, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let inst = model.inst;
    let t0 = Instant::now();
    let warm = solve_greedy_proposed(inst, cfg)?;
    let out = branch_and_bound(inst, cfg, &DeficitUtility, Some(&warm.selected));
    // utility bound translates back to a deficit lower bound
    let norm = gamma_norm(inst.gamma);
    let deficit_bound = Some(norm.saturating_sub(out.utility_ub));
    let mut rep = report_from_outcome(Method::ProposedMip, inst, cfg, out, deficit_bound);
    rep.elapsed_s = t0.elapsed().as_secs_f64();
    Ok(rep)
}

/// Baseline reconstruction of the binary-satisfaction MIP: maximize the
/// number of voxels whose coverage reaches gamma, under the same budget
/// and location constraints. Solved by the same branch-and-bound engine
/// with the satisfaction utility. The reported objective and (trivial)
/// bound are in squared-deficit units so methods compare directly;
/// `Optimal` means the satisfaction search was exhausted.
pub fn solve_zhao(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let out = branch_and_bound(inst, cfg, &SatisfactionUtility, None);
    Ok(report_from_outcome(Method::ZhaoMip, inst, cfg, out, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::enumerate_exact;
    use crate::solvers::testutil::{instance, random_instance};
    use rand::SeedableRng;

    #[test]
    fn single_voxel_no_cameras_costs_nine() {
        // N_p = 1, gamma = 3, N_g = 0: the only feasible piece is k = 3 and
        // the objective weight makes the cost 3 * 3 = 9
        let inst = instance(1, &[], &[3], &[]);
        let view = inst.view();
        let cfg = SolverConfig::new(1);
        let model = build_mip(&view, &cfg).unwrap();
        // enumerate auxiliaries at coverage 0
        let mut best: Option<i64> = None;
        let n = model.n_pieces();
        for active in 0..n {
            // f2 values range over the piece bounds
            let mut f2 = vec![0i64; n];
            let (lo2, hi2) = model.piece_bounds2[0][active];
            let mut v = lo2;
            while v <= hi2 {
                f2[active] = v;
                if model.aux_feasible(0, 0, active, &f2) {
                    let obj = model.aux_objective(&f2);
                    best = Some(best.map_or(obj, |b: i64| b.min(obj)));
                }
                v += 1;
            }
        }
        assert_eq!(best, Some(9));
        let r = solve_mip(&model, &cfg).unwrap();
        assert!(r.selected.is_empty());
        assert_eq!(r.objective, 9);
        assert_eq!(r.status, SolverStatus::Optimal);
    }

    #[test]
    fn full_coverage_reaches_zero() {
        let inst = instance(2, &[&[0, 1], &[0, 1], &[0, 1]], &[3, 3], &[0, 1, 2]);
        let view = inst.view();
        let cfg = SolverConfig::new(3);
        let model = build_mip(&view, &cfg).unwrap();
        let r = solve_mip(&model, &cfg).unwrap();
        assert_eq!(r.objective, 0);
        assert_eq!(r.status, SolverStatus::Optimal);
        assert_eq!(r.best_bound, 0);
    }

    #[test]
    fn gamma_above_max_is_rejected() {
        let inst = instance(1, &[&[0]], &[4], &[0]);
        let view = inst.view();
        assert!(matches!(
            build_mip(&view, &SolverConfig::new(1)),
            Err(Error::GammaExceedsMax { .. })
        ));
    }

    #[test]
    fn matches_exhaustive_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..30 {
            let inst = random_instance(&mut rng, 10, 12, 5, 0.35, 3);
            let view = inst.view();
            let mut cfg = SolverConfig::new(3);
            cfg.time_budget_s = 30.0;
            let model = build_mip(&view, &cfg).unwrap();
            let mip = solve_mip(&model, &cfg).unwrap();
            let exact = enumerate_exact(&view, &cfg).unwrap();
            assert_eq!(mip.status, SolverStatus::Optimal, "trial {trial}");
            assert_eq!(mip.objective, exact.objective, "trial {trial}");
        }
    }

    #[test]
    fn anytime_contract_on_node_cap() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let inst = random_instance(&mut rng, 40, 40, 20, 0.3, 3);
        let view = inst.view();
        let mut cfg = SolverConfig::new(8);
        cfg.max_nodes = Some(5);
        let model = build_mip(&view, &cfg).unwrap();
        let r = solve_mip(&model, &cfg).unwrap();
        assert_eq!(r.status, SolverStatus::TimeLimitIncumbent);
        assert!(r.best_bound <= r.objective);
        assert!(r.selected.len() <= 8);
        // the warm start guarantees the incumbent is at least greedy-good
        let greedy = solve_greedy_proposed(&view, &cfg).unwrap();
        assert!(r.objective <= greedy.objective);
    }

    #[test]
    fn zhao_matches_oracle_for_unit_gamma() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..15 {
            let inst = random_instance(&mut rng, 9, 10, 4, 0.35, 1);
            let view = inst.view();
            let cfg = SolverConfig::new(3);
            let z = solve_zhao(&view, &cfg).unwrap();
            let e = enumerate_exact(&view, &cfg).unwrap();
            // gamma = 1: satisfaction count and deficit are complementary,
            // so the optima coincide
            assert_eq!(z.objective, e.objective);
            assert_eq!(z.status, SolverStatus::Optimal);
        }
    }

    /// The 4-voxel critique instance: three cameras that only stack on one
    /// voxel versus two that spread across the rest.
    pub(crate) fn critique_instance() -> crate::solvers::testutil::OwnedInstance {
        // voxel 0 needs 3 cameras; voxels 1..3 need 3 as well.
        // A1, A2, A3 see voxel 0 only; C1, C2 see voxels 1, 2, 3.
        instance(
            4,
            &[&[0], &[0], &[0], &[1, 2, 3], &[1, 2, 3]],
            &[3, 3, 3, 3],
            &[0, 1, 2, 3, 4],
        )
    }

    #[test]
    fn zhao_prefers_saturation_proposed_spreads() {
        let inst = critique_instance();
        let view = inst.view();
        let cfg = SolverConfig::new(3);
        let z = solve_zhao(&view, &cfg).unwrap();
        // only {A1, A2, A3} satisfies any voxel
        assert_eq!(z.selected, vec![0, 1, 2]);
        assert_eq!(z.objective, 27); // 0 + 9 * 3
        let model = build_mip(&view, &cfg).unwrap();
        let m = solve_mip(&model, &cfg).unwrap();
        // spreading: one A plus both C cameras
        assert_eq!(m.objective, 7); // 4 + 1 + 1 + 1
        assert!(m.objective < z.objective);
    }

    #[test]
    fn feasible_assignments_always_cost_the_squared_deficit() {
        // enumerate every x on a small instance and every auxiliary
        // assignment; all feasible auxiliaries must price at the deficit
        let inst = instance(2, &[&[0], &[0, 1], &[1]], &[2, 3], &[0, 1, 2]);
        let view = inst.view();
        let cfg = SolverConfig::new(3);
        let model = build_mip(&view, &cfg).unwrap();
        for mask in 0u32..8 {
            let chosen: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
            let mut counts = [0u32; 2];
            for &i in &chosen {
                for j in view.matrix.rows[i].iter_ones() {
                    counts[j] += 1;
                }
            }
            #[allow(clippy::needless_range_loop)]
            for j in 0..2 {
                let deficit = view.gamma[j].saturating_sub(counts[j]) as i64;
                let n = model.n_pieces();
                let mut seen_any = false;
                for active in 0..n {
                    let (lo2, hi2) = model.piece_bounds2[j][active];
                    let mut v = lo2;
                    while v <= hi2 {
                        let mut f2 = vec![0i64; n];
                        f2[active] = v;
                        if model.aux_feasible(j, counts[j], active, &f2) {
                            seen_any = true;
                            assert_eq!(model.aux_objective(&f2), deficit * deficit);
                        }
                        v += 1;
                    }
                }
                assert!(seen_any, "no feasible auxiliary for voxel {j} mask {mask}");
            }
        }
    }
}
