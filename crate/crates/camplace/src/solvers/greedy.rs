//! Greedy selection: the proposed squared-deficit greedy and the
//! binary-satisfaction baseline.

use std::time::Instant;

use rayon::prelude::*;

use crate::objective::marginal_gain_of_counts;
use crate::{BitVec, Result};

use super::{Method, ProblemInstance, SolverConfig, SolverReport, SolverStatus};

/// Deterministic argmax over feasible candidates: highest score, ties to
/// the lowest candidate index. Returns None when no candidate is feasible.
fn best_candidate<F>(
    inst: &ProblemInstance,
    chosen: &BitVec,
    used_groups: &BitVec,
    score: F,
) -> Option<(usize, u64)>
where
    F: Fn(usize) -> u64 + Sync,
{
    (0..inst.n_g())
        .into_par_iter()
        .filter(|&i| !chosen.get(i) && !used_groups.get(inst.groups[i] as usize))
        .map(|i| (i, score(i)))
        .reduce_with(|a, b| {
            // max score, min index
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        })
}

struct GreedyState {
    counts: Vec<u32>,
    chosen: BitVec,
    used_groups: BitVec,
    selected: Vec<usize>,
}

impl GreedyState {
    fn new(inst: &ProblemInstance) -> GreedyState {
        GreedyState {
            counts: vec![0u32; inst.n_p()],
            chosen: BitVec::zeros(inst.n_g()),
            used_groups: BitVec::zeros(inst.n_groups.max(1)),
            selected: Vec::new(),
        }
    }

    fn add(&mut self, inst: &ProblemInstance, i: usize) {
        for j in inst.matrix.rows[i].iter_ones() {
            self.counts[j] += 1;
        }
        self.chosen.set(i, true);
        self.used_groups.set(inst.groups[i] as usize, true);
        self.selected.push(i);
    }

    fn report(mut self, inst: &ProblemInstance, method: Method, budget: usize, t0: Instant) -> SolverReport {
        self.selected.sort_unstable();
        let objective = crate::objective::deficit_cost_of_counts(&self.counts, inst.gamma);
        SolverReport {
            method,
            selected: self.selected,
            budget,
            objective,
            best_bound: 0,
            status: SolverStatus::Heuristic,
            elapsed_s: t0.elapsed().as_secs_f64(),
            nodes_explored: 0,
        }
    }
}

/// Proposed greedy: repeatedly add the feasible candidate with the largest
/// squared-deficit marginal gain; stop at the budget or when every gain
/// is zero (by submodularity nothing can improve past that point).
pub fn solve_greedy_proposed(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut st = GreedyState::new(inst);
    while st.selected.len() < cfg.budget {
        let Some((i, gain)) = best_candidate(inst, &st.chosen, &st.used_groups, |i| {
            marginal_gain_of_counts(&inst.matrix.rows[i], &st.counts, inst.gamma)
        }) else {
            break;
        };
        if gain == 0 {
            break;
        }
        st.add(inst, i);
    }
    Ok(st.report(inst, Method::ProposedGreedy, cfg.budget, t0))
}

/// Binary-satisfaction greedy baseline: each step maximizes the number of
/// voxels whose coverage reaches gamma. When every satisfaction gain is
/// zero it falls back to maximizing the count of voxels newly seen at all,
/// and stops once both scores vanish everywhere.
pub fn solve_greedy_binary(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut st = GreedyState::new(inst);
    while st.selected.len() < cfg.budget {
        let sat = best_candidate(inst, &st.chosen, &st.used_groups, |i| {
            inst.matrix.rows[i]
                .iter_ones()
                .filter(|&j| inst.gamma[j] >= 1 && st.counts[j] == inst.gamma[j] - 1)
                .count() as u64
        });
        let pick = match sat {
            Some((i, gain)) if gain > 0 => Some(i),
            Some(_) => {
                // fallback: raw new-voxel count
                match best_candidate(inst, &st.chosen, &st.used_groups, |i| {
                    inst.matrix.rows[i]
                        .iter_ones()
                        .filter(|&j| st.counts[j] == 0)
                        .count() as u64
                }) {
                    Some((i, fresh)) if fresh > 0 => Some(i),
                    _ => None,
                }
            }
            None => None,
        };
        match pick {
            Some(i) => st.add(inst, i),
            None => break,
        }
    }
    Ok(st.report(inst, Method::GreedyBinary, cfg.budget, t0))
}
