//! Depth-first branch-and-bound over the binary selection vector.
//!
//! Branching picks the allowed candidate with the highest marginal utility
//! at the node's partial selection. Each utility model supplies its own
//! optimistic bound on the utility still reachable below a node; subtrees
//! whose bound cannot beat the incumbent are pruned. The search is anytime:
//! on time or node-budget expiry the best incumbent is returned together
//! with a valid global bound.

use std::time::Instant;

use rayon::prelude::*;

use crate::BitVec;

use super::{ProblemInstance, SolverConfig};

pub(crate) trait UtilityModel: Sync {
    /// Marginal utility of adding candidate `cand` given current counts.
    fn gain(&self, inst: &ProblemInstance, counts: &[u32], cand: usize) -> u64;

    /// Optimistic bound on the utility still reachable from this node.
    /// `gains` holds the current marginal gain per allowed candidate.
    fn extra_bound(
        &self,
        inst: &ProblemInstance,
        counts: &[u32],
        allowed: &[usize],
        gains: &[u64],
        used_groups: &BitVec,
        budget_left: usize,
    ) -> u64;

    /// Whether all-zero marginal gains make a node a leaf. True for
    /// submodular utilities, where zero gains can never recover.
    fn zero_gain_is_leaf(&self) -> bool;
}

/// Squared-deficit utility: gamma-norm minus deficit cost, accumulated as
/// marginal gains. Monotone submodular over the partition matroid, so the
/// sum of the top-k per-group gains bounds any completion.
pub(crate) struct DeficitUtility;

impl UtilityModel for DeficitUtility {
    fn gain(&self, inst: &ProblemInstance, counts: &[u32], cand: usize) -> u64 {
        crate::objective::marginal_gain_of_counts(&inst.matrix.rows[cand], counts, inst.gamma)
    }

    fn extra_bound(
        &self,
        inst: &ProblemInstance,
        _counts: &[u32],
        allowed: &[usize],
        gains: &[u64],
        _used_groups: &BitVec,
        budget_left: usize,
    ) -> u64 {
        // best gain per unused group, top budget_left of them
        let mut per_group = vec![0u64; inst.n_groups];
        for (&cand, &g) in allowed.iter().zip(gains) {
            let grp = inst.groups[cand] as usize;
            if g > per_group[grp] {
                per_group[grp] = g;
            }
        }
        per_group.sort_unstable_by(|a, b| b.cmp(a));
        per_group.iter().take(budget_left).sum()
    }

    fn zero_gain_is_leaf(&self) -> bool {
        true
    }
}

/// Binary-satisfaction utility: the number of voxels whose coverage has
/// reached gamma. Not submodular for gamma >= 2 (the step gain grows near
/// the threshold), so the bound relaxes per voxel instead: a voxel counts
/// as reachable when the allowed candidates seeing it, capped by the
/// remaining budget, can still lift it to gamma.
pub(crate) struct SatisfactionUtility;

impl UtilityModel for SatisfactionUtility {
    fn gain(&self, inst: &ProblemInstance, counts: &[u32], cand: usize) -> u64 {
        inst.matrix.rows[cand]
            .iter_ones()
            .filter(|&j| inst.gamma[j] >= 1 && counts[j] == inst.gamma[j] - 1)
            .count() as u64
    }

    fn extra_bound(
        &self,
        inst: &ProblemInstance,
        counts: &[u32],
        allowed: &[usize],
        _gains: &[u64],
        _used_groups: &BitVec,
        budget_left: usize,
    ) -> u64 {
        let mut extra = vec![0u32; inst.n_p()];
        for &cand in allowed {
            for j in inst.matrix.rows[cand].iter_ones() {
                extra[j] += 1;
            }
        }
        (0..inst.n_p())
            .filter(|&j| {
                counts[j] < inst.gamma[j]
                    && counts[j] + extra[j].min(budget_left as u32) >= inst.gamma[j]
            })
            .count() as u64
    }

    fn zero_gain_is_leaf(&self) -> bool {
        false
    }
}

struct Node {
    counts: Vec<u32>,
    chosen: Vec<usize>,
    excluded: BitVec,
    used_groups: BitVec,
    budget_left: usize,
    utility: u64,
    /// Upper utility bound inherited from the parent; valid for this node
    /// because its feasible completions are a subset of the parent's.
    ub_hint: u64,
}

pub(crate) struct BnbOutcome {
    pub chosen: Vec<usize>,
    pub nodes: u64,
    pub exhausted: bool,
    /// Valid upper bound on the optimal utility at the moment the search
    /// stopped (equals `utility` when exhausted).
    pub utility_ub: u64,
    pub elapsed_s: f64,
}

pub(crate) fn branch_and_bound<M: UtilityModel>(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    model: &M,
    warm_start: Option<&[usize]>,
) -> BnbOutcome {
    let start = Instant::now();
    let n_g = inst.n_g();
    let budget = cfg.budget.min(inst.n_groups);

    // seed the incumbent so the anytime contract holds from the first node
    let mut best_chosen: Vec<usize> = Vec::new();
    let mut best_utility: u64 = 0;
    if let Some(ws) = warm_start {
        let mut counts = vec![0u32; inst.n_p()];
        let mut utility = 0u64;
        for &i in ws {
            utility += model.gain(inst, &counts, i);
            for j in inst.matrix.rows[i].iter_ones() {
                counts[j] += 1;
            }
        }
        best_chosen = ws.to_vec();
        best_utility = utility;
    }

    let root = Node {
        counts: vec![0u32; inst.n_p()],
        chosen: Vec::new(),
        excluded: BitVec::zeros(n_g),
        used_groups: BitVec::zeros(inst.n_groups.max(1)),
        budget_left: budget,
        utility: 0,
        ub_hint: u64::MAX,
    };
    let mut stack = vec![root];
    let mut nodes: u64 = 0;
    let mut exhausted = true;

    while let Some(node) = stack.pop() {
        nodes += 1;
        let out_of_budget = start.elapsed().as_secs_f64() > cfg.time_budget_s
            || cfg.max_nodes.is_some_and(|m| nodes > m);
        if out_of_budget {
            // the popped node is still open
            stack.push(node);
            exhausted = false;
            break;
        }

        if node.utility > best_utility {
            best_utility = node.utility;
            best_chosen = node.chosen.clone();
        }

        if node.budget_left == 0 {
            continue;
        }
        let allowed: Vec<usize> = (0..n_g)
            .filter(|&i| {
                !node.excluded.get(i) && !node.used_groups.get(inst.groups[i] as usize)
            })
            .collect();
        if allowed.is_empty() {
            continue;
        }
        let gains: Vec<u64> = allowed
            .par_iter()
            .map(|&i| model.gain(inst, &node.counts, i))
            .collect();

        let extra = model.extra_bound(
            inst,
            &node.counts,
            &allowed,
            &gains,
            &node.used_groups,
            node.budget_left,
        );
        let ub = node.utility.saturating_add(extra).min(node.ub_hint);
        if ub <= best_utility {
            continue;
        }

        // branch candidate: max gain, ties to the lowest index
        let (pos, &branch_gain) = gains
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
            .expect("allowed is non-empty");
        if branch_gain == 0 && model.zero_gain_is_leaf() {
            continue;
        }
        let branch = allowed[pos];

        // exclude child first so the include branch is explored next (LIFO)
        let mut excluded = node.excluded.clone();
        excluded.set(branch, true);
        stack.push(Node {
            counts: node.counts.clone(),
            chosen: node.chosen.clone(),
            excluded: excluded.clone(),
            used_groups: node.used_groups.clone(),
            budget_left: node.budget_left,
            utility: node.utility,
            ub_hint: ub,
        });

        let mut counts = node.counts;
        for j in inst.matrix.rows[branch].iter_ones() {
            counts[j] += 1;
        }
        let mut chosen = node.chosen;
        chosen.push(branch);
        let mut used_groups = node.used_groups;
        used_groups.set(inst.groups[branch] as usize, true);
        stack.push(Node {
            counts,
            chosen,
            excluded: node.excluded,
            used_groups,
            budget_left: node.budget_left - 1,
            utility: node.utility + branch_gain,
            ub_hint: ub,
        });
    }

    let utility_ub = if exhausted {
        best_utility
    } else {
        stack
            .iter()
            .map(|n| n.ub_hint)
            .max()
            .unwrap_or(best_utility)
            .max(best_utility)
    };
    best_chosen.sort_unstable();
    BnbOutcome {
        chosen: best_chosen,
        nodes,
        exhausted,
        utility_ub,
        elapsed_s: start.elapsed().as_secs_f64(),
    }
}
