//! Camera-subset selection: proposed greedy, branch-and-bound MILP,
//! binary-greedy and satisfaction-MIP baselines, exhaustive oracle, and
//! CPLEX-LP export.

mod bnb;
mod exact;
mod greedy;
mod lp;
mod mip;

pub use exact::enumerate_exact;
pub use greedy::{solve_greedy_binary, solve_greedy_proposed};
pub use lp::export_lp;
pub use mip::{build_mip, solve_mip, solve_zhao, MipModel};

use serde::{Deserialize, Serialize};

use crate::geometry::DEFAULT_GAMMA_MAX;
use crate::objective::{deficit_cost_of_counts, Selection};
use crate::visibility::VisibilityMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ProposedMip,
    ProposedGreedy,
    GreedyBinary,
    ZhaoMip,
    Exhaustive,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ProposedMip => "proposed-mip",
            Method::ProposedGreedy => "proposed-greedy",
            Method::GreedyBinary => "greedy-binary",
            Method::ZhaoMip => "zhao-mip",
            Method::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Camera budget N_s.
    pub budget: usize,
    /// Wall-clock limit in seconds; the incumbent is returned on expiry.
    pub time_budget_s: f64,
    /// Maximum supported desired coverage (piece count is gamma_max + 1).
    pub gamma_max: u32,
    /// Tie-breaking seed. Present for config determinism; all current
    /// tie-breaks are index-based.
    pub seed: u64,
    /// Deterministic node cap for branch-and-bound; when set, the search
    /// stops at this many explored nodes independent of wall clock.
    pub max_nodes: Option<u64>,
}

impl SolverConfig {
    pub fn new(budget: usize) -> SolverConfig {
        SolverConfig {
            budget,
            time_budget_s: 6000.0,
            gamma_max: DEFAULT_GAMMA_MAX,
            seed: 0,
            max_nodes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::InvalidArgument("budget must be >= 1".into()));
        }
        if !self.time_budget_s.is_finite() || self.time_budget_s <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time budget must be positive, got {}",
                self.time_budget_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    /// Search tree exhausted; the selection is optimal for the method's
    /// own objective.
    Optimal,
    /// Time or node budget expired; the best incumbent is returned.
    TimeLimitIncumbent,
    /// Produced by the greedy methods, which carry no optimality claim.
    Heuristic,
    Infeasible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub method: Method,
    /// Selected candidate indices, ascending.
    pub selected: Vec<usize>,
    pub budget: usize,
    /// Squared-deficit cost of the selection.
    pub objective: u64,
    /// Lower bound on the optimal squared-deficit cost. Equals `objective`
    /// when status is `Optimal`; 0 when no nontrivial bound is known.
    pub best_bound: u64,
    pub status: SolverStatus,
    pub elapsed_s: f64,
    pub nodes_explored: u64,
}

impl SolverReport {
    pub fn selection(&self, n_g: usize) -> Result<Selection> {
        Selection::from_indices(n_g, self.budget.max(self.selected.len()), &self.selected)
    }
}

/// A solver-facing view of one placement instance.
#[derive(Clone, Copy)]
pub struct ProblemInstance<'a> {
    pub matrix: &'a VisibilityMatrix,
    pub gamma: &'a [u32],
    /// Location-group id per candidate.
    pub groups: &'a [u32],
    pub n_groups: usize,
}

impl<'a> ProblemInstance<'a> {
    pub fn new(
        matrix: &'a VisibilityMatrix,
        gamma: &'a [u32],
        groups: &'a [u32],
    ) -> Result<ProblemInstance<'a>> {
        if gamma.len() != matrix.n_p {
            return Err(Error::DimensionMismatch(format!(
                "{} gamma entries vs matrix N_p = {}",
                gamma.len(),
                matrix.n_p
            )));
        }
        if groups.len() != matrix.n_g {
            return Err(Error::DimensionMismatch(format!(
                "{} group ids vs matrix N_g = {}",
                groups.len(),
                matrix.n_g
            )));
        }
        let n_groups = groups.iter().map(|&g| g as usize + 1).max().unwrap_or(0);
        Ok(ProblemInstance {
            matrix,
            gamma,
            groups,
            n_groups,
        })
    }

    pub fn n_g(&self) -> usize {
        self.matrix.n_g
    }

    pub fn n_p(&self) -> usize {
        self.matrix.n_p
    }

    /// Deficit cost of a set of chosen candidates.
    pub fn deficit_of(&self, chosen: &[usize]) -> u64 {
        let mut counts = vec![0u32; self.n_p()];
        for &i in chosen {
            for j in self.matrix.rows[i].iter_ones() {
                counts[j] += 1;
            }
        }
        deficit_cost_of_counts(&counts, self.gamma)
    }
}

/// Run the configured method on an instance.
pub fn solve(inst: &ProblemInstance, method: Method, cfg: &SolverConfig) -> Result<SolverReport> {
    match method {
        Method::ProposedGreedy => solve_greedy_proposed(inst, cfg),
        Method::GreedyBinary => solve_greedy_binary(inst, cfg),
        Method::ProposedMip => {
            let model = build_mip(inst, cfg)?;
            solve_mip(&model, cfg)
        }
        Method::ZhaoMip => solve_zhao(inst, cfg),
        Method::Exhaustive => enumerate_exact(inst, cfg),
    }
}
