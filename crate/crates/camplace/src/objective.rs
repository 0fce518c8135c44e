//! Squared-deficit cost, coverage optimality gap, triangulation metric and
//! marginal gains. Costs stay exact integers until the final gap division.

use serde::{Deserialize, Serialize};

use crate::visibility::VisibilityMatrix;
use crate::{BitVec, Error, Result};

/// A camera subset: the selection variable x plus its budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub chosen: BitVec,
    pub budget: usize,
}

impl Selection {
    pub fn empty(n_g: usize, budget: usize) -> Selection {
        Selection {
            chosen: BitVec::zeros(n_g),
            budget,
        }
    }

    pub fn from_indices(n_g: usize, budget: usize, indices: &[usize]) -> Result<Selection> {
        let mut chosen = BitVec::zeros(n_g);
        for &i in indices {
            if i >= n_g {
                return Err(Error::DimensionMismatch(format!(
                    "candidate index {i} out of range for N_g = {n_g}"
                )));
            }
            chosen.set(i, true);
        }
        if chosen.count_ones() > budget {
            return Err(Error::InvalidArgument(format!(
                "selection of {} exceeds budget {budget}",
                chosen.count_ones()
            )));
        }
        Ok(Selection { chosen, budget })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.chosen.iter_ones().collect()
    }
}

/// Per-voxel achieved coverage and shortfall against the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageProfile {
    pub counts: Vec<u32>,
    pub deficits: Vec<u32>,
}

fn check_dims(matrix: &VisibilityMatrix, x: &Selection) -> Result<()> {
    if x.chosen.len() != matrix.n_g {
        return Err(Error::DimensionMismatch(format!(
            "selection over {} candidates vs matrix N_g = {}",
            x.chosen.len(),
            matrix.n_g
        )));
    }
    Ok(())
}

fn check_gamma(matrix: &VisibilityMatrix, gamma: &[u32]) -> Result<()> {
    if gamma.len() != matrix.n_p {
        return Err(Error::DimensionMismatch(format!(
            "{} gamma entries vs matrix N_p = {}",
            gamma.len(),
            matrix.n_p
        )));
    }
    Ok(())
}

/// Achieved per-voxel coverage counts for a selection.
pub fn coverage_counts(matrix: &VisibilityMatrix, x: &Selection) -> Result<Vec<u32>> {
    check_dims(matrix, x)?;
    let mut counts = vec![0u32; matrix.n_p];
    for i in x.chosen.iter_ones() {
        for j in matrix.rows[i].iter_ones() {
            counts[j] += 1;
        }
    }
    Ok(counts)
}

pub fn coverage_profile(
    matrix: &VisibilityMatrix,
    x: &Selection,
    gamma: &[u32],
) -> Result<CoverageProfile> {
    check_gamma(matrix, gamma)?;
    let counts = coverage_counts(matrix, x)?;
    let deficits = counts
        .iter()
        .zip(gamma)
        .map(|(&c, &g)| g.saturating_sub(c))
        .collect();
    Ok(CoverageProfile { counts, deficits })
}

/// Sum of squared deficits over counts already computed.
pub fn deficit_cost_of_counts(counts: &[u32], gamma: &[u32]) -> u64 {
    counts
        .iter()
        .zip(gamma)
        .map(|(&c, &g)| {
            let d = g.saturating_sub(c) as u64;
            d * d
        })
        .sum()
}

/// The squared-deficit objective for a selection.
pub fn deficit_cost(matrix: &VisibilityMatrix, x: &Selection, gamma: &[u32]) -> Result<u64> {
    check_gamma(matrix, gamma)?;
    let counts = coverage_counts(matrix, x)?;
    Ok(deficit_cost_of_counts(&counts, gamma))
}

pub fn gamma_norm(gamma: &[u32]) -> u64 {
    gamma.iter().map(|&g| (g as u64) * (g as u64)).sum()
}

/// Coverage optimality gap: deficit cost normalized by the all-empty cost.
pub fn coverage_gap(matrix: &VisibilityMatrix, x: &Selection, gamma: &[u32]) -> Result<f64> {
    let denom = gamma_norm(gamma);
    if denom == 0 {
        return Err(Error::ZeroGamma);
    }
    Ok(deficit_cost(matrix, x, gamma)? as f64 / denom as f64)
}

/// Fraction of target voxels seen by fewer than two selected cameras.
pub fn nontriangulatable_fraction(matrix: &VisibilityMatrix, x: &Selection) -> Result<f64> {
    if matrix.n_p == 0 {
        return Err(Error::EmptyTargets);
    }
    let counts = coverage_counts(matrix, x)?;
    let below = counts.iter().filter(|&&c| c < 2).count();
    Ok(below as f64 / matrix.n_p as f64)
}

/// Marginal gain over counts: how much adding the row drops the deficit
/// cost. Closed form: sum over newly covered deficient voxels of
/// `2 * deficit - 1`.
pub fn marginal_gain_of_counts(row: &BitVec, counts: &[u32], gamma: &[u32]) -> u64 {
    row.iter_ones()
        .map(|j| {
            let d = gamma[j].saturating_sub(counts[j]) as u64;
            if d > 0 {
                2 * d - 1
            } else {
                0
            }
        })
        .sum()
}

/// Deficit-cost drop from adding candidate `i` to the selection.
pub fn marginal_gain(
    matrix: &VisibilityMatrix,
    x: &Selection,
    gamma: &[u32],
    i: usize,
) -> Result<u64> {
    check_gamma(matrix, gamma)?;
    check_dims(matrix, x)?;
    if i >= matrix.n_g {
        return Err(Error::DimensionMismatch(format!(
            "candidate {i} out of range for N_g = {}",
            matrix.n_g
        )));
    }
    if x.chosen.get(i) {
        return Err(Error::AlreadySelected(i));
    }
    let counts = coverage_counts(matrix, x)?;
    Ok(marginal_gain_of_counts(&matrix.rows[i], &counts, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provenance::Provenance;

    pub(crate) fn matrix_from_rows(n_p: usize, rows: &[&[usize]]) -> VisibilityMatrix {
        let rows: Vec<BitVec> = rows
            .iter()
            .map(|ones| {
                let mut r = BitVec::zeros(n_p);
                for &j in *ones {
                    r.set(j, true);
                }
                r
            })
            .collect();
        VisibilityMatrix {
            n_g: rows.len(),
            n_p,
            rows,
            provenance: Provenance([0u8; 32]),
        }
    }

    #[test]
    fn empty_selection_profile() {
        let m = matrix_from_rows(3, &[&[0, 1], &[2]]);
        let x = Selection::empty(2, 2);
        let p = coverage_profile(&m, &x, &[3, 2, 1]).unwrap();
        assert_eq!(p.counts, vec![0, 0, 0]);
        assert_eq!(p.deficits, vec![3, 2, 1]);
    }

    #[test]
    fn single_camera_counts_equal_row() {
        let m = matrix_from_rows(3, &[&[0, 2], &[1]]);
        let x = Selection::from_indices(2, 2, &[0]).unwrap();
        let p = coverage_profile(&m, &x, &[1, 1, 1]).unwrap();
        assert_eq!(p.counts, vec![1, 0, 1]);
    }

    #[test]
    fn exact_satisfaction_has_zero_deficit() {
        let m = matrix_from_rows(1, &[&[0], &[0], &[0]]);
        let x = Selection::from_indices(3, 3, &[0, 1, 2]).unwrap();
        let p = coverage_profile(&m, &x, &[3]).unwrap();
        assert_eq!(p.deficits, vec![0]);
    }

    #[test]
    fn deficit_cost_arithmetic() {
        // gamma [3,3], counts [1,0] -> 4 + 9 = 13
        let m = matrix_from_rows(2, &[&[0]]);
        let x = Selection::from_indices(1, 1, &[0]).unwrap();
        assert_eq!(deficit_cost(&m, &x, &[3, 3]).unwrap(), 13);
    }

    #[test]
    fn over_coverage_is_free() {
        let m = matrix_from_rows(1, &[&[0], &[0], &[0], &[0], &[0]]);
        let x = Selection::from_indices(5, 5, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(deficit_cost(&m, &x, &[3]).unwrap(), 0);
    }

    #[test]
    fn gap_bounds() {
        let m = matrix_from_rows(2, &[&[0, 1], &[0, 1], &[0, 1]]);
        let empty = Selection::empty(3, 3);
        assert_eq!(coverage_gap(&m, &empty, &[3, 3]).unwrap(), 1.0);
        let full = Selection::from_indices(3, 3, &[0, 1, 2]).unwrap();
        assert_eq!(coverage_gap(&m, &full, &[3, 3]).unwrap(), 0.0);
        assert!(matches!(
            coverage_gap(&m, &empty, &[0, 0]),
            Err(Error::ZeroGamma)
        ));
    }

    #[test]
    fn nontriangulatable_cases() {
        let m = matrix_from_rows(4, &[&[1, 2, 3], &[2, 3], &[3]]);
        let empty = Selection::empty(3, 3);
        assert_eq!(nontriangulatable_fraction(&m, &empty).unwrap(), 1.0);
        let all = Selection::from_indices(3, 3, &[0, 1, 2]).unwrap();
        // counts = [0,1,2,3] -> two of four below 2
        assert_eq!(nontriangulatable_fraction(&m, &all).unwrap(), 0.5);
    }

    #[test]
    fn marginal_gain_arithmetic() {
        // one voxel at deficit 3: gain 9 - 4 = 5
        let m = matrix_from_rows(1, &[&[0]]);
        let x = Selection::empty(1, 1);
        assert_eq!(marginal_gain(&m, &x, &[3], 0).unwrap(), 5);
    }

    #[test]
    fn saturated_voxels_yield_zero_gain() {
        let m = matrix_from_rows(1, &[&[0], &[0]]);
        let x = Selection::from_indices(2, 2, &[0]).unwrap();
        assert_eq!(marginal_gain(&m, &x, &[1], 1).unwrap(), 0);
    }

    #[test]
    fn already_selected_errors() {
        let m = matrix_from_rows(1, &[&[0]]);
        let x = Selection::from_indices(1, 1, &[0]).unwrap();
        assert!(matches!(
            marginal_gain(&m, &x, &[1], 0),
            Err(Error::AlreadySelected(0))
        ));
    }
}
