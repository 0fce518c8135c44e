//! Writes the mixed-integer model in the CPLEX LP text format so it can be
//! handed to an external solver (cbc, gurobi, cplex) for cross-checking.

use std::fmt::Write as _;

use crate::Result;

use super::mip::MipModel;

/// Render the model as an LP-format string.
///
/// Variables: x_i (candidate selection, binary), pl_j_k (piece indicator,
/// binary), f_j_k (piece value, integer; f_j_0 may be negative), Q_j
/// (deficit level, integer >= 0).
pub fn export_lp(model: &MipModel) -> Result<String> {
    let inst = model.inst;
    let n_pieces = model.n_pieces();
    let mut s = String::new();
    s.push_str("\\ camera placement: minimize total squared coverage deficit\n");
    s.push_str("Minimize\n obj: ");
    let mut terms = Vec::new();
    for j in 0..inst.n_p() {
        let row: Vec<String> = (0..n_pieces).map(|k| format!("{k} f_{j}_{k}")).collect();
        terms.push(row.join(" + "));
    }
    if terms.is_empty() {
        s.push('0');
    } else {
        s.push_str(&terms.join("\n   + "));
    }
    s.push_str("\nSubject To\n");
    for j in 0..inst.n_p() {
        // piece decomposition: sum_k f + sum_{i sees j} x = gamma
        let mut lhs: Vec<String> = (0..n_pieces).map(|k| format!("f_{j}_{k}")).collect();
        lhs.extend(model.columns[j].iter().map(|i| format!("x_{i}")));
        writeln!(s, " link_{j}: {} = {}", lhs.join(" + "), inst.gamma[j]).ok();
        let pls: Vec<String> = (0..n_pieces).map(|k| format!("pl_{j}_{k}")).collect();
        writeln!(s, " one_piece_{j}: {} = 1", pls.join(" + ")).ok();
        for (k, &(lo2, hi2)) in model.piece_bounds2[j].iter().enumerate() {
            // lo2 * pl <= 2 f <= hi2 * pl
            let hi_sign = if hi2 >= 0 { "-" } else { "+" };
            let lo_sign = if lo2 >= 0 { "-" } else { "+" };
            writeln!(
                s,
                " piece_hi_{j}_{k}: 2 f_{j}_{k} {hi_sign} {} pl_{j}_{k} <= 0",
                hi2.abs()
            )
            .ok();
            writeln!(
                s,
                " piece_lo_{j}_{k}: 2 f_{j}_{k} {lo_sign} {} pl_{j}_{k} >= 0",
                lo2.abs()
            )
            .ok();
        }
        let qk: Vec<String> = (1..n_pieces).map(|k| format!("{k} pl_{j}_{k}")).collect();
        if qk.is_empty() {
            writeln!(s, " q_{j}: Q_{j} = 0").ok();
        } else {
            writeln!(s, " q_{j}: Q_{j} - {} = 0", qk.join(" - ")).ok();
        }
    }
    let xs: Vec<String> = (0..inst.n_g()).map(|i| format!("x_{i}")).collect();
    if !xs.is_empty() {
        writeln!(s, " budget: {} <= {}", xs.join(" + "), model.budget).ok();
        // at most one pose per mount location
        for g in 0..inst.n_groups {
            let members: Vec<String> = (0..inst.n_g())
                .filter(|&i| inst.groups[i] as usize == g)
                .map(|i| format!("x_{i}"))
                .collect();
            if members.len() > 1 {
                writeln!(s, " loc_{g}: {} <= 1", members.join(" + ")).ok();
            }
        }
    }
    s.push_str("Bounds\n");
    for j in 0..inst.n_p() {
        writeln!(s, " f_{j}_0 free").ok();
        writeln!(s, " 0 <= Q_{j} <= {}", model.gamma_max).ok();
    }
    s.push_str("Generals\n");
    for j in 0..inst.n_p() {
        for k in 0..n_pieces {
            writeln!(s, " f_{j}_{k}").ok();
        }
        writeln!(s, " Q_{j}").ok();
    }
    s.push_str("Binaries\n");
    for i in 0..inst.n_g() {
        writeln!(s, " x_{i}").ok();
    }
    for j in 0..inst.n_p() {
        for k in 0..n_pieces {
            writeln!(s, " pl_{j}_{k}").ok();
        }
    }
    s.push_str("End\n");
    Ok(s)
}
