//! Forward auction with epsilon scaling (Gauss-Seidel bidding).
//!
//! Used only to produce a near-optimal assignment and column prices that
//! warm-start the exact solver; its output is never returned as a final
//! answer. Rows bid in queue order and ties go to the lowest column, so the
//! result is a deterministic function of the costs.

use std::collections::VecDeque;

use super::cost::{CostSource, RowCosts};

const NONE: usize = usize::MAX;

/// Ratio between successive epsilon values.
const EPS_FACTOR: f64 = 6.0;
/// Final epsilon relative to the largest cost.
const EPS_FINAL_REL: f64 = 1e-7;

pub(crate) struct AuctionResult {
    /// Prices negated, i.e. column duals in the convention `c - v`.
    pub v: Vec<f64>,
    pub row_to_col: Vec<usize>,
}

pub(crate) fn run<C: CostSource + ?Sized>(costs: &C) -> AuctionResult {
    let n = costs.size();
    let mut row = vec![0.0; n];
    let mut cmax: f64 = 0.0;
    for i in 0..n {
        costs.row_costs(i).fill(&mut row);
        cmax = row.iter().fold(cmax, |m, &c| m.max(c));
    }
    let mut price = vec![0.0; n];
    let mut row_to_col = vec![NONE; n];
    let mut col_to_row = vec![NONE; n];
    if cmax == 0.0 {
        return AuctionResult {
            v: price,
            row_to_col: (0..n).collect(),
        };
    }
    let eps_final = cmax * EPS_FINAL_REL;
    let mut eps = cmax / 4.0;
    let mut queue = VecDeque::with_capacity(n);
    loop {
        row_to_col.fill(NONE);
        col_to_row.fill(NONE);
        queue.clear();
        queue.extend(0..n);
        while let Some(i) = queue.pop_front() {
            costs.row_costs(i).fill(&mut row);
            let (mut w1, mut w2, mut j1) = (f64::INFINITY, f64::INFINITY, 0);
            for (j, (&c, &p)) in row.iter().zip(&price).enumerate() {
                let w = c + p;
                if w < w2 {
                    if w < w1 {
                        w2 = w1;
                        w1 = w;
                        j1 = j;
                    } else {
                        w2 = w;
                    }
                }
            }
            let raise = if w2.is_finite() { w2 - w1 } else { 0.0 };
            price[j1] += raise + eps;
            let prev = col_to_row[j1];
            if prev != NONE {
                row_to_col[prev] = NONE;
                queue.push_back(prev);
            }
            col_to_row[j1] = i;
            row_to_col[i] = j1;
        }
        if eps <= eps_final {
            break;
        }
        eps = (eps / EPS_FACTOR).max(eps_final);
    }
    AuctionResult {
        v: price.iter().map(|p| -p).collect(),
        row_to_col,
    }
}
