//! Dense shortest-augmenting-path assignment solver (Jonker-Volgenant).
//!
//! Column reduction with reduction transfer seeds a partial assignment, then
//! every row left free is augmented along a Dijkstra shortest path over
//! reduced costs. The augmenting row reduction phase of the original method
//! is omitted: on geometric costs it cycles through long chains of
//! reassignments and costs far more than it saves.
//!
//! Every comparison is exact (no epsilon) and every scan runs in increasing
//! index order, so a given cost matrix always yields the same permutation.
//! Among equal-cost optima the one reached first by that fixed order wins:
//! lower row indices are seeded and augmented first, and ties in a scan go to
//! the lowest column index.

use super::cost::{CostSource, RowCosts};

const NONE: usize = usize::MAX;

/// Solves the square assignment problem; returns `perm` with `perm[row] = col`.
///
/// Costs must be finite. The caller validates that.
pub(crate) fn solve<C: CostSource + ?Sized>(costs: &C) -> Vec<usize> {
    let n = costs.size();
    match n {
        0 => return Vec::new(),
        1 => return vec![0],
        _ => {}
    }
    let mut s = Solver {
        costs,
        n,
        v: vec![0.0; n],
        row_to_col: vec![NONE; n],
        col_to_row: vec![NONE; n],
    };
    let free_rows = s.column_reduction();
    s.augment(&free_rows);
    s.row_to_col
}

/// Exact solve starting from given column duals and a complete assignment
/// (typically from an auction). Rows whose assigned column is not an exact
/// minimiser of `c(i, j) - v[j]` are released and re-augmented, so the
/// result carries the same optimality certificate as a cold start.
pub(crate) fn solve_warm<C: CostSource + ?Sized>(
    costs: &C,
    v: Vec<f64>,
    row_to_col: Vec<usize>,
) -> Vec<usize> {
    let n = costs.size();
    let mut col_to_row = vec![NONE; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut s = Solver {
        costs,
        n,
        v,
        row_to_col,
        col_to_row,
    };
    let free_rows = s.release_slack_rows();
    s.augment(&free_rows);
    s.row_to_col
}

struct Solver<'a, C: ?Sized> {
    costs: &'a C,
    n: usize,
    /// Column dual variables.
    v: Vec<f64>,
    row_to_col: Vec<usize>,
    col_to_row: Vec<usize>,
}

impl<C: CostSource + ?Sized> Solver<'_, C> {
    fn column_reduction(&mut self) -> Vec<usize> {
        let n = self.n;
        // Column minima, scanning rows in order so the lowest row wins ties.
        let mut col_min = vec![f64::INFINITY; n];
        let mut col_argmin = vec![0usize; n];
        for i in 0..n {
            let row = self.costs.row_costs(i);
            for j in 0..n {
                let c = row.at(j);
                if c < col_min[j] {
                    col_min[j] = c;
                    col_argmin[j] = i;
                }
            }
        }
        self.v.copy_from_slice(&col_min);

        let mut unique = vec![true; n];
        for j in (0..n).rev() {
            let i = col_argmin[j];
            if self.row_to_col[i] == NONE {
                self.row_to_col[i] = j;
                self.col_to_row[j] = i;
            } else {
                unique[i] = false;
                self.col_to_row[j] = NONE;
            }
        }

        let mut free_rows = Vec::new();
        for (i, &single) in unique.iter().enumerate() {
            if self.row_to_col[i] == NONE {
                free_rows.push(i);
            } else if single {
                // Reduction transfer from the assigned column to the row.
                let j = self.row_to_col[i];
                let row = self.costs.row_costs(i);
                let mut min = f64::INFINITY;
                for j2 in 0..n {
                    if j2 != j {
                        let c = row.at(j2) - self.v[j2];
                        if c < min {
                            min = c;
                        }
                    }
                }
                self.v[j] -= min;
            }
        }
        free_rows
    }

    fn release_slack_rows(&mut self) -> Vec<usize> {
        let mut row = vec![0.0; self.n];
        let mut free_rows = Vec::new();
        for i in 0..self.n {
            let j0 = self.row_to_col[i];
            self.costs.row_costs(i).fill(&mut row);
            let u = row[j0] - self.v[j0];
            if row.iter().zip(&self.v).any(|(&c, &v)| c - v < u) {
                self.row_to_col[i] = NONE;
                self.col_to_row[j0] = NONE;
                free_rows.push(i);
            }
        }
        free_rows
    }

    fn augment(&mut self, free_rows: &[usize]) {
        let n = self.n;
        let mut scratch = PathScratch {
            pred: vec![0; n],
            dist: vec![0.0; n],
            penalty: vec![0.0; n],
            row: vec![0.0; n],
            settled: Vec::with_capacity(n),
        };
        for &free_row in free_rows {
            let mut j = self.shortest_path(free_row, &mut scratch);
            let mut steps = 0;
            loop {
                let i = scratch.pred[j];
                self.col_to_row[j] = i;
                std::mem::swap(&mut j, &mut self.row_to_col[i]);
                if i == free_row {
                    break;
                }
                steps += 1;
                assert!(steps <= n, "augmenting path longer than matrix size");
            }
        }
    }

    /// Dijkstra from `start` over reduced costs; stops when the column
    /// settled next is free, then updates the duals of the settled columns.
    ///
    /// Settled columns carry an infinite penalty so that relaxation and the
    /// minimum search run over contiguous arrays. Among equal distances the
    /// lowest column index is settled first.
    fn shortest_path(&mut self, start: usize, s: &mut PathScratch) -> usize {
        s.settled.clear();
        s.penalty.fill(0.0);
        s.pred.fill(start);
        self.costs.row_costs(start).fill(&mut s.row);
        for ((d, &c), &v) in s.dist.iter_mut().zip(&s.row).zip(&self.v) {
            *d = c - v;
        }

        let final_j = loop {
            let j = argmin_open(&s.dist, &s.penalty);
            s.settled.push(j);
            s.penalty[j] = f64::INFINITY;
            let i = self.col_to_row[j];
            if i == NONE {
                break j;
            }
            self.costs.row_costs(i).fill(&mut s.row);
            let h = s.row[j] - self.v[j] - s.dist[j];
            for ((((d, p), &c), &v), &pen) in s
                .dist
                .iter_mut()
                .zip(s.pred.iter_mut())
                .zip(&s.row)
                .zip(&self.v)
                .zip(&s.penalty)
            {
                let cred = c - v - h + pen;
                let better = cred < *d;
                *d = if better { cred } else { *d };
                *p = if better { i } else { *p };
            }
        };

        let min_dist = s.dist[final_j];
        for &j in &s.settled[..s.settled.len() - 1] {
            self.v[j] += s.dist[j] - min_dist;
        }
        final_j
    }
}

struct PathScratch {
    pred: Vec<usize>,
    dist: Vec<f64>,
    /// 0 for open columns, +inf once settled.
    penalty: Vec<f64>,
    row: Vec<f64>,
    settled: Vec<usize>,
}

/// Lowest-index column minimising `dist + penalty`.
fn argmin_open(dist: &[f64], penalty: &[f64]) -> usize {
    const LANES: usize = 8;
    let mut lane_min = [f64::INFINITY; LANES];
    let n = dist.len();
    let split = n - n % LANES;
    for (d, p) in dist[..split]
        .chunks_exact(LANES)
        .zip(penalty[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            let x = d[l] + p[l];
            lane_min[l] = if x < lane_min[l] { x } else { lane_min[l] };
        }
    }
    let mut best = lane_min
        .iter()
        .fold(f64::INFINITY, |m, &x| if x < m { x } else { m });
    for j in split..n {
        let x = dist[j] + penalty[j];
        if x < best {
            best = x;
        }
    }
    dist.iter()
        .zip(penalty)
        .position(|(&d, &p)| d + p == best)
        .expect("at least one open column")
}
