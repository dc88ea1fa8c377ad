//! Exact optimal transport between equal-size point sets.
//!
//! Balanced transport between two uniform empirical measures with the same
//! number of atoms is a linear assignment problem, so every plan here is a
//! permutation. The solver is exact; there is no entropic smoothing.
//!
//! Small problems go straight to a dense shortest-augmenting-path solver.
//! Above [`WARM_START_THRESHOLD`] an epsilon-scaling auction first produces
//! near-optimal prices, then the same exact solver repairs every row that is
//! not tight under those prices. Both routes return an optimal permutation
//! and both are deterministic, but when several permutations tie for the
//! optimum the two routes may pick different ones.

mod auction;
mod cost;
mod lapjv;

pub use cost::{pairwise_cost, CostMatrix, CostMetric, CostSource, PointCosts, PointRow, RowCosts};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Largest assignment the solver accepts.
pub const MAX_ASSIGNMENT_SIZE: usize = 16_384;

/// Problems above this size start the exact solver from auction prices.
pub const WARM_START_THRESHOLD: usize = 512;

/// A bijection between two equal-size sets: source `i` goes to target `perm[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub total_cost: f64,
}

impl Assignment {
    fn from_perm<C: CostSource + ?Sized>(costs: &C, perm: Vec<usize>) -> Self {
        let mut a = Assignment {
            perm,
            total_cost: 0.0,
        };
        a.total_cost = a.cost_under(costs);
        a
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// True when `perm` is a permutation of `0..len`.
    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        for &j in &self.perm {
            if j >= seen.len() || seen[j] {
                return false;
            }
            seen[j] = true;
        }
        true
    }

    /// Sum of `costs` along this assignment, accumulated in row order.
    pub fn cost_under<C: CostSource + ?Sized>(&self, costs: &C) -> f64 {
        self.perm
            .iter()
            .enumerate()
            .map(|(i, &j)| costs.cost(i, j))
            .sum()
    }

    /// Target set reordered so row `i` is the partner of source `i`.
    pub fn matched_targets(&self, targets: &PointSet) -> Result<PointSet> {
        if targets.len() != self.perm.len() {
            return Err(Error::size(
                format!("assignment of size {}", self.perm.len()),
                format!("{} targets", targets.len()),
            ));
        }
        targets.select(&self.perm)
    }
}

/// Exact minimum-cost permutation for a dense square cost matrix.
pub fn solve_assignment(costs: &CostMatrix) -> Result<Assignment> {
    costs.validate_square()?;
    solve_source(costs)
}

/// Exact assignment between two point sets with costs evaluated on demand.
pub fn solve_point_assignment(
    a: &PointSet,
    b: &PointSet,
    metric: CostMetric,
) -> Result<Assignment> {
    let costs = PointCosts::new(a, b, metric)?;
    solve_source(&costs)
}

fn solve_source<C: CostSource + ?Sized>(costs: &C) -> Result<Assignment> {
    let n = costs.size();
    if n > MAX_ASSIGNMENT_SIZE {
        return Err(Error::PoolTooLarge {
            size: n,
            limit: MAX_ASSIGNMENT_SIZE,
        });
    }
    let perm = if n > WARM_START_THRESHOLD {
        let warm = auction::run(costs);
        lapjv::solve_warm(costs, warm.v, warm.row_to_col)
    } else {
        lapjv::solve(costs)
    };
    Ok(Assignment::from_perm(costs, perm))
}

/// Mean matched-pair distance under the optimal bijection from `a` to `b`.
///
/// The bijection minimises total `assign_metric` cost; the reported number
/// is the average `report_metric` distance along it.
pub fn ot_divergence(
    a: &PointSet,
    b: &PointSet,
    assign_metric: CostMetric,
    report_metric: CostMetric,
) -> Result<f64> {
    Ok(ot_divergence_with_plan(a, b, assign_metric, report_metric)?.0)
}

/// Like [`ot_divergence`], also returning the bijection.
pub fn ot_divergence_with_plan(
    a: &PointSet,
    b: &PointSet,
    assign_metric: CostMetric,
    report_metric: CostMetric,
) -> Result<(f64, Assignment)> {
    let plan = solve_point_assignment(a, b, assign_metric)?;
    let total: f64 = plan
        .perm
        .iter()
        .enumerate()
        .map(|(i, &j)| report_metric.eval(a.point(i), b.point(j)))
        .sum();
    Ok((total / a.len() as f64, plan))
}

/// Default evaluation divergence: squared-Euclidean plan, Euclidean report.
pub fn divergence(a: &PointSet, b: &PointSet) -> Result<f64> {
    ot_divergence(a, b, CostMetric::SquaredEuclidean, CostMetric::Euclidean)
}

/// Gradient with respect to `a` of `(1/k) sum_i c(a_i, b_sigma(i))` with the
/// assignment held fixed. Row-major `k x d`.
pub fn assignment_cost_gradient(
    a: &PointSet,
    b: &PointSet,
    sigma: &Assignment,
    metric: CostMetric,
) -> Result<Vec<f64>> {
    if metric != CostMetric::SquaredEuclidean {
        return Err(Error::UnsupportedMetric(metric));
    }
    a.check_same_shape(b)?;
    if sigma.len() != a.len() || !sigma.is_bijection() {
        return Err(Error::size(
            format!("{} points", a.len()),
            format!("invalid assignment of size {}", sigma.len()),
        ));
    }
    let scale = 2.0 / a.len() as f64;
    let mut grad = Vec::with_capacity(a.len() * a.dim());
    for (i, &j) in sigma.perm.iter().enumerate() {
        grad.extend(
            a.point(i)
                .iter()
                .zip(b.point(j))
                .map(|(x, y)| scale * (x - y)),
        );
    }
    Ok(grad)
}
