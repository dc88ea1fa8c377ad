use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Ground cost between two points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostMetric {
    /// Training losses and assignment costs.
    #[default]
    SquaredEuclidean,
    /// Divergence reporting.
    Euclidean,
    /// Feedback plots.
    L1,
}

impl CostMetric {
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            CostMetric::SquaredEuclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            CostMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            CostMetric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CostMetric::SquaredEuclidean => "squared_euclidean",
            CostMetric::Euclidean => "euclidean",
            CostMetric::L1 => "l1",
        }
    }
}

impl std::str::FromStr for CostMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "squared_euclidean" | "sqeuclidean" | "sq" => Ok(CostMetric::SquaredEuclidean),
            "euclidean" | "l2" => Ok(CostMetric::Euclidean),
            "l1" | "manhattan" => Ok(CostMetric::L1),
            other => Err(Error::Parse(format!("unknown cost metric '{other}'"))),
        }
    }
}

/// Anything the assignment solver can read square costs from.
pub trait CostSource {
    /// Costs of one fixed row, read column by column in the solver's hot loops.
    type Row<'r>: RowCosts
    where
        Self: 'r;

    fn size(&self) -> usize;

    fn row_costs(&self, row: usize) -> Self::Row<'_>;

    #[inline]
    fn cost(&self, row: usize, col: usize) -> f64 {
        self.row_costs(row).at(col)
    }
}

pub trait RowCosts {
    fn at(&self, col: usize) -> f64;

    /// Writes the whole row into `out` (length = number of columns).
    fn fill(&self, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.at(j);
        }
    }
}

impl RowCosts for &[f64] {
    #[inline]
    fn at(&self, col: usize) -> f64 {
        self[col]
    }

    fn fill(&self, out: &mut [f64]) {
        out.copy_from_slice(self);
    }
}

/// Dense k x k matrix of non-negative costs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    metric: Option<CostMetric>,
}

impl CostMatrix {
    /// Wraps raw values. Shape and entries are validated by the solver, not here,
    /// so that error paths (non-square, NaN) can be exercised.
    pub fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::size(
                format!("{rows}x{cols}"),
                format!("{} values", values.len()),
            ));
        }
        Ok(Self {
            rows,
            cols,
            values,
            metric: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.as_ref().len() != cols {
                return Err(Error::size(
                    format!("{cols} columns"),
                    format!("{} columns", r.as_ref().len()),
                ));
            }
            values.extend_from_slice(r.as_ref());
        }
        Self::from_raw(rows.len(), cols, values)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn metric(&self) -> Option<CostMetric> {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn validate_square(&self) -> Result<()> {
        if self.rows != self.cols || self.rows == 0 {
            return Err(Error::size(
                format!("{}x{}", self.rows, self.cols),
                "a non-empty square matrix",
            ));
        }
        for (idx, &v) in self.values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidCost {
                    row: idx / self.cols,
                    col: idx % self.cols,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

impl CostSource for CostMatrix {
    type Row<'r> = &'r [f64];

    fn size(&self) -> usize {
        self.rows
    }

    #[inline]
    fn row_costs(&self, row: usize) -> &[f64] {
        self.row(row)
    }

    #[inline]
    fn cost(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// Costs evaluated on demand from two point sets; avoids materialising
/// k^2 values for the large evaluation solves.
pub struct PointCosts<'a> {
    a: &'a [f64],
    b: &'a [f64],
    k: usize,
    d: usize,
    metric: CostMetric,
    /// Target coordinates split by axis for planar squared costs.
    planar: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> PointCosts<'a> {
    pub fn new(a: &'a PointSet, b: &'a PointSet, metric: CostMetric) -> Result<Self> {
        a.check_same_shape(b)?;
        let planar = (a.dim() == 2 && metric == CostMetric::SquaredEuclidean)
            .then(|| b.points().map(|p| (p[0], p[1])).unzip());
        Ok(Self {
            a: a.as_slice(),
            b: b.as_slice(),
            k: a.len(),
            d: a.dim(),
            metric,
            planar,
        })
    }
}

impl CostSource for PointCosts<'_> {
    type Row<'r>
        = PointRow<'r>
    where
        Self: 'r;

    fn size(&self) -> usize {
        self.k
    }

    #[inline]
    fn row_costs(&self, row: usize) -> PointRow<'_> {
        let d = self.d;
        let source = &self.a[row * d..row * d + d];
        if let Some((tx, ty)) = &self.planar {
            PointRow::PlanarSq {
                x: source[0],
                y: source[1],
                tx,
                ty,
            }
        } else {
            PointRow::General {
                source,
                targets: self.b,
                metric: self.metric,
            }
        }
    }
}

/// One source point against every target.
pub enum PointRow<'a> {
    PlanarSq {
        x: f64,
        y: f64,
        tx: &'a [f64],
        ty: &'a [f64],
    },
    General {
        source: &'a [f64],
        targets: &'a [f64],
        metric: CostMetric,
    },
}

impl RowCosts for PointRow<'_> {
    #[inline]
    fn at(&self, col: usize) -> f64 {
        match *self {
            PointRow::PlanarSq { x, y, tx, ty } => {
                let dx = x - tx[col];
                let dy = y - ty[col];
                dx * dx + dy * dy
            }
            PointRow::General {
                source,
                targets,
                metric,
            } => {
                let d = source.len();
                metric.eval(source, &targets[col * d..col * d + d])
            }
        }
    }

    fn fill(&self, out: &mut [f64]) {
        match *self {
            PointRow::PlanarSq { x, y, tx, ty } => {
                for ((o, &px), &py) in out.iter_mut().zip(tx).zip(ty) {
                    let dx = x - px;
                    let dy = y - py;
                    *o = dx * dx + dy * dy;
                }
            }
            PointRow::General {
                source,
                targets,
                metric,
            } => {
                let d = source.len();
                for (o, t) in out.iter_mut().zip(targets.chunks_exact(d)) {
                    *o = metric.eval(source, t);
                }
            }
        }
    }
}

/// Cost of every (source, target) pair under `metric`.
pub fn pairwise_cost(a: &PointSet, b: &PointSet, metric: CostMetric) -> Result<CostMatrix> {
    a.check_same_shape(b)?;
    let k = a.len();
    let mut values = Vec::with_capacity(k * k);
    for p in a.points() {
        for q in b.points() {
            values.push(metric.eval(p, q));
        }
    }
    Ok(CostMatrix {
        rows: k,
        cols: k,
        values,
        metric: Some(metric),
    })
}
