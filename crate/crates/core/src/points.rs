//! Dense point batches shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A batch of `k` points in `d` dimensions, stored row-major.
///
/// Every entry is finite and both `k` and `d` are at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    k: usize,
    d: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(k: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidPoints(format!(
                "point set must be non-empty, got {k}x{d}"
            )));
        }
        if data.len() != k * d {
            return Err(Error::size(
                format!("{k}x{d}"),
                format!("{} values", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoints(format!(
                "non-finite value {} at point {}, coordinate {}",
                data[pos],
                pos / d,
                pos % d
            )));
        }
        Ok(Self { k, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::size(
                    format!("row 0 has dimension {d}"),
                    format!("row {i} has dimension {}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), d, data)
    }

    /// Builds a point set from single-precision values (network outputs).
    pub fn from_f32(k: usize, d: usize, data: &[f32]) -> Result<Self> {
        Self::new(k, d, data.iter().map(|&v| v as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.k
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.k, self.d)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32).collect()
    }

    /// Gathers the given rows, in order, into a new set.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.k {
                return Err(Error::InvalidCount(format!(
                    "row index {i} out of range for {} points",
                    self.k
                )));
            }
            data.extend_from_slice(self.point(i));
        }
        Self::new(indices.len(), self.d, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.k, self.d, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Stacks two sets with the same dimension.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        self.check_dim(other)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(self.k + other.k, self.d, data)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for p in self.points() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.k as f64);
        m
    }

    /// Axis-aligned bounding box as (min, max) per coordinate.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for p in self.points() {
            for c in 0..self.d {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        (lo, hi)
    }

    pub(crate) fn check_dim(&self, other: &PointSet) -> Result<()> {
        if self.d != other.d {
            return Err(Error::size(
                format!("{}x{}", self.k, self.d),
                format!("{}x{}", other.k, other.d),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &PointSet) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::size(
                format!("{}x{}", self.k, self.d),
                format!("{}x{}", other.k, other.d),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(PointSet::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(PointSet::new(0, 2, vec![]).is_err());
        assert!(PointSet::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![2.0]];
        assert!(matches!(
            PointSet::from_rows(&rows),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn select_and_bounds() {
        let p = PointSet::from_rows(&[[0.0, 5.0], [1.0, -1.0], [2.0, 3.0]]).unwrap();
        let s = p.select(&[2, 0]).unwrap();
        assert_eq!(s.as_slice(), &[2.0, 3.0, 0.0, 5.0]);
        let (lo, hi) = p.bounds();
        assert_eq!(lo, vec![0.0, -1.0]);
        assert_eq!(hi, vec![2.0, 5.0]);
        assert!(p.select(&[3]).is_err());
    }
}
