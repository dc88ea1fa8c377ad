//! K-means clusters approximated by Gaussians, used as a reference generator.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

pub const DEFAULT_MAX_ITERS: usize = 100;
/// Added to the diagonal of every fitted covariance.
pub const COVARIANCE_RIDGE: f64 = 1e-6;
/// Most negative Cholesky pivot still treated as zero.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Mixture of `k` Gaussians in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub d: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Row-major `d x d` matrices.
    pub covariances: Vec<Vec<f64>>,
}

impl ClusterModel {
    pub fn validate(&self) -> Result<()> {
        let (k, d) = (self.k, self.d);
        if k == 0 || d == 0 {
            return Err(Error::ModelError("empty model".into()));
        }
        if self.weights.len() != k || self.means.len() != k || self.covariances.len() != k {
            return Err(Error::ModelError(format!(
                "expected {k} weights, means and covariances"
            )));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::ModelError(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::ModelError(format!("weights sum to {total}, not 1")));
        }
        for (c, (m, s)) in self.means.iter().zip(&self.covariances).enumerate() {
            if m.len() != d || s.len() != d * d {
                return Err(Error::ModelError(format!(
                    "cluster {c} has wrong dimensions"
                )));
            }
            if m.iter().chain(s).any(|v| !v.is_finite()) {
                return Err(Error::ModelError(format!(
                    "cluster {c} has non-finite entries"
                )));
            }
            for a in 0..d {
                for b in 0..a {
                    if (s[a * d + b] - s[b * d + a]).abs() > 1e-12 * (1.0 + s[a * d + b].abs()) {
                        return Err(Error::ModelError(format!(
                            "covariance of cluster {c} is not symmetric"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Everything a K-means run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub model: ClusterModel,
    pub centroids: PointSet,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn sse(&self) -> f64 {
        *self.sse_history.last().expect("at least one iteration")
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid for every point (lowest index on ties), with the squared
/// distance to it.
fn assign(points: &PointSet, centroids: &[f64], d: usize, labels: &mut [usize], dist: &mut [f64]) {
    for (i, p) in points.points().enumerate() {
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for (c, m) in centroids.chunks_exact(d).enumerate() {
            let dd = sq_dist(p, m);
            if dd < best_d {
                best = c;
                best_d = dd;
            }
        }
        labels[i] = best;
        dist[i] = best_d;
    }
}

fn kmeans_plus_plus(points: &PointSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, d) = points.shape();
    let mut centroids = Vec::with_capacity(k * d);
    centroids.extend_from_slice(points.point(rng.random_range(0..n)));
    let mut nearest: Vec<f64> = points
        .points()
        .map(|p| sq_dist(p, &centroids[..d]))
        .collect();
    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points.point(pick).to_vec();
        for (nd, p) in nearest.iter_mut().zip(points.points()) {
            *nd = nd.min(sq_dist(p, &c));
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Lloyd's algorithm from k-means++ seeds, then one Gaussian per cluster.
///
/// Stops after `max_iters` assignment steps or once no label changes. A
/// cluster left empty is re-seeded at the point farthest from its current
/// centroid among clusters with two or more members (lowest index on ties).
/// Each Gaussian uses the cluster's sample mean and unbiased sample
/// covariance plus `COVARIANCE_RIDGE * I`; weights are cluster fractions.
pub fn kmeans_fit(points: &PointSet, k: usize, max_iters: usize, seed: u64) -> Result<KMeansFit> {
    let (n, d) = points.shape();
    if k == 0 || k > n {
        return Err(Error::InvalidCount(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut new_labels = vec![0; n];
    let mut dist = vec![0.0; n];
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        assign(points, &centroids, d, &mut new_labels, &mut dist);
        let mut counts = vec![0usize; k];
        for &l in &new_labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Only points whose cluster keeps at least one other member
                // are eligible, so no further cluster is emptied.
                let far = (0..n)
                    .filter(|&i| counts[new_labels[i]] > 1)
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dist[b] >= dist[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("k <= n leaves a cluster with two members");
                counts[new_labels[far]] -= 1;
                new_labels[far] = c;
                counts[c] = 1;
                dist[far] = 0.0;
                centroids[c * d..(c + 1) * d].copy_from_slice(points.point(far));
            }
        }
        sse_history.push(dist.iter().sum());
        let changed = new_labels != labels;
        labels.copy_from_slice(&new_labels);
        centroids = cluster_means(points, &labels, &counts);
        if !changed {
            break;
        }
    }
    // SSE of the final labels against the final means.
    let final_sse: f64 = points
        .points()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l * d..(l + 1) * d]))
        .sum();
    sse_history.push(final_sse);
    let model = fit_gaussians(points, &labels, k)?;
    Ok(KMeansFit {
        model,
        centroids: PointSet::new(k, d, centroids)?,
        labels,
        sse_history,
        iterations,
    })
}

fn cluster_means(points: &PointSet, labels: &[usize], counts: &[usize]) -> Vec<f64> {
    let d = points.dim();
    let mut sums = vec![0.0; counts.len() * d];
    for (p, &l) in points.points().zip(labels) {
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        for s in &mut sums[c * d..(c + 1) * d] {
            *s /= count as f64;
        }
    }
    sums
}

/// One Gaussian per label with ridge-regularised sample covariance.
pub fn fit_gaussians(points: &PointSet, labels: &[usize], k: usize) -> Result<ClusterModel> {
    let (n, d) = points.shape();
    if labels.len() != n {
        return Err(Error::size(
            format!("{n} points"),
            format!("{} labels", labels.len()),
        ));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::InvalidConfig(format!(
                "label {l} out of range for {k} clusters"
            )));
        }
        counts[l] += 1;
    }
    let means = cluster_means(points, labels, &counts);
    let mut cov = vec![vec![0.0; d * d]; k];
    for (p, &l) in points.points().zip(labels) {
        let m = &means[l * d..(l + 1) * d];
        let s = &mut cov[l];
        for a in 0..d {
            for b in 0..=a {
                s[a * d + b] += (p[a] - m[a]) * (p[b] - m[b]);
            }
        }
    }
    for (s, &count) in cov.iter_mut().zip(&counts) {
        let denom = count.saturating_sub(1).max(1) as f64;
        for a in 0..d {
            for b in 0..=a {
                let v = if count > 1 { s[a * d + b] / denom } else { 0.0 };
                s[a * d + b] = v;
                s[b * d + a] = v;
            }
            s[a * d + a] += COVARIANCE_RIDGE;
        }
    }
    let model = ClusterModel {
        k,
        d,
        weights: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        means: means.chunks_exact(d).map(<[f64]>::to_vec).collect(),
        covariances: cov,
    };
    model.validate()?;
    Ok(model)
}

/// Lower-triangular `L` with `L L^T = s`, allowing semidefinite input: a
/// pivot within `PSD_TOLERANCE` of zero yields a zero column.
pub fn cholesky_psd(s: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut pivot = s[j * d + j];
        for c in 0..j {
            pivot -= l[j * d + c] * l[j * d + c];
        }
        if pivot < -PSD_TOLERANCE {
            return Err(Error::ModelError(format!(
                "covariance is not positive semidefinite (pivot {pivot:e} at {j})"
            )));
        }
        if pivot <= PSD_TOLERANCE {
            continue;
        }
        let root = pivot.sqrt();
        l[j * d + j] = root;
        for i in j + 1..d {
            let mut v = s[i * d + j];
            for c in 0..j {
                v -= l[i * d + c] * l[j * d + c];
            }
            l[i * d + j] = v / root;
        }
    }
    Ok(l)
}

/// `n` draws: a cluster chosen in proportion to its weight, then a Gaussian
/// draw from it.
pub fn sample_cluster_model(model: &ClusterModel, n: usize, seed: u64) -> Result<PointSet> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidCount("cannot sample zero points".into()));
    }
    let d = model.d;
    let factors = model
        .covariances
        .iter()
        .map(|s| cholesky_psd(s, d))
        .collect::<Result<Vec<_>>>()?;
    let pick = WeightedIndex::new(&model.weights)
        .map_err(|e| Error::ModelError(format!("cluster weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut xi = vec![0.0; d];
    for _ in 0..n {
        let c = pick.sample(&mut rng);
        for x in xi.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        let (m, l) = (&model.means[c], &factors[c]);
        for a in 0..d {
            let mut v = m[a];
            for b in 0..=a {
                v += l[a * d + b] * xi[b];
            }
            data.push(v);
        }
    }
    PointSet::new(n, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_clusters_are_recovered() {
        let locs = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let rows: Vec<[f64; 2]> = (0..30).map(|i| locs[i % 3]).collect();
        let pts = PointSet::from_rows(&rows).unwrap();
        let fit = kmeans_fit(&pts, 3, 100, 4).unwrap();
        let mut means = fit.model.means.clone();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            means,
            vec![vec![0.0, 0.0], vec![0.0, 10.0], vec![10.0, 0.0]]
        );
        for (w, s) in fit.model.weights.iter().zip(&fit.model.covariances) {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
            assert_eq!(s, &vec![COVARIANCE_RIDGE, 0.0, 0.0, COVARIANCE_RIDGE]);
        }
        assert_eq!(fit.sse(), 0.0);
    }

    #[test]
    fn single_cluster_is_global_moments() {
        let pts = PointSet::from_rows(&[[1.0, 2.0], [3.0, 0.0], [2.0, 4.0], [0.0, 1.0]]).unwrap();
        let fit = kmeans_fit(&pts, 1, 10, 0).unwrap();
        assert_eq!(fit.model.means[0], vec![1.5, 1.75]);
        // Unbiased covariance computed by hand.
        let s = &fit.model.covariances[0];
        let expect = [
            5.0 / 3.0 + COVARIANCE_RIDGE,
            -0.5 / 3.0,
            -0.5 / 3.0,
            8.75 / 3.0 + COVARIANCE_RIDGE,
        ];
        for (a, b) in s.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn sse_never_increases() {
        let pts = crate::datasets::make_moons(2000, 0.1, 5).unwrap();
        let fit = kmeans_fit(&pts, 16, 100, 2).unwrap();
        for w in fit.sse_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", fit.sse_history);
        }
    }

    #[test]
    fn degenerate_gaussian_returns_mean() {
        let model = ClusterModel {
            k: 1,
            d: 2,
            weights: vec![1.0],
            means: vec![vec![0.5, -2.0]],
            covariances: vec![vec![0.0; 4]],
        };
        let s = sample_cluster_model(&model, 50, 1).unwrap();
        assert!(s.points().all(|p| p == [0.5, -2.0]));
    }

    #[test]
    fn indefinite_covariance_is_rejected() {
        let model = ClusterModel {
            k: 1,
            d: 2,
            weights: vec![1.0],
            means: vec![vec![0.0, 0.0]],
            covariances: vec![vec![1.0, 2.0, 2.0, 1.0]],
        };
        assert!(matches!(
            sample_cluster_model(&model, 5, 0),
            Err(Error::ModelError(_))
        ));
    }

    #[test]
    fn sample_mean_converges() {
        let model = ClusterModel {
            k: 1,
            d: 2,
            weights: vec![1.0],
            means: vec![vec![1.0, -1.0]],
            covariances: vec![vec![0.25, 0.1, 0.1, 0.09]],
        };
        let n = 20_000;
        let m = sample_cluster_model(&model, n, 3).unwrap().mean();
        assert!((m[0] - 1.0).abs() < 3.0 * 0.5 / (n as f64).sqrt());
        assert!((m[1] + 1.0).abs() < 3.0 * 0.3 / (n as f64).sqrt());
    }

    #[test]
    fn model_json_round_trip() {
        let pts = crate::datasets::make_circles(500, 0.05, 0.5, 1).unwrap();
        let model = kmeans_fit(&pts, 4, 100, 1).unwrap().model;
        let json = serde_json::to_string(&model).unwrap();
        assert_eq!(serde_json::from_str::<ClusterModel>(&json).unwrap(), model);
    }

    #[test]
    fn bad_counts() {
        let pts = PointSet::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(kmeans_fit(&pts, 2, 10, 0).is_err());
        assert!(kmeans_fit(&pts, 0, 10, 0).is_err());
    }
}
