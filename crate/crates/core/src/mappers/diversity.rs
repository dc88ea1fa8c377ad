use rand::Rng;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Batches up to this size use every unordered pair; larger ones a random subset.
pub const ALL_PAIRS_LIMIT: usize = 512;

/// Which unordered pairs `(i, j)`, `i < j`, enter the mean pairwise distance.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSet {
    All,
    Listed(Vec<(usize, usize)>),
}

impl PairSet {
    /// All pairs for small batches, otherwise `2k` pairs drawn uniformly.
    pub fn for_batch<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        if k <= ALL_PAIRS_LIMIT {
            return PairSet::All;
        }
        let pairs = (0..2 * k)
            .map(|_| {
                let i = rng.random_range(0..k);
                let mut j = rng.random_range(0..k - 1);
                if j >= i {
                    j += 1;
                }
                (i.min(j), i.max(j))
            })
            .collect();
        PairSet::Listed(pairs)
    }

    fn for_each(&self, k: usize, mut f: impl FnMut(usize, usize)) -> usize {
        match self {
            PairSet::All => {
                for i in 0..k {
                    for j in i + 1..k {
                        f(i, j);
                    }
                }
                k * (k - 1) / 2
            }
            PairSet::Listed(pairs) => {
                for &(i, j) in pairs {
                    f(i, j);
                }
                pairs.len()
            }
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean Euclidean distance over the chosen pairs of `s`.
pub fn mean_pair_distance(s: &PointSet, pairs: &PairSet) -> Result<f64> {
    if s.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: s.len(),
        });
    }
    let mut sum = 0.0;
    let count = pairs.for_each(s.len(), |i, j| sum += distance(s.point(i), s.point(j)));
    Ok(sum / count as f64)
}

/// `|meanPairDist(p) - meanPairDist(z)|` over all pairs, with its gradient
/// with respect to `p` (row-major, same shape as `p`).
pub fn diversity_penalty(p: &PointSet, z: &PointSet) -> Result<(f64, Vec<f64>)> {
    diversity_penalty_with(p, z, &PairSet::All, &PairSet::All)
}

/// As [`diversity_penalty`] with explicit pair sets for `p` and `z`.
///
/// Where the absolute value has a kink (equal means) the zero subgradient is
/// returned, as is the zero contribution of coincident points.
pub fn diversity_penalty_with(
    p: &PointSet,
    z: &PointSet,
    p_pairs: &PairSet,
    z_pairs: &PairSet,
) -> Result<(f64, Vec<f64>)> {
    p.check_same_shape(z)?;
    let mean_p = mean_pair_distance(p, p_pairs)?;
    let mean_z = mean_pair_distance(z, z_pairs)?;
    let diff = mean_p - mean_z;
    let d = p.dim();
    let mut grad = vec![0.0; p.len() * d];
    if diff != 0.0 {
        let mut count = 0;
        let mut unit = vec![0.0; d];
        let pairs = p_pairs.for_each(p.len(), |i, j| {
            let (a, b) = (p.point(i), p.point(j));
            let dist = distance(a, b);
            count += 1;
            if dist > 0.0 {
                for ((u, x), y) in unit.iter_mut().zip(a).zip(b) {
                    *u = (x - y) / dist;
                }
                for c in 0..d {
                    grad[i * d + c] += unit[c];
                    grad[j * d + c] -= unit[c];
                }
            }
        });
        debug_assert_eq!(pairs, count);
        let scale = diff.signum() / count as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    Ok((diff.abs(), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random_set(k: usize, d: usize, seed: u64) -> PointSet {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        PointSet::new(
            k,
            d,
            (0..k * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_translated_and_scaled() {
        let z = random_set(20, 2, 1);
        assert_eq!(diversity_penalty(&z, &z).unwrap().0, 0.0);
        let shifted = z.map(|v| v + 3.5).unwrap();
        let (v, _) = diversity_penalty(&shifted, &z).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
        let doubled = z.map(|v| 2.0 * v).unwrap();
        let (v, _) = diversity_penalty(&doubled, &z).unwrap();
        let base = mean_pair_distance(&z, &PairSet::All).unwrap();
        assert!((v - base).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let one = random_set(1, 2, 0);
        assert!(matches!(
            diversity_penalty(&one, &one),
            Err(Error::TooFewPoints { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn large_batches_sample_two_k_distinct_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        assert_eq!(PairSet::for_batch(512, &mut rng), PairSet::All);
        let PairSet::Listed(pairs) = PairSet::for_batch(600, &mut rng) else {
            panic!("expected sampled pairs");
        };
        assert_eq!(pairs.len(), 1200);
        assert!(pairs.iter().all(|&(i, j)| i < j && j < 600));
    }
}
