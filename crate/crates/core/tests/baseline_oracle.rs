use otmap::baseline::{kmeans_fit, sample_cluster_model, DEFAULT_MAX_ITERS};
use otmap::datasets::{generate, SyntheticKind, SyntheticSpec};
use otmap::ot::divergence;
use otmap::PointSet;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Plain Lloyd from uniformly drawn distinct starting points, no reseeding.
fn lloyd(points: &PointSet, k: usize, rng: &mut ChaCha8Rng) -> f64 {
    let d = points.dim();
    let rows: Vec<&[f64]> = points.points().collect();
    let mut centres: Vec<Vec<f64>> = sample(rng, rows.len(), k)
        .into_iter()
        .map(|i| rows[i].to_vec())
        .collect();
    let mut labels = vec![usize::MAX; rows.len()];
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in rows.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq(p, &centres[a]).total_cmp(&sq(p, &centres[b])))
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centres[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    rows.iter()
        .zip(&labels)
        .map(|(p, &l)| sq(p, &centres[l]))
        .sum()
}

fn reference_sse(points: &PointSet, k: usize, restarts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts)
        .map(|_| lloyd(points, k, &mut rng))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn moons_sse_within_five_percent_of_reference() {
    let pts = generate(&SyntheticSpec::new(SyntheticKind::Moons, 10_000, 11)).unwrap();
    let reference = reference_sse(&pts, 16, 10, 99);
    let fit = kmeans_fit(&pts, 16, DEFAULT_MAX_ITERS, 3).unwrap();
    assert!(
        fit.sse() <= 1.05 * reference,
        "sse {} vs reference {reference}",
        fit.sse()
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn sixteen_clusters_beat_eight() {
    let n = 2000;
    for kind in [SyntheticKind::Moons, SyntheticKind::Circles] {
        let (mut k8, mut k16) = (Vec::new(), Vec::new());
        for s in 0..5u64 {
            let train = generate(&SyntheticSpec::new(kind, n, 100 + s)).unwrap();
            let real = generate(&SyntheticSpec::new(kind, n, 200 + s)).unwrap();
            for (k, out) in [(8, &mut k8), (16, &mut k16)] {
                let model = kmeans_fit(&train, k, DEFAULT_MAX_ITERS, s).unwrap().model;
                let g = sample_cluster_model(&model, n, 300 + s).unwrap();
                out.push(divergence(&g, &real).unwrap());
            }
        }
        let (m8, m16) = (median(k8), median(k16));
        assert!(m16 < m8, "{kind:?}: k=16 {m16} vs k=8 {m8}");
    }
}
