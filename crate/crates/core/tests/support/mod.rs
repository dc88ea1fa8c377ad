//! Oracles shared by the gradient, assignment and acceptance tests.
#![allow(dead_code)]

use otmap::mappers::{
    diversity_penalty, frozen_objective, frozen_objective_gradient, mean_pair_distance, PairSet,
};
use otmap::neural::{leaky_stack, Activation, Layer, LayerSpec, Matrix, Mlp};
use otmap::ot::{solve_point_assignment, CostMatrix, CostMetric};
use otmap::PointSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const H: f64 = 1e-4;

/// Relative error measured against `max(|a|, |n|, 1e-4)`.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-4)
}

/// Minimum over all permutations, each summed in row order.
pub fn brute_force_min(c: &CostMatrix) -> f64 {
    let n = c.shape().0;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| c.get(i, j)).sum();
        best = best.min(total);
    });
    best
}

fn permute(p: &mut [usize], at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == p.len() {
        visit(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, visit);
        p.swap(at, i);
    }
}

pub fn random_points(k: usize, d: usize, rng: &mut ChaCha8Rng) -> PointSet {
    PointSet::new(
        k,
        d,
        (0..k * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn randomise(net: &mut Mlp<f64>, rng: &mut ChaCha8Rng) {
    for p in net.params_mut() {
        *p = rng.random_range(-1.0..1.0);
    }
}

/// Plain triple-loop forward pass, returning every pre-activation too.
pub fn reference_forward(net: &Mlp<f64>, x: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cur = x.to_vec();
    let mut pre_all = Vec::new();
    for layer in net.layers() {
        let (din, dout) = (layer.spec.in_dim, layer.spec.out_dim);
        let mut next = vec![0.0; k * dout];
        for r in 0..k {
            for o in 0..dout {
                let mut z = layer.bias[o];
                for i in 0..din {
                    z += layer.weights[o * din + i] * cur[r * din + i];
                }
                pre_all.push(z);
                next[r * dout + o] = match layer.spec.activation {
                    Activation::LeakyRelu { slope } => {
                        if z > 0.0 {
                            z
                        } else {
                            slope * z
                        }
                    }
                    Activation::Identity => z,
                    Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
                };
            }
        }
        cur = next;
    }
    (cur, pre_all)
}

/// Pre-activations of every layer, read off truncated copies of the net.
pub fn pre_activations(net: &Mlp<f64>, x: &PointSet) -> Vec<f64> {
    let mut out = Vec::new();
    for l in 1..=net.layers().len() {
        let mut layers: Vec<Layer<f64>> = net.layers()[..l].to_vec();
        let last = layers.last_mut().unwrap();
        last.spec = LayerSpec::new(last.spec.in_dim, last.spec.out_dim, Activation::Identity);
        let trunc = Mlp::from_layers(layers).unwrap();
        out.extend_from_slice(trunc.forward(x).unwrap().as_slice());
    }
    out
}

fn weighted_output(net: &Mlp<f64>, x: &Matrix<f64>, g: &Matrix<f64>) -> f64 {
    let y = net.forward_matrix(x).unwrap();
    y.as_slice()
        .iter()
        .zip(g.as_slice())
        .map(|(a, b)| a * b)
        .sum()
}

/// Worst relative error over all parameters of `analytic` against central
/// differences of `f`.
fn worst_param_error(net: &Mlp<f64>, analytic: &[f64], f: impl Fn(&Mlp<f64>) -> f64) -> f64 {
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (idx, &a) in analytic.iter().enumerate() {
        let orig = *probe.params_mut().nth(idx).unwrap();
        *probe.params_mut().nth(idx).unwrap() = orig + H;
        let plus = f(&probe);
        *probe.params_mut().nth(idx).unwrap() = orig - H;
        let minus = f(&probe);
        *probe.params_mut().nth(idx).unwrap() = orig;
        worst = worst.max(rel_err(a, (plus - minus) / (2.0 * H)));
    }
    worst
}

/// Backprop of `sum(net(x) * g)` against central differences.
pub fn backprop_error(net: &Mlp<f64>, x: &Matrix<f64>, g: &Matrix<f64>) -> f64 {
    let grads = net.backward(x, g).unwrap();
    let analytic: Vec<f64> = grads.iter().copied().collect();
    worst_param_error(net, &analytic, |n| weighted_output(n, x, g))
}

/// A random net plus batch whose pre-activations all sit clear of the
/// LeakyReLU kink, so a step of `H` in any parameter cannot cross it.
pub fn smooth_instance(
    specs: &[LayerSpec],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Mlp<f64>, Matrix<f64>, Matrix<f64>) {
    let mut net = Mlp::<f64>::init(specs, rng.random()).unwrap();
    let din = specs[0].in_dim;
    let dout = specs.last().unwrap().out_dim;
    loop {
        randomise(&mut net, rng);
        let x = random_matrix(k, din, rng);
        let (_, pre) = reference_forward(&net, x.as_slice(), k);
        if pre.iter().all(|z| z.abs() > 1e-2) {
            return (net, x, random_matrix(k, dout, rng));
        }
    }
}

fn frozen_value(
    net: &Mlp<f64>,
    noise: &PointSet,
    z: &PointSet,
    perm: &[usize],
    lambda: f64,
) -> f64 {
    let p = net.forward(noise).unwrap();
    frozen_objective(&p, z, perm, lambda, &PairSet::All)
        .unwrap()
        .0
}

/// Parameter gradient of the frozen-plan OTgen objective (transport term
/// plus `lambda` times the diversity penalty) against central differences,
/// on a random `2 -> hidden -> hidden -> 2` net with `k` points.
///
/// `None` when the instance sits within `1e-2` of the penalty's kink.
pub fn frozen_plan_error(k: usize, hidden: usize, lambda: f64, seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = leaky_stack(2, &[hidden, hidden], 2);
    let (net, noise, z) = loop {
        let mut net = Mlp::<f64>::init(&specs, rng.random()).unwrap();
        randomise(&mut net, &mut rng);
        let noise = random_points(k, 2, &mut rng);
        let z = random_points(k, 2, &mut rng);
        if pre_activations(&net, &noise).iter().all(|v| v.abs() > 1e-2) {
            break (net, noise, z);
        }
    };
    let p = net.forward(&noise).unwrap();
    let sigma = solve_point_assignment(&p, &z, CostMetric::SquaredEuclidean).unwrap();
    if lambda > 0.0 {
        let gap = mean_pair_distance(&p, &PairSet::All).unwrap()
            - mean_pair_distance(&z, &PairSet::All).unwrap();
        if gap.abs() <= 1e-2 {
            return None;
        }
    }
    let (value, grads) = frozen_objective_gradient(&net, &noise, &z, &sigma.perm, lambda).unwrap();
    assert!((value - frozen_value(&net, &noise, &z, &sigma.perm, lambda)).abs() < 1e-12);
    let analytic: Vec<f64> = grads.iter().copied().collect();
    Some(worst_param_error(&net, &analytic, |n| {
        frozen_value(n, &noise, &z, &sigma.perm, lambda)
    }))
}

/// Diversity penalty gradient against central differences on random
/// `k x d` sets. `None` within `1e-3` of the kink.
pub fn diversity_error(k: usize, d: usize, seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_points(k, d, &mut rng);
    let z = random_points(k, d, &mut rng);
    let gap = mean_pair_distance(&p, &PairSet::All).unwrap()
        - mean_pair_distance(&z, &PairSet::All).unwrap();
    if gap.abs() <= 1e-3 {
        return None;
    }
    let (_, grad) = diversity_penalty(&p, &z).unwrap();
    let f = |v: Vec<f64>| {
        diversity_penalty(&PointSet::new(k, d, v).unwrap(), &z)
            .unwrap()
            .0
    };
    let mut worst: f64 = 0.0;
    for (idx, &g) in grad.iter().enumerate() {
        let mut plus = p.as_slice().to_vec();
        let mut minus = plus.clone();
        plus[idx] += H;
        minus[idx] -= H;
        worst = worst.max(rel_err(g, (f(plus) - f(minus)) / (2.0 * H)));
    }
    Some(worst)
}
