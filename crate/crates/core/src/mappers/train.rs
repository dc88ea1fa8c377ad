use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::diversity::{diversity_penalty_with, PairSet};
use super::prior::{PriorSampler, PriorSpec};
use crate::error::{Error, Result};
use crate::neural::{adam_step, AdamState, Gradients, Matrix, Mlp, Real, RngState};
use crate::ot::{solve_point_assignment, Assignment, CostMetric};
use crate::points::PointSet;

/// Hyperparameters shared by both mapping algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_k: usize,
    pub lr: f64,
    /// Weight of the diversity penalty (OTgen only).
    pub lambda_div: f64,
    /// Size of the noise/target pool solved once by OTtrans.
    pub transport_pool_m: usize,
    pub prior: PriorSpec,
    /// Seeds minibatch selection and target shuffling.
    pub seed: u64,
    pub cost: CostMetric,
    /// Record a feedback trace every this many OTgen steps (0 = never).
    #[serde(default)]
    pub feedback_every: usize,
}

impl TrainConfig {
    /// 10K steps, batch 128, learning rate 3e-4, no diversity term,
    /// pool of 4096, uniform prior of dimension `prior_dim`.
    pub fn new(prior_dim: usize, seed: u64) -> Self {
        Self {
            steps: 10_000,
            batch_k: 128,
            lr: 3e-4,
            lambda_div: 0.0,
            transport_pool_m: 4096,
            prior: PriorSpec::uniform(prior_dim, seed.wrapping_add(1)),
            seed,
            cost: CostMetric::SquaredEuclidean,
            feedback_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        if self.steps == 0 || self.batch_k == 0 || self.transport_pool_m == 0 {
            return Err(Error::InvalidConfig(
                "steps, batch_k and transport_pool_m must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if !(self.lambda_div >= 0.0 && self.lambda_div.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda_div {} must be non-negative",
                self.lambda_div
            )));
        }
        if self.cost != CostMetric::SquaredEuclidean {
            return Err(Error::UnsupportedMetric(self.cost));
        }
        Ok(())
    }
}

/// One row of a loss curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    /// Value of the training objective on the step's batch.
    pub loss: f64,
    /// Mean Euclidean distance between each prediction and its target in the
    /// step's batch.
    pub divergence_estimate: f64,
}

/// Snapshot of one OTgen step: `predictions[i]` was regressed onto
/// `targets[sigma.perm[i]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackTrace {
    pub step: usize,
    pub noise: PointSet,
    pub predictions: PointSet,
    pub targets: PointSet,
    pub sigma: Assignment,
    pub loss: f64,
}

/// The fixed supervision of an OTtrans run: noise point `i` is paired with
/// target `assignment.perm[i]` for the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub noise: PointSet,
    pub assignment: Assignment,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub net: Mlp<T>,
    pub adam: AdamState<T>,
    pub losses: Vec<LossRecord>,
    pub traces: Vec<FeedbackTrace>,
    pub plan: Option<TransportPlan>,
    /// Prior stream position after training.
    pub prior_rng: RngState,
}

/// Source of real batches for OTgen.
pub trait TargetSampler {
    fn next_batch(&mut self, k: usize) -> Result<PointSet>;
}

impl<F: FnMut(usize) -> Result<PointSet>> TargetSampler for F {
    fn next_batch(&mut self, k: usize) -> Result<PointSet> {
        self(k)
    }
}

/// Draws batches from a fixed pool without replacement, reshuffling the pool
/// when fewer than `k` unused points remain.
#[derive(Debug, Clone)]
pub struct PoolSampler {
    pool: PointSet,
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl PoolSampler {
    pub fn new(pool: PointSet, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let order = (0..pool.len()).collect();
        let mut s = Self {
            pool,
            order,
            pos: 0,
            rng,
        };
        s.reshuffle();
        s
    }

    fn reshuffle(&mut self) {
        self.order.shuffle(&mut self.rng);
        self.pos = 0;
    }

    pub fn pool(&self) -> &PointSet {
        &self.pool
    }
}

impl TargetSampler for PoolSampler {
    fn next_batch(&mut self, k: usize) -> Result<PointSet> {
        if k == 0 || k > self.pool.len() {
            return Err(Error::InvalidCount(format!(
                "batch of {k} from a pool of {}",
                self.pool.len()
            )));
        }
        if self.pos + k > self.order.len() {
            self.reshuffle();
        }
        let idx = &self.order[self.pos..self.pos + k];
        self.pos += k;
        self.pool.select(idx)
    }
}

fn check_net<T: Real>(net: &Mlp<T>, cfg: &TrainConfig, target_dim: usize) -> Result<()> {
    if net.input_dim() != cfg.prior.dim {
        return Err(Error::size(
            format!("network input dimension {}", net.input_dim()),
            format!("prior dimension {}", cfg.prior.dim),
        ));
    }
    if net.output_dim() != target_dim {
        return Err(Error::size(
            format!("network output dimension {}", net.output_dim()),
            format!("target dimension {target_dim}"),
        ));
    }
    Ok(())
}

/// Value and output gradient of the mean squared distance between each
/// prediction and its paired target, plus the mean Euclidean distance.
fn pair_loss(p: &PointSet, z: &PointSet, perm: &[usize]) -> (f64, f64, Vec<f64>) {
    let k = p.len() as f64;
    let mut sq = 0.0;
    let mut euclid = 0.0;
    let mut grad = Vec::with_capacity(p.as_slice().len());
    for (i, a) in p.points().enumerate() {
        let b = z.point(perm[i]);
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            s += (x - y) * (x - y);
            grad.push(2.0 / k * (x - y));
        }
        sq += s;
        euclid += s.sqrt();
    }
    (sq / k, euclid / k, grad)
}

/// Objective of one OTgen step with the assignment held fixed:
/// `(1/k) sum |p_i - z_perm(i)|^2 + lambda * D(p, z)`.
///
/// Returns the value, the transport part alone, and the gradient with
/// respect to the predictions.
pub fn frozen_objective(
    p: &PointSet,
    z: &PointSet,
    perm: &[usize],
    lambda: f64,
    pairs: &PairSet,
) -> Result<(f64, f64, Vec<f64>)> {
    p.check_same_shape(z)?;
    if perm.len() != p.len() {
        return Err(Error::size(
            format!("{} predictions", p.len()),
            format!("assignment of length {}", perm.len()),
        ));
    }
    let (transport, _, mut grad) = pair_loss(p, z, perm);
    let mut value = transport;
    if lambda > 0.0 {
        let (d, dgrad) = diversity_penalty_with(p, z, pairs, pairs)?;
        value += lambda * d;
        for (g, dg) in grad.iter_mut().zip(dgrad) {
            *g += lambda * dg;
        }
    }
    Ok((value, transport, grad))
}

/// Parameter gradient of [`frozen_objective`] for `net` applied to `noise`.
pub fn frozen_objective_gradient<T: Real>(
    net: &Mlp<T>,
    noise: &PointSet,
    targets: &PointSet,
    perm: &[usize],
    lambda: f64,
) -> Result<(f64, Gradients<T>)> {
    let cache = net.forward_train(Matrix::from_points(noise))?;
    let p = cache.output().to_points()?;
    let (value, _, grad) = frozen_objective(&p, targets, perm, lambda, &PairSet::All)?;
    let out_grad = Matrix::from_f64(p.len(), p.dim(), &grad)?;
    let (grads, _) = net.backward_cached(&cache, &out_grad, false)?;
    Ok((value, grads))
}

/// OTtrans: solve one transport map from `m` noise samples to `targets`
/// (which must hold exactly `cfg.transport_pool_m` points), then regress the
/// network onto the fixed pairs with minibatch Adam.
pub fn train_ottrans<T: Real>(
    targets: &PointSet,
    cfg: &TrainConfig,
    mut net: Mlp<T>,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    check_net(&net, cfg, targets.dim())?;
    let m = cfg.transport_pool_m;
    if targets.len() != m {
        return Err(Error::InvalidConfig(format!(
            "OTtrans pool size {m} does not match the {} target points",
            targets.len()
        )));
    }
    if cfg.batch_k > m {
        return Err(Error::InvalidConfig(format!(
            "batch size {} exceeds the pool size {m}",
            cfg.batch_k
        )));
    }
    let mut prior = PriorSampler::new(cfg.prior)?;
    let noise = prior.sample(m)?;
    let assignment = solve_point_assignment(&noise, targets, cfg.cost)?;
    // Targets reordered so that row i is the partner of noise point i.
    let paired = targets.select(&assignment.perm)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..m).collect();
    let mut pos = m;
    let identity: Vec<usize> = (0..cfg.batch_k).collect();
    let mut adam = AdamState::new(&net);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        if pos + cfg.batch_k > m {
            order.shuffle(&mut rng);
            pos = 0;
        }
        let idx = &order[pos..pos + cfg.batch_k];
        pos += cfg.batch_k;
        let n_batch = noise.select(idx)?;
        let z_batch = paired.select(idx)?;
        let cache = net.forward_train(Matrix::from_points(&n_batch))?;
        let p = cache.output().to_points()?;
        let (loss, euclid, grad) = pair_loss(&p, &z_batch, &identity);
        let out_grad = Matrix::from_f64(p.len(), p.dim(), &grad)?;
        let (grads, _) = net.backward_cached(&cache, &out_grad, false)?;
        adam_step(&mut net, &grads, &mut adam, cfg.lr)?;
        losses.push(LossRecord {
            step,
            loss,
            divergence_estimate: euclid,
        });
    }
    Ok(TrainOutcome {
        net,
        adam,
        losses,
        traces: Vec::new(),
        plan: Some(TransportPlan { noise, assignment }),
        prior_rng: prior.rng_state(),
    })
}

/// OTgen: every step, map fresh noise through the network, solve the
/// assignment from the predictions to a fresh real batch, and take one Adam
/// step on the frozen-assignment objective.
pub fn train_otgen<T: Real, S: TargetSampler + ?Sized>(
    targets: &mut S,
    cfg: &TrainConfig,
    mut net: Mlp<T>,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if cfg.lambda_div > 0.0 && cfg.batch_k < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: cfg.batch_k,
        });
    }
    let mut prior = PriorSampler::new(cfg.prior)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(&net);
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut traces = Vec::new();
    for step in 0..cfg.steps {
        let z = targets.next_batch(cfg.batch_k)?;
        if step == 0 {
            check_net(&net, cfg, z.dim())?;
        }
        let noise = prior.sample(cfg.batch_k)?;
        let cache = net.forward_train(Matrix::from_points(&noise))?;
        let p = cache.output().to_points()?;
        let sigma = solve_point_assignment(&p, &z, cfg.cost)?;
        let pairs = if cfg.lambda_div > 0.0 {
            PairSet::for_batch(cfg.batch_k, &mut rng)
        } else {
            PairSet::All
        };
        let (loss, _, grad) = frozen_objective(&p, &z, &sigma.perm, cfg.lambda_div, &pairs)?;
        let (_, euclid, _) = pair_loss(&p, &z, &sigma.perm);
        let out_grad = Matrix::from_f64(p.len(), p.dim(), &grad)?;
        let (grads, _) = net.backward_cached(&cache, &out_grad, false)?;
        adam_step(&mut net, &grads, &mut adam, cfg.lr)?;
        losses.push(LossRecord {
            step,
            loss,
            divergence_estimate: euclid,
        });
        if cfg.feedback_every > 0 && step % cfg.feedback_every == 0 {
            traces.push(FeedbackTrace {
                step,
                noise,
                predictions: p,
                targets: z,
                sigma,
                loss,
            });
        }
    }
    Ok(TrainOutcome {
        net,
        adam,
        losses,
        traces,
        plan: None,
        prior_rng: prior.rng_state(),
    })
}

/// Rows per forward pass when mapping large noise batches.
const GENERATE_CHUNK: usize = 4096;

/// Maps `points` through `net` in bounded-size chunks.
pub fn map_points<T: Real>(net: &Mlp<T>, points: &PointSet) -> Result<PointSet> {
    let d_in = points.dim();
    if d_in != net.input_dim() {
        return Err(Error::size(
            format!("network input dimension {}", net.input_dim()),
            format!("point dimension {d_in}"),
        ));
    }
    let mut out = Vec::with_capacity(points.len() * net.output_dim());
    for chunk in points.as_slice().chunks(GENERATE_CHUNK * d_in) {
        let x = Matrix::from_f64(chunk.len() / d_in, d_in, chunk)?;
        out.extend(net.forward_matrix(&x)?.to_f64());
    }
    PointSet::new(points.len(), net.output_dim(), out)
}

/// `n` fresh prior samples pushed through the network.
pub fn generate<T: Real>(net: &Mlp<T>, prior: &PriorSpec, n: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidCount("cannot generate zero points".into()));
    }
    let noise = PriorSampler::new(*prior)?.sample(n)?;
    map_points(net, &noise)
}

/// Writes a loss curve as CSV with columns `step,loss,divergence_estimate`.
pub fn write_loss_csv<W: std::io::Write>(out: W, losses: &[LossRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in losses {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
