//! Deterministic fully connected autoencoder providing a latent space for
//! image data. No latent regularisation of any kind.
//!
//! Encoder and decoder are trained as one stacked network with a linear
//! latent layer in the middle, then split at that layer.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::ImageBatch;
use crate::error::{Error, Result};
use crate::neural::{adam_step, validate_specs, Activation, AdamState, LayerSpec, Matrix, Mlp};
use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderSpec {
    pub input_dim: usize,
    /// Encoder hidden widths; the decoder uses them reversed.
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub activation: Activation,
    pub output_activation: Activation,
}

impl AutoencoderSpec {
    /// 784 -> 512 -> 256 -> 8, mirrored, LeakyReLU hidden units, sigmoid output.
    pub fn mnist() -> Self {
        Self::new(784, vec![512, 256], 8)
    }

    pub fn new(input_dim: usize, hidden: Vec<usize>, latent_dim: usize) -> Self {
        Self {
            input_dim,
            hidden,
            latent_dim,
            activation: Activation::leaky(),
            output_activation: Activation::Sigmoid,
        }
    }

    pub fn encoder_specs(&self) -> Vec<LayerSpec> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.push(self.latent_dim);
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    self.activation
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect()
    }

    pub fn decoder_specs(&self) -> Vec<LayerSpec> {
        let mut dims = vec![self.latent_dim];
        dims.extend(self.hidden.iter().rev());
        dims.push(self.input_dim);
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    self.output_activation
                } else {
                    self.activation
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::SpecError(
                "autoencoder widths must all be positive".into(),
            ));
        }
        validate_specs(&self.encoder_specs())?;
        validate_specs(&self.decoder_specs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeTrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            batch: 128,
            lr: 1e-3,
            seed: 0,
        }
    }
}

impl AeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch == 0 {
            return Err(Error::InvalidConfig(
                "autoencoder steps and batch must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub spec: AutoencoderSpec,
    pub encoder: Mlp<f32>,
    pub decoder: Mlp<f32>,
}

impl Autoencoder {
    pub fn init(spec: &AutoencoderSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let joint = Mlp::init(&spec.joint_specs(), seed)?;
        Self::split(spec.clone(), joint)
    }

    fn split(spec: AutoencoderSpec, joint: Mlp<f32>) -> Result<Self> {
        let n_enc = spec.hidden.len() + 1;
        let layers = joint.layers();
        Ok(Self {
            encoder: Mlp::from_layers(layers[..n_enc].to_vec())?,
            decoder: Mlp::from_layers(layers[n_enc..].to_vec())?,
            spec,
        })
    }

    fn joined(&self) -> Result<Mlp<f32>> {
        let layers = self
            .encoder
            .layers()
            .iter()
            .chain(self.decoder.layers())
            .cloned()
            .collect();
        Mlp::from_layers(layers)
    }

    /// Mean squared error per pixel of `decode(encode(images))`.
    pub fn reconstruction_mse(&self, images: &ImageBatch) -> Result<f64> {
        let joint = self.joined()?;
        let mut total = 0.0;
        for start in (0..images.len()).step_by(CHUNK) {
            let idx: Vec<usize> = (start..(start + CHUNK).min(images.len())).collect();
            let x = images.select(&idx).to_matrix();
            let y = joint.forward_matrix(&x)?;
            total += y
                .as_slice()
                .iter()
                .zip(x.as_slice())
                .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
                .sum::<f64>();
        }
        Ok(total / (images.len() * images.pixel_dim()) as f64)
    }
}

impl AutoencoderSpec {
    fn joint_specs(&self) -> Vec<LayerSpec> {
        let mut s = self.encoder_specs();
        s.extend(self.decoder_specs());
        s
    }
}

/// One row of the reconstruction loss curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeLossRecord {
    pub step: usize,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct AeOutcome {
    pub model: Autoencoder,
    pub adam: AdamState<f32>,
    pub losses: Vec<AeLossRecord>,
}

const CHUNK: usize = 4096;

/// Minimises per-pixel MSE with Adam over minibatches drawn without
/// replacement (reshuffled each epoch).
pub fn train_autoencoder(
    images: &ImageBatch,
    spec: &AutoencoderSpec,
    cfg: &AeTrainConfig,
) -> Result<AeOutcome> {
    cfg.validate()?;
    spec.validate()?;
    if images.is_empty() {
        return Err(Error::InvalidCount("no training images".into()));
    }
    if images.pixel_dim() != spec.input_dim {
        return Err(Error::size(
            format!("autoencoder input dimension {}", spec.input_dim),
            format!("images of {} pixels", images.pixel_dim()),
        ));
    }
    let mut net = Mlp::<f32>::init(&spec.joint_specs(), cfg.seed)?;
    let mut adam = AdamState::new(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let n = images.len();
    let batch = cfg.batch.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut pos = n;
    let mut losses = Vec::with_capacity(cfg.steps);
    let d = images.pixel_dim();
    for step in 0..cfg.steps {
        if pos + batch > n {
            order.shuffle(&mut rng);
            pos = 0;
        }
        let x = images.select(&order[pos..pos + batch]).to_matrix();
        pos += batch;
        let cache = net.forward_train(x.clone())?;
        let y = cache.output();
        let scale = 2.0 / (batch * d) as f32;
        let mut sq = 0.0f64;
        let grad: Vec<f32> = y
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .map(|(&a, &b)| {
                let r = a - b;
                sq += f64::from(r) * f64::from(r);
                scale * r
            })
            .collect();
        let grad = Matrix::new(batch, d, grad)?;
        let (grads, _) = net.backward_cached(&cache, &grad, false)?;
        adam_step(&mut net, &grads, &mut adam, cfg.lr)?;
        losses.push(AeLossRecord {
            step,
            mse: sq / (batch * d) as f64,
        });
    }
    Ok(AeOutcome {
        model: Autoencoder::split(spec.clone(), net)?,
        adam,
        losses,
    })
}

/// Latent codes of `images`, one row per image.
pub fn encode(encoder: &Mlp<f32>, images: &ImageBatch) -> Result<PointSet> {
    if images.pixel_dim() != encoder.input_dim() {
        return Err(Error::size(
            format!("encoder input dimension {}", encoder.input_dim()),
            format!("images of {} pixels", images.pixel_dim()),
        ));
    }
    let mut out = Vec::with_capacity(images.len() * encoder.output_dim());
    for start in (0..images.len()).step_by(CHUNK) {
        let idx: Vec<usize> = (start..(start + CHUNK).min(images.len())).collect();
        let z = encoder.forward_matrix(&images.select(&idx).to_matrix())?;
        out.extend(z.as_slice().iter().map(|&v| f64::from(v)));
    }
    PointSet::new(images.len(), encoder.output_dim(), out)
}

/// Decodes latent rows into `h x w x c` images.
pub fn decode(
    decoder: &Mlp<f32>,
    latents: &PointSet,
    h: usize,
    w: usize,
    c: usize,
) -> Result<ImageBatch> {
    if latents.dim() != decoder.input_dim() {
        return Err(Error::size(
            format!("decoder input dimension {}", decoder.input_dim()),
            format!("latent dimension {}", latents.dim()),
        ));
    }
    if h * w * c != decoder.output_dim() {
        return Err(Error::size(
            format!("decoder output dimension {}", decoder.output_dim()),
            format!("images of {h}x{w}x{c}"),
        ));
    }
    let mut pixels = Vec::with_capacity(latents.len() * decoder.output_dim());
    for start in (0..latents.len()).step_by(CHUNK) {
        let idx: Vec<usize> = (start..(start + CHUNK).min(latents.len())).collect();
        let x = Matrix::from_points(&latents.select(&idx)?);
        pixels.extend_from_slice(decoder.forward_matrix(&x)?.as_slice());
    }
    if pixels.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteOutput("decoded pixels".into()));
    }
    ImageBatch::new(latents.len(), h, w, c, pixels)
}
