use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::scalar::Real;
use crate::error::{Error, Result};
use crate::points::PointSet;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Identity,
    Sigmoid,
}

impl Activation {
    pub fn leaky() -> Self {
        Activation::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu { slope } => {
                if x > T::zero() {
                    x
                } else {
                    T::from_f64(slope) * x
                }
            }
            Activation::Identity => x,
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation's output. LeakyReLU keeps
    /// the sign of its input, so the output alone decides the branch.
    #[inline]
    fn derivative_from_output<T: Real>(self, y: T) -> T {
        match self {
            Activation::LeakyRelu { slope } => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::from_f64(slope)
                }
            }
            Activation::Identity => T::one(),
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn leaky(in_dim: usize, out_dim: usize) -> Self {
        Self::new(in_dim, out_dim, Activation::leaky())
    }

    pub fn linear(in_dim: usize, out_dim: usize) -> Self {
        Self::new(in_dim, out_dim, Activation::Identity)
    }

    pub fn sigmoid(in_dim: usize, out_dim: usize) -> Self {
        Self::new(in_dim, out_dim, Activation::Sigmoid)
    }

    fn param_count(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// Hidden LeakyReLU layers of the given widths followed by a linear output.
pub fn leaky_stack(input: usize, hidden: &[usize], output: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input;
    for &w in hidden {
        specs.push(LayerSpec::leaky(prev, w));
        prev = w;
    }
    specs.push(LayerSpec::linear(prev, output));
    specs
}

pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::SpecError("network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(Error::SpecError(format!("layer {i} has a zero dimension")));
        }
        if let Activation::LeakyRelu { slope } = s.activation {
            if !(slope > 0.0 && slope < 1.0) {
                return Err(Error::SpecError(format!(
                    "layer {i}: LeakyReLU slope {slope} outside (0, 1)"
                )));
            }
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::SpecError(format!(
                "layer {i} outputs {} values but layer {} expects {}",
                pair[0].out_dim,
                i + 1,
                pair[1].in_dim
            )));
        }
    }
    Ok(())
}

/// One dense layer: `y = act(x W^T + b)` with `W` stored `out x in` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Parameter-shaped buffers: gradients, Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBuffers<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerBuffers<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerBuffers {
                    weights: vec![T::zero(); l.weights.len()],
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(Real::to_f64(*v).abs()))
    }
}

/// Layer inputs and the final output of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `activations[l]` is the input of layer `l`; the last entry is the output.
    activations: Vec<Matrix<T>>,
}

impl<T: Real> ForwardCache<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.activations.last().expect("cache holds the input")
    }
}

/// Dense feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T = f32> {
    layers: Vec<Layer<T>>,
}

impl<T: Real> Mlp<T> {
    /// Uniform fan-in initialisation in `±sqrt(6 / fan_in)`, zero biases.
    pub fn init(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        validate_specs(specs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = specs
            .iter()
            .map(|&spec| {
                let bound = (6.0 / spec.in_dim as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                let weights = (0..spec.in_dim * spec.out_dim)
                    .map(|_| T::from_f64(dist.sample(&mut rng)))
                    .collect();
                Layer {
                    spec,
                    weights,
                    bias: vec![T::zero(); spec.out_dim],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        validate_specs(&specs)?;
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.spec.in_dim * l.spec.out_dim || l.bias.len() != l.spec.out_dim {
                return Err(Error::SpecError(format!(
                    "layer {i} parameter shapes do not match its spec"
                )));
            }
            if !l.weights.iter().chain(&l.bias).all(|v| v.is_finite()) {
                return Err(Error::SpecError(format!(
                    "layer {i} has non-finite parameters"
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").spec.out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.spec.param_count()).sum()
    }

    /// Every parameter in layer order (weights then bias per layer).
    pub fn params(&self) -> impl Iterator<Item = &T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::size(
                format!("network input dimension {}", self.input_dim()),
                format!("batch dimension {cols}"),
            ));
        }
        Ok(())
    }

    fn layer_forward(layer: &Layer<T>, x: &Matrix<T>) -> Matrix<T> {
        let (batch, in_dim, out_dim) = (x.rows(), layer.spec.in_dim, layer.spec.out_dim);
        let mut y = Matrix::zeros(batch, out_dim);
        {
            let out = y.as_mut_slice();
            for row in out.chunks_exact_mut(out_dim) {
                row.copy_from_slice(&layer.bias);
            }
            // y += x * W^T
            T::gemm(
                batch,
                in_dim,
                out_dim,
                T::one(),
                x.as_slice(),
                in_dim as isize,
                1,
                &layer.weights,
                1,
                in_dim as isize,
                T::one(),
                out,
                out_dim as isize,
                1,
            );
            let act = layer.spec.activation;
            if act != Activation::Identity {
                out.iter_mut().for_each(|v| *v = act.apply(*v));
            }
        }
        y
    }

    pub fn forward_matrix(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(x.cols())?;
        let mut layers = self.layers.iter();
        let first = layers.next().expect("non-empty");
        let mut h = Self::layer_forward(first, x);
        for layer in layers {
            h = Self::layer_forward(layer, &h);
        }
        Ok(h)
    }

    pub fn forward(&self, batch: &PointSet) -> Result<PointSet> {
        self.forward_matrix(&Matrix::from_points(batch))?
            .to_points()
    }

    /// Forward pass that keeps every layer input for a later backward pass.
    pub fn forward_train(&self, x: Matrix<T>) -> Result<ForwardCache<T>> {
        self.check_input(x.cols())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x);
        for layer in &self.layers {
            let y = Self::layer_forward(layer, activations.last().expect("non-empty"));
            activations.push(y);
        }
        Ok(ForwardCache { activations })
    }

    /// Gradients of `sum(output_grad ⊙ output)` for the cached pass. When
    /// `want_input_grad` is set, also returns the gradient with respect to
    /// the network input.
    pub fn backward_cached(
        &self,
        cache: &ForwardCache<T>,
        output_grad: &Matrix<T>,
        want_input_grad: bool,
    ) -> Result<(Gradients<T>, Option<Matrix<T>>)> {
        let out = cache.output();
        if output_grad.rows() != out.rows() || output_grad.cols() != out.cols() {
            return Err(Error::size(
                format!("output {}x{}", out.rows(), out.cols()),
                format!("gradient {}x{}", output_grad.rows(), output_grad.cols()),
            ));
        }
        let batch = out.rows();
        let mut grads = Gradients::zeros_like(self);
        let mut delta = output_grad.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let (in_dim, out_dim) = (layer.spec.in_dim, layer.spec.out_dim);
            let act = layer.spec.activation;
            if act != Activation::Identity {
                let y = cache.activations[l + 1].as_slice();
                for (d, &yv) in delta.as_mut_slice().iter_mut().zip(y) {
                    *d = *d * act.derivative_from_output(yv);
                }
            }
            let input = &cache.activations[l];
            let g = &mut grads.layers[l];
            // dW = delta^T * input
            T::gemm(
                out_dim,
                batch,
                in_dim,
                T::one(),
                delta.as_slice(),
                1,
                out_dim as isize,
                input.as_slice(),
                in_dim as isize,
                1,
                T::zero(),
                &mut g.weights,
                in_dim as isize,
                1,
            );
            for row in delta.as_slice().chunks_exact(out_dim) {
                for (b, &d) in g.bias.iter_mut().zip(row) {
                    *b = *b + d;
                }
            }
            if l > 0 || want_input_grad {
                // delta_prev = delta * W
                let mut prev = Matrix::zeros(batch, in_dim);
                T::gemm(
                    batch,
                    out_dim,
                    in_dim,
                    T::one(),
                    delta.as_slice(),
                    out_dim as isize,
                    1,
                    &layer.weights,
                    in_dim as isize,
                    1,
                    T::zero(),
                    prev.as_mut_slice(),
                    in_dim as isize,
                    1,
                );
                delta = prev;
            }
        }
        Ok((grads, want_input_grad.then_some(delta)))
    }

    /// Parameter gradients of `sum(output_grad ⊙ forward(batch))`.
    pub fn backward(&self, batch: &Matrix<T>, output_grad: &Matrix<T>) -> Result<Gradients<T>> {
        let cache = self.forward_train(batch.clone())?;
        Ok(self.backward_cached(&cache, output_grad, false)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wide_mapper() -> Vec<LayerSpec> {
        leaky_stack(2, &[512, 512, 512, 512], 2)
    }

    #[test]
    fn param_count_of_moons_mapper() {
        let net = Mlp::<f32>::init(&wide_mapper(), 7).unwrap();
        assert_eq!(net.param_count(), 790_530);
        assert_eq!(net.params().count(), 790_530);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Mlp::<f32>::init(&wide_mapper(), 7).unwrap();
        let b = Mlp::<f32>::init(&wide_mapper(), 7).unwrap();
        assert!(a
            .params()
            .zip(b.params())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let bound = (6.0f32 / 512.0).sqrt();
        assert!(a.layers()[1].weights.iter().all(|w| w.abs() <= bound));
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let c = Mlp::<f32>::init(&wide_mapper(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn broken_chain_is_a_spec_error() {
        let specs = [LayerSpec::leaky(3, 4), LayerSpec::linear(5, 2)];
        assert!(matches!(
            Mlp::<f32>::init(&specs, 0),
            Err(Error::SpecError(_))
        ));
        let bad_slope = [LayerSpec::new(2, 2, Activation::LeakyRelu { slope: 1.5 })];
        assert!(Mlp::<f32>::init(&bad_slope, 0).is_err());
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Layer {
            spec: LayerSpec::linear(2, 2),
            weights: vec![1.0, 0.0, 0.0, 1.0],
            bias: vec![0.0, 0.0],
        };
        let net = Mlp::<f64>::from_layers(vec![layer]).unwrap();
        let x = PointSet::from_rows(&[[0.5, -2.0], [3.0, 1.25]]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn leaky_relu_definition() {
        let act = Activation::LeakyRelu { slope: 0.01 };
        assert!((act.apply(-3.0f64) - (-0.03)).abs() < 1e-15);
        assert_eq!(act.apply(2.5f64), 2.5);
    }

    #[test]
    fn input_dimension_is_checked() {
        let net = Mlp::<f32>::init(&[LayerSpec::linear(3, 1)], 0).unwrap();
        let x = PointSet::from_rows(&[[0.0, 1.0]]).unwrap();
        assert!(matches!(net.forward(&x), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let net = Mlp::<f64>::init(&leaky_stack(3, &[5, 4], 2), 1).unwrap();
        let x = Matrix::<f64>::from_f64(
            4,
            3,
            &[
                0.1, -0.2, 0.3, 1.0, 0.5, -0.5, 0.0, 0.2, 0.9, -1.0, 0.4, 0.7,
            ],
        )
        .unwrap();
        let g = net.backward(&x, &Matrix::zeros(4, 2)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn single_linear_layer_closed_form() {
        // k = 1: dL/dW = g^T x, dL/db = g
        let net = Mlp::<f64>::init(&[LayerSpec::linear(3, 2)], 5).unwrap();
        let x = Matrix::<f64>::from_f64(1, 3, &[0.5, -1.0, 2.0]).unwrap();
        let g = Matrix::<f64>::from_f64(1, 2, &[3.0, -0.25]).unwrap();
        let grads = net.backward(&x, &g).unwrap();
        assert_eq!(
            grads.layers[0].weights,
            vec![1.5, -3.0, 6.0, -0.125, 0.25, -0.5]
        );
        assert_eq!(grads.layers[0].bias, vec![3.0, -0.25]);
    }

    #[test]
    fn output_grad_shape_is_checked() {
        let net = Mlp::<f64>::init(&[LayerSpec::linear(2, 2)], 0).unwrap();
        let x = Matrix::<f64>::zeros(3, 2);
        assert!(net.backward(&x, &Matrix::zeros(3, 1)).is_err());
    }
}
