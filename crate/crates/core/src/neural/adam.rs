use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use super::scalar::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moment buffers for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    /// Number of completed steps.
    pub t: u64,
    pub m: Gradients<T>,
    pub v: Gradients<T>,
}

impl<T: Real> AdamState<T> {
    pub fn new(net: &Mlp<T>) -> Self {
        Self::with_config(net, AdamConfig::default())
    }

    pub fn with_config(net: &Mlp<T>, config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }
}

fn same_shape<T>(a: &Gradients<T>, b: &Gradients<T>) -> bool {
    a.layers.len() == b.layers.len()
        && a.layers
            .iter()
            .zip(&b.layers)
            .all(|(x, y)| x.weights.len() == y.weights.len() && x.bias.len() == y.bias.len())
}

/// One bias-corrected Adam update of every parameter.
///
/// The gradient is checked for non-finite values before anything is touched,
/// so a failed step leaves both the network and the state unchanged.
pub fn adam_step<T: Real>(
    net: &mut Mlp<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate {lr} must be positive"
        )));
    }
    let shape = Gradients::zeros_like(net);
    if !same_shape(&shape, grads) || !same_shape(&shape, &state.m) {
        return Err(Error::size("network parameters", "gradient buffers"));
    }
    for (l, g) in grads.layers.iter().enumerate() {
        if !g.weights.iter().chain(&g.bias).all(|v| v.is_finite()) {
            return Err(Error::NonFiniteGradient { layer: l });
        }
    }

    state.t += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.t as i32;
    let b1 = T::from_f64(beta1);
    let b2 = T::from_f64(beta2);
    let one_b1 = T::from_f64(1.0 - beta1);
    let one_b2 = T::from_f64(1.0 - beta2);
    let corr1 = T::from_f64(1.0 / (1.0 - beta1.powi(t)));
    let corr2 = T::from_f64(1.0 / (1.0 - beta2.powi(t)));
    let lr = T::from_f64(lr);
    let eps = T::from_f64(eps);

    let update = |p: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = *m * corr1;
            let v_hat = *v * corr2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (((layer, g), m), v) in net
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.m.layers.iter_mut())
        .zip(state.v.layers.iter_mut())
    {
        update(
            &mut layer.weights,
            &g.weights,
            &mut m.weights,
            &mut v.weights,
        );
        update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::mlp::{Layer, LayerSpec};

    fn scalar_net(w: f64) -> Mlp<f64> {
        Mlp::from_layers(vec![Layer {
            spec: LayerSpec::linear(1, 1),
            weights: vec![w],
            bias: vec![0.0],
        }])
        .unwrap()
    }

    fn grads_of(net: &Mlp<f64>, w: f64, b: f64) -> Gradients<f64> {
        let mut g = Gradients::zeros_like(net);
        g.layers[0].weights[0] = w;
        g.layers[0].bias[0] = b;
        g
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = scalar_net(0.3);
        let before = net.clone();
        let mut st = AdamState::new(&net);
        let g = grads_of(&net, 0.0, 0.0);
        adam_step(&mut net, &g, &mut st, 0.001).unwrap();
        assert_eq!(net, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        let mut net = scalar_net(1.0);
        let mut st = AdamState::new(&net);
        let g = grads_of(&net, 0.5, 0.0);
        adam_step(&mut net, &g, &mut st, 0.001).unwrap();
        let delta = net.layers()[0].weights[0] - 1.0;
        let expected = -0.001 * 0.5 / (0.5 + 1e-8);
        assert!((delta - expected).abs() < 1e-15, "{delta} vs {expected}");
        assert!((st.m.layers[0].weights[0] - 0.05).abs() < 1e-15);
        assert!((st.v.layers[0].weights[0] - 0.00025).abs() < 1e-18);
    }

    #[test]
    fn non_finite_gradient_aborts_without_change() {
        let mut net = scalar_net(1.0);
        let before = net.clone();
        let mut st = AdamState::new(&net);
        let g = grads_of(&net, f64::NAN, 0.0);
        assert!(matches!(
            adam_step(&mut net, &g, &mut st, 0.001),
            Err(Error::NonFiniteGradient { layer: 0 })
        ));
        assert_eq!(net, before);
        assert_eq!(st.t, 0);
    }

    #[test]
    fn step_size_stays_bounded() {
        let mut net = scalar_net(0.0);
        let mut st = AdamState::new(&net);
        let lr = 0.01;
        for i in 0..200 {
            let sign = if i % 3 == 0 { -1.0 } else { 1.0 };
            let g = grads_of(&net, sign * (i as f64 * 0.37).sin() * 10.0, 1e-6 * i as f64);
            let before: Vec<f64> = net.params().copied().collect();
            adam_step(&mut net, &g, &mut st, lr).unwrap();
            for (a, b) in before.iter().zip(net.params()) {
                assert!((a - b).abs() <= 10.0 * lr);
            }
        }
    }
}
