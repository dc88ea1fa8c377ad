mod support;

use otmap::neural::{leaky_stack, Activation, LayerSpec, Mlp};
use otmap::PointSet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{backprop_error, randomise, reference_forward, smooth_instance};

#[test]
fn forward_matches_reference_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let specs = leaky_stack(2, &[7, 5], 2);
    for _ in 0..20 {
        let mut net = Mlp::<f64>::init(&specs, rng.random()).unwrap();
        randomise(&mut net, &mut rng);
        let x = PointSet::new(4, 2, (0..8).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let got = net.forward(&x).unwrap();
        let (want, _) = reference_forward(&net, x.as_slice(), 4);
        for (a, b) in got.as_slice().iter().zip(&want) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
    // f32 nets agree with the f64 reference to single precision.
    let net32 = Mlp::<f32>::init(&specs, 3).unwrap();
    let layers64 = net32
        .layers()
        .iter()
        .map(|l| otmap::neural::Layer {
            spec: l.spec,
            weights: l.weights.iter().map(|&w| f64::from(w)).collect(),
            bias: l.bias.iter().map(|&b| f64::from(b)).collect(),
        })
        .collect();
    let net64 = Mlp::<f64>::from_layers(layers64).unwrap();
    let x = PointSet::from_rows(&[[0.25, -0.5], [1.0, 0.75], [-1.5, 0.1], [0.0, 2.0]]).unwrap();
    let (want, _) = reference_forward(&net64, x.as_slice(), 4);
    for (a, b) in net32.forward(&x).unwrap().as_slice().iter().zip(&want) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn four_layer_leaky_net_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let specs = leaky_stack(2, &[6, 6, 6], 2);
    let (net, x, g) = smooth_instance(&specs, 5, &mut rng);
    let err = backprop_error(&net, &x, &g);
    assert!(err < 1e-4, "max relative error {err}");
}

fn activation_strategy() -> impl Strategy<Value = Activation> {
    prop_oneof![
        (0.001f64..0.9).prop_map(|slope| Activation::LeakyRelu { slope }),
        Just(Activation::Identity),
        Just(Activation::Sigmoid),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backward_matches_central_differences(
        dims in proptest::collection::vec(1usize..6, 2..6),
        acts in proptest::collection::vec(activation_strategy(), 4),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let specs: Vec<LayerSpec> = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec::new(w[0], w[1], acts[i % acts.len()]))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (net, x, g) = smooth_instance(&specs, k, &mut rng);
        let err = backprop_error(&net, &x, &g);
        prop_assert!(err < 1e-4, "max relative error {}", err);
    }

    #[test]
    fn leaky_relu_is_one_lipschitz(x in -1e3f64..1e3, y in -1e3f64..1e3, slope in 0.0f64..=1.0) {
        let f = Activation::LeakyRelu { slope };
        prop_assert!((f.apply(x) - f.apply(y)).abs() <= (x - y).abs() * (1.0 + 1e-15));
    }
}
