//! Dense feed-forward networks with LeakyReLU, analytic backprop and Adam.
//!
//! Parameters are generic over [`Real`] so the same code trains in `f32` and
//! is gradient-checked in `f64`. Weights of a layer are `out x in` row-major;
//! batches are row-major with one sample per row.

mod adam;
mod checkpoint;
mod matrix;
mod mlp;
mod scalar;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    Checkpoint, RngState, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION,
};
pub use matrix::Matrix;
pub use mlp::{
    leaky_stack, validate_specs, Activation, ForwardCache, Gradients, Layer, LayerBuffers,
    LayerSpec, Mlp, DEFAULT_LEAKY_SLOPE,
};
pub use scalar::Real;
