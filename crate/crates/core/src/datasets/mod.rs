//! Synthetic planar datasets, MNIST-style IDX images and point CSV files.

mod csv_io;
mod idx;
mod synthetic;

pub use csv_io::{read_points_csv, write_points_csv};
pub use idx::{
    encode_images, encode_labels, load_idx, parse_images, parse_labels, ImageBatch, IMAGES_MAGIC,
    LABELS_MAGIC,
};
pub use synthetic::{
    generate, generate_labeled, make_circles, make_moons, Labeled, SyntheticKind, SyntheticSpec,
    DEFAULT_CIRCLES_FACTOR, DEFAULT_NOISE_SD, DEFAULT_SCALE,
};
