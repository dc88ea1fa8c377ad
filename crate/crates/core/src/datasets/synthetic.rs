use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Gaussian noise added to every synthetic point unless overridden, in
/// unscaled units. This and [`DEFAULT_SCALE`] come from the `calibrate` example.
pub const DEFAULT_NOISE_SD: f64 = 0.15;
/// Inner radius of the concentric circles relative to the outer one.
pub const DEFAULT_CIRCLES_FACTOR: f64 = 0.5;
/// Factor applied to every coordinate after the noise is added.
pub const DEFAULT_SCALE: f64 = 2.3865;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Moons,
    Circles,
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Moons => "moons",
            SyntheticKind::Circles => "circles",
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "moons" => Ok(SyntheticKind::Moons),
            "circles" => Ok(SyntheticKind::Circles),
            other => Err(Error::Parse(format!(
                "unknown dataset '{other}' (expected moons or circles)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub noise_sd: f64,
    /// Only used by circles.
    pub factor: f64,
    /// Multiplies all coordinates; `noise_sd` is in unscaled units.
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub seed: u64,
}

fn default_scale() -> f64 {
    DEFAULT_SCALE
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            noise_sd: DEFAULT_NOISE_SD,
            factor: DEFAULT_CIRCLES_FACTOR,
            scale: DEFAULT_SCALE,
            seed,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    pub fn with_factor(mut self, factor: f64) -> Self {
        self.factor = factor;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidCount(
                "dataset size must be at least 1".into(),
            ));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sd must be finite and non-negative, got {}",
                self.noise_sd
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "scale must be finite and positive, got {}",
                self.scale
            )));
        }
        if self.kind == SyntheticKind::Circles && !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "circles factor must lie in (0, 1), got {}",
                self.factor
            )));
        }
        Ok(())
    }
}

/// Points plus the component each one was drawn from (0 = upper moon or
/// outer circle, 1 = lower moon or inner circle).
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub points: PointSet,
    pub labels: Vec<u8>,
}

/// Draws the dataset described by `spec`; the first `ceil(n/2)` points belong
/// to component 0.
pub fn generate_labeled(spec: &SyntheticSpec) -> Result<Labeled> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;
    let n0 = spec.n.div_ceil(2);
    let mut data = Vec::with_capacity(spec.n * 2);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let label = u8::from(i >= n0);
        let (x, y) = match spec.kind {
            SyntheticKind::Moons => {
                let t = rng.random_range(0.0..=PI);
                if label == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                }
            }
            SyntheticKind::Circles => {
                let t = rng.random_range(0.0..2.0 * PI);
                let r = if label == 0 { 1.0 } else { spec.factor };
                (r * t.cos(), r * t.sin())
            }
        };
        data.push(spec.scale * (x + noise.sample(&mut rng)));
        data.push(spec.scale * (y + noise.sample(&mut rng)));
        labels.push(label);
    }
    Ok(Labeled {
        points: PointSet::new(spec.n, 2, data)?,
        labels,
    })
}

pub fn generate(spec: &SyntheticSpec) -> Result<PointSet> {
    generate_labeled(spec).map(|l| l.points)
}

/// Unit-scale moons.
pub fn make_moons(n: usize, noise_sd: f64, seed: u64) -> Result<PointSet> {
    generate(
        &SyntheticSpec::new(SyntheticKind::Moons, n, seed)
            .with_noise(noise_sd)
            .with_scale(1.0),
    )
}

/// Unit-scale circles (outer radius 1).
pub fn make_circles(n: usize, noise_sd: f64, factor: f64, seed: u64) -> Result<PointSet> {
    generate(
        &SyntheticSpec::new(SyntheticKind::Circles, n, seed)
            .with_noise(noise_sd)
            .with_factor(factor)
            .with_scale(1.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let spec = SyntheticSpec::new(SyntheticKind::Moons, 4, 1)
            .with_noise(0.0)
            .with_scale(1.0);
        let l = generate_labeled(&spec).unwrap();
        for (p, &lab) in l.points.points().zip(&l.labels) {
            let (x, y) = (p[0], p[1]);
            let r = if lab == 0 {
                (x * x + y * y).sqrt() - 1.0
            } else {
                ((1.0 - x).powi(2) + (0.5 - y).powi(2)).sqrt() - 1.0
            };
            assert!(r.abs() < 1e-9, "{p:?} label {lab}");
            let upper_half = if lab == 0 { y } else { 0.5 - y };
            assert!(upper_half >= -1e-12);
        }
    }

    #[test]
    fn noiseless_circles_have_two_radii() {
        let pts = make_circles(500, 0.0, 0.3, 2).unwrap();
        for p in pts.points() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() < 1e-12 || (r - 0.3).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn odd_split_favours_first_component() {
        let l = generate_labeled(&SyntheticSpec::new(SyntheticKind::Moons, 3, 0)).unwrap();
        assert_eq!(l.labels, vec![0, 0, 1]);
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = make_moons(100, 0.05, 9).unwrap();
        assert_eq!(a, make_moons(100, 0.05, 9).unwrap());
        assert_ne!(a, make_moons(100, 0.05, 10).unwrap());
    }

    #[test]
    fn scale_multiplies_coordinates() {
        let spec = SyntheticSpec::new(SyntheticKind::Circles, 50, 4).with_noise(0.1);
        let unit = generate(&spec.with_scale(1.0)).unwrap();
        let big = generate(&spec.with_scale(2.5)).unwrap();
        for (a, b) in unit.as_slice().iter().zip(big.as_slice()) {
            assert!((2.5 * a - b).abs() < 1e-12);
        }
        assert!(generate(&spec.with_scale(0.0)).is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(make_moons(0, 0.05, 0).is_err());
        assert!(make_moons(10, -1.0, 0).is_err());
        assert!(make_circles(10, 0.0, 1.0, 0).is_err());
    }
}
