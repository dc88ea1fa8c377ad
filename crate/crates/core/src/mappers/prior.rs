use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::RngState;
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    /// Independent coordinates uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
}

impl Default for PriorKind {
    fn default() -> Self {
        PriorKind::Uniform {
            low: -1.0,
            high: 1.0,
        }
    }
}

/// Noise distribution fed to a mapping network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    #[serde(default)]
    pub kind: PriorKind,
    pub dim: usize,
    pub seed: u64,
}

impl PriorSpec {
    /// Uniform on `[-1, 1)^dim`.
    pub fn uniform(dim: usize, seed: u64) -> Self {
        Self {
            kind: PriorKind::default(),
            dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig(
                "prior dimension must be at least 1".into(),
            ));
        }
        let PriorKind::Uniform { low, high } = self.kind;
        if !(low < high && low.is_finite() && high.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "uniform prior needs finite low < high, got [{low}, {high})"
            )));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<PriorSampler> {
        PriorSampler::new(*self)
    }
}

/// Stateful draws from a prior; successive calls continue one seeded stream.
#[derive(Debug, Clone)]
pub struct PriorSampler {
    spec: PriorSpec,
    rng: ChaCha8Rng,
}

impl PriorSampler {
    pub fn new(spec: PriorSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
        })
    }

    pub fn spec(&self) -> &PriorSpec {
        &self.spec
    }

    pub fn sample(&mut self, k: usize) -> Result<PointSet> {
        if k == 0 {
            return Err(Error::InvalidCount(
                "cannot sample zero prior points".into(),
            ));
        }
        let PriorKind::Uniform { low, high } = self.spec.kind;
        let data = (0..k * self.spec.dim)
            .map(|_| self.rng.random_range(low..high))
            .collect();
        PointSet::new(k, self.spec.dim, data)
    }

    pub fn rng_state(&self) -> RngState {
        RngState::capture(self.spec.seed, &self.rng)
    }
}

/// `k` draws from a fresh sampler for `spec`.
pub fn sample_prior(spec: &PriorSpec, k: usize) -> Result<PointSet> {
    PriorSampler::new(*spec)?.sample(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_range_and_mean() {
        let p = sample_prior(&PriorSpec::uniform(2, 5), 10_000).unwrap();
        let mean = p.mean();
        assert!(mean.iter().all(|m| m.abs() < 0.02), "{mean:?}");
        assert!(p.as_slice().iter().all(|&v| (-1.0..1.0).contains(&v)));
        let one = sample_prior(&PriorSpec::uniform(2, 5), 1).unwrap();
        assert_eq!(one.shape(), (1, 2));
    }

    #[test]
    fn fresh_samplers_repeat_and_streams_continue() {
        let spec = PriorSpec::uniform(3, 11);
        assert_eq!(
            sample_prior(&spec, 50).unwrap(),
            sample_prior(&spec, 50).unwrap()
        );
        let mut s = spec.sampler().unwrap();
        let first = s.sample(50).unwrap();
        assert_ne!(first, s.sample(50).unwrap());
        assert!(s.sample(0).is_err());
    }
}
