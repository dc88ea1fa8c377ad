//! Resolved command settings.
//!
//! Each command starts from the defaults below, overlays a config file (TOML,
//! or the `config` object of a previously written JSON report) and finally
//! the command-line flags. The resolved struct is embedded in every report.

use std::path::{Path, PathBuf};

use otmap::datasets::{
    generate_labeled, read_points_csv, Labeled, SyntheticKind, SyntheticSpec,
    DEFAULT_CIRCLES_FACTOR, DEFAULT_NOISE_SD, DEFAULT_SCALE,
};
use otmap::mappers::{PoolSampler, TargetSampler};
use otmap::PointSet;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Reads settings from `path`, or returns the defaults when there is none.
pub fn load_settings<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config_err = |message: String| CliError::Config {
        path: path.to_path_buf(),
        message,
    };
    if path.extension().is_some_and(|e| e == "json") {
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
        if let Some(embedded) = value.get_mut("config") {
            value = embedded.take();
        }
        serde_json::from_value(value).map_err(|e| config_err(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| config_err(e.to_string()))
    }
}

/// Offsets that split one user seed into independent streams.
#[derive(Debug, Clone, Copy)]
pub enum SeedUse {
    Data = 0,
    EvalData = 1,
    NetInit = 2,
    Prior = 3,
    Trainer = 4,
    EvalPrior = 5,
    Clusters = 6,
    ClusterSamples = 7,
}

pub fn derive_seed(seed: u64, role: SeedUse) -> u64 {
    seed.wrapping_mul(16).wrapping_add(role as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Otgen,
    Ottrans,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Otgen => "otgen",
            Algo::Ottrans => "ottrans",
        }
    }
}

/// Where training and evaluation points come from: a synthetic generator
/// (`moons`, `circles`) or a CSV file of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSettings {
    pub dataset: String,
    pub noise_sd: f64,
    pub factor: f64,
    pub scale: f64,
}

impl Default for DataSettings {
    fn default() -> Self {
        Self {
            dataset: "moons".into(),
            noise_sd: DEFAULT_NOISE_SD,
            factor: DEFAULT_CIRCLES_FACTOR,
            scale: DEFAULT_SCALE,
        }
    }
}

impl DataSettings {
    pub fn synthetic_kind(&self) -> Option<SyntheticKind> {
        self.dataset.parse().ok()
    }

    pub fn spec(&self, n: usize, seed: u64) -> Option<SyntheticSpec> {
        self.synthetic_kind().map(|kind| {
            SyntheticSpec::new(kind, n, seed)
                .with_noise(self.noise_sd)
                .with_factor(self.factor)
                .with_scale(self.scale)
        })
    }

    /// A short name for tables: the generator name or the file stem.
    pub fn label(&self) -> String {
        match self.synthetic_kind() {
            Some(k) => k.name().to_string(),
            None => Path::new(&self.dataset)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.dataset.clone()),
        }
    }

    /// `n` labelled points: a fresh synthetic draw, or a seeded subsample
    /// (without replacement) of the CSV file.
    pub fn sample_labeled(&self, n: usize, seed: u64) -> CliResult<Labeled> {
        if let Some(spec) = self.spec(n, seed) {
            return Ok(generate_labeled(&spec)?);
        }
        let path = PathBuf::from(&self.dataset);
        let file = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let (points, _) = read_points_csv(file)?;
        if n > points.len() {
            return Err(CliError::Usage(format!(
                "{} holds {} points, {n} requested",
                path.display(),
                points.len()
            )));
        }
        let mut sampler = PoolSampler::new(points, seed);
        let points = sampler.next_batch(n)?;
        Ok(Labeled {
            labels: vec![0; n],
            points,
        })
    }

    pub fn sample(&self, n: usize, seed: u64) -> CliResult<PointSet> {
        Ok(self.sample_labeled(n, seed)?.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataSettings {
    pub data: DataSettings,
    pub n: usize,
    pub seed: u64,
}

impl Default for GenDataSettings {
    fn default() -> Self {
        Self {
            data: DataSettings::default(),
            n: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub algo: Algo,
    pub data: DataSettings,
    /// Size of the real pool OTgen draws batches from.
    pub train_n: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub lambda: f64,
    /// OTtrans pool size m.
    pub pool_m: usize,
    /// Hidden widths; empty means 4 x 512 for 2-D data and 6 x 512 otherwise.
    pub hidden: Vec<usize>,
    pub eval_n: usize,
    pub feedback_every: usize,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            algo: Algo::Otgen,
            data: DataSettings::default(),
            train_n: 10_000,
            steps: 10_000,
            batch: 128,
            lr: 3e-4,
            lambda: 0.0,
            pool_m: 4096,
            hidden: Vec::new(),
            eval_n: 10_000,
            feedback_every: 0,
            seed: 0,
        }
    }
}

pub fn mapper_hidden(hidden: &[usize], dim: usize) -> Vec<usize> {
    match (hidden.is_empty(), dim) {
        (false, _) => hidden.to_vec(),
        (true, 2) => vec![512; 4],
        (true, _) => vec![512; 6],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelEntry {
    pub name: String,
    pub path: PathBuf,
}

impl Default for ModelEntry {
    fn default() -> Self {
        Self {
            name: "model".into(),
            path: PathBuf::new(),
        }
    }
}

impl std::str::FromStr for ModelEntry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, path) = s
            .split_once('=')
            .ok_or_else(|| format!("expected NAME=PATH, got '{s}'"))?;
        Ok(Self {
            name: name.to_string(),
            path: path.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub data: DataSettings,
    pub train_n: usize,
    pub eval_n: usize,
    pub clusters: Vec<usize>,
    pub max_iters: usize,
    pub models: Vec<ModelEntry>,
    pub seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            data: DataSettings::default(),
            train_n: 10_000,
            eval_n: 10_000,
            clusters: vec![8, 16],
            max_iters: otmap::baseline::DEFAULT_MAX_ITERS,
            models: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    pub data: DataSettings,
    pub k: usize,
    pub train_n: usize,
    pub eval_n: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            data: DataSettings::default(),
            k: 16,
            train_n: 10_000,
            eval_n: 10_000,
            max_iters: otmap::baseline::DEFAULT_MAX_ITERS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeSettings {
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for AeSettings {
    fn default() -> Self {
        Self {
            hidden: vec![512, 256],
            latent: 8,
            steps: 10_000,
            batch: 128,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainAeSettings {
    pub images: PathBuf,
    pub labels: Option<PathBuf>,
    /// Use only the first `limit` images.
    pub limit: Option<usize>,
    pub ae: AeSettings,
    pub seed: u64,
}

impl Default for TrainAeSettings {
    fn default() -> Self {
        Self {
            images: PathBuf::from("data/mnist/train-images-idx3-ubyte"),
            labels: None,
            limit: None,
            ae: AeSettings::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapperSettings {
    pub algo: Algo,
    pub hidden: Vec<usize>,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub lambda: f64,
    pub pool_m: usize,
}

impl Default for MapperSettings {
    fn default() -> Self {
        Self {
            algo: Algo::Otgen,
            hidden: Vec::new(),
            steps: 10_000,
            batch: 128,
            lr: 3e-4,
            lambda: 0.0,
            pool_m: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    /// Directory holding the four MNIST IDX files under their original names.
    pub mnist_dir: PathBuf,
    pub train_limit: Option<usize>,
    pub ae: AeSettings,
    pub mapper: MapperSettings,
    /// Generated latents compared against this many held-out encodings.
    pub eval_n: usize,
    /// The image grid is `grid x grid` tiles.
    pub grid: usize,
    pub seed: u64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            mnist_dir: PathBuf::from("data/mnist"),
            train_limit: None,
            ae: AeSettings::default(),
            mapper: MapperSettings::default(),
            eval_n: 10_000,
            grid: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolateSettings {
    pub mapper: PathBuf,
    pub decoder: PathBuf,
    pub n0_seed: u64,
    pub n1_seed: u64,
    pub steps: usize,
}

impl Default for InterpolateSettings {
    fn default() -> Self {
        Self {
            mapper: PathBuf::from("mapper.ckpt"),
            decoder: PathBuf::from("decoder.ckpt"),
            n0_seed: 0,
            n1_seed: 1,
            steps: 10,
        }
    }
}
