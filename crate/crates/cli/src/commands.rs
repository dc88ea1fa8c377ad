use std::path::{Path, PathBuf};

use otmap::autoenc::{decode, encode, train_autoencoder, AeTrainConfig, AutoencoderSpec};
use otmap::baseline::{kmeans_fit, sample_cluster_model};
use otmap::datasets::{load_idx, write_points_csv, ImageBatch};
use otmap::mappers::{
    generate, map_points, sample_prior, train_otgen, train_ottrans, write_loss_csv, PoolSampler,
    PriorSpec, TargetSampler, TrainConfig, TrainOutcome,
};
use otmap::neural::{leaky_stack, Checkpoint, Mlp};
use otmap::ot::{divergence, CostMetric};
use otmap::PointSet;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    derive_seed, mapper_hidden, Algo, BaselineSettings, EvalSettings, GenDataSettings,
    InterpolateSettings, MapperSettings, PipelineSettings, SeedUse, TrainAeSettings, TrainSettings,
};
use crate::error::{CliError, CliResult, StageExt};
use crate::render::{self, Layer};
use crate::report::{write_file, Report, ReportBuilder};

fn write_points(path: &Path, points: &PointSet, labels: Option<&[u8]>) -> CliResult<()> {
    let mut buf = Vec::new();
    write_points_csv(&mut buf, points, labels)?;
    write_file(path, &buf)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string(value).map_err(otmap::Error::from)?;
    write_file(path, text.as_bytes())
}

fn save_checkpoint(path: &Path, ck: &Checkpoint<f32>) -> CliResult<()> {
    write_file(path, &ck.to_bytes()?)
}

fn load_checkpoint(path: &Path) -> CliResult<Checkpoint<f32>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(Checkpoint::from_bytes(&bytes)?)
}

/// `gen-data`: one synthetic sample as `x,y,label` CSV.
pub fn gen_data(s: &GenDataSettings, out: &Path) -> CliResult<Report> {
    let mut report = ReportBuilder::new("gen-data", s.seed, s)?;
    if s.data.synthetic_kind().is_none() {
        return Err(CliError::Usage(format!(
            "gen-data needs a synthetic dataset (moons or circles), got '{}'",
            s.data.dataset
        )));
    }
    let data = s
        .data
        .sample_labeled(s.n, derive_seed(s.seed, SeedUse::Data))?;
    let path = out.join(format!("{}.csv", s.data.label()));
    write_points(&path, &data.points, Some(&data.labels))?;
    report.output("points", &path);
    let (lo, hi) = data.points.bounds();
    report.finish(out, json!({ "n": s.n, "min": lo, "max": hi }))
}

fn mapper_config(m: &MapperSettings, dim: usize, seed: u64, feedback_every: usize) -> TrainConfig {
    TrainConfig {
        steps: m.steps,
        batch_k: m.batch,
        lr: m.lr,
        lambda_div: m.lambda,
        transport_pool_m: m.pool_m,
        prior: PriorSpec::uniform(dim, derive_seed(seed, SeedUse::Prior)),
        seed: derive_seed(seed, SeedUse::Trainer),
        cost: CostMetric::SquaredEuclidean,
        feedback_every,
    }
}

/// Trains a mapper onto `pool` (OTgen draws batches from it; OTtrans uses a
/// seeded subsample of `pool_m` points as its fixed target set).
fn train_mapper(
    m: &MapperSettings,
    pool: &PointSet,
    seed: u64,
    feedback_every: usize,
) -> CliResult<(TrainOutcome<f32>, TrainConfig)> {
    let dim = pool.dim();
    let cfg = mapper_config(m, dim, seed, feedback_every);
    let specs = leaky_stack(dim, &mapper_hidden(&m.hidden, dim), dim);
    let net = Mlp::<f32>::init(&specs, derive_seed(seed, SeedUse::NetInit))?;
    let outcome = match m.algo {
        Algo::Otgen => {
            let mut sampler = PoolSampler::new(pool.clone(), cfg.seed);
            train_otgen(&mut sampler, &cfg, net)?
        }
        Algo::Ottrans => {
            if m.pool_m > pool.len() {
                return Err(CliError::Usage(format!(
                    "pool_m {} exceeds the {} available training points",
                    m.pool_m,
                    pool.len()
                )));
            }
            let targets = PoolSampler::new(pool.clone(), cfg.seed).next_batch(m.pool_m)?;
            train_ottrans(&targets, &cfg, net)?
        }
    };
    Ok((outcome, cfg))
}

fn mapper_checkpoint(
    outcome: &TrainOutcome<f32>,
    cfg: &TrainConfig,
    algo: Algo,
) -> Checkpoint<f32> {
    Checkpoint {
        net: outcome.net.clone(),
        adam: Some(outcome.adam.clone()),
        rng: Some(outcome.prior_rng),
        meta: json!({ "role": "mapper", "algo": algo.name(), "prior": cfg.prior }),
    }
}

/// `train`: OTgen or OTtrans on a synthetic set or a point CSV, then the
/// divergence between `eval_n` generated and `eval_n` fresh real points.
pub fn train(s: &TrainSettings, out: &Path) -> CliResult<Report> {
    let mut report = ReportBuilder::new("train", s.seed, s)?;
    let pool_n = match s.algo {
        Algo::Otgen => s.train_n,
        Algo::Ottrans => s.pool_m,
    };
    let pool = s.data.sample(pool_n, derive_seed(s.seed, SeedUse::Data))?;
    let m = MapperSettings {
        algo: s.algo,
        hidden: s.hidden.clone(),
        steps: s.steps,
        batch: s.batch,
        lr: s.lr,
        lambda: s.lambda,
        pool_m: s.pool_m,
    };
    let (outcome, cfg) = train_mapper(&m, &pool, s.seed, s.feedback_every)?;

    let eval_prior = PriorSpec::uniform(pool.dim(), derive_seed(s.seed, SeedUse::EvalPrior));
    let generated = generate(&outcome.net, &eval_prior, s.eval_n)?;
    let real = s
        .data
        .sample(s.eval_n, derive_seed(s.seed, SeedUse::EvalData))?;
    let div = divergence(&generated, &real)?;

    let ckpt = out.join("model.ckpt");
    save_checkpoint(&ckpt, &mapper_checkpoint(&outcome, &cfg, s.algo))?;
    report.output("checkpoint", &ckpt);
    let losses = out.join("losses.csv");
    let mut buf = Vec::new();
    write_loss_csv(&mut buf, &outcome.losses)?;
    write_file(&losses, &buf)?;
    report.output("losses", &losses);
    let gen_path = out.join("generated.csv");
    write_points(&gen_path, &generated, None)?;
    report.output("generated", &gen_path);
    let real_path = out.join("real.csv");
    write_points(&real_path, &real, None)?;
    report.output("real", &real_path);
    if !outcome.traces.is_empty() {
        let path = out.join("traces.json");
        write_json(&path, &outcome.traces)?;
        report.output("traces", &path);
    }
    let last = outcome.losses.last().expect("at least one step");
    report.finish(
        out,
        json!({
            "algo": s.algo.name(),
            "dataset": s.data.label(),
            "divergence": div,
            "eval_n": s.eval_n,
            "final_loss": last.loss,
            "final_divergence_estimate": last.divergence_estimate,
            "param_count": outcome.net.param_count(),
        }),
    )
}

/// One row of the divergence table written by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TableRow {
    pub method: String,
    pub dataset: String,
    pub divergence: f64,
    pub eval_n: usize,
    pub seed: u64,
}

fn cluster_divergence(
    train: &PointSet,
    real: &PointSet,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> CliResult<(f64, otmap::baseline::KMeansFit, PointSet)> {
    let fit = kmeans_fit(train, k, max_iters, derive_seed(seed, SeedUse::Clusters))?;
    let samples = sample_cluster_model(
        &fit.model,
        real.len(),
        derive_seed(seed, SeedUse::ClusterSamples),
    )?;
    Ok((divergence(&samples, real)?, fit, samples))
}

/// `eval`: the divergence table. Rows: a second real sample (`data`), one
/// cluster baseline per `k`, and one row per mapper checkpoint.
pub fn eval(s: &EvalSettings, out: &Path) -> CliResult<Report> {
    let mut report = ReportBuilder::new("eval", s.seed, s)?;
    let real = s
        .data
        .sample(s.eval_n, derive_seed(s.seed, SeedUse::EvalData))?;
    let train = s
        .data
        .sample(s.train_n, derive_seed(s.seed, SeedUse::Data))?;
    let dataset = s.data.label();
    let row = |method: String, divergence: f64| TableRow {
        method,
        dataset: dataset.clone(),
        divergence,
        eval_n: s.eval_n,
        seed: s.seed,
    };
    let mut rows = Vec::new();
    let second = s
        .data
        .sample(s.eval_n, derive_seed(s.seed, SeedUse::Data))?;
    rows.push(row("data".into(), divergence(&second, &real)?));
    for &k in &s.clusters {
        let (d, _, _) = cluster_divergence(&train, &real, k, s.max_iters, s.seed)?;
        rows.push(row(format!("cluster_k{k}"), d));
    }
    for model in &s.models {
        let ck = load_checkpoint(&model.path)?;
        let prior = PriorSpec::uniform(ck.net.input_dim(), derive_seed(s.seed, SeedUse::EvalPrior));
        let generated = generate(&ck.net, &prior, s.eval_n)?;
        rows.push(row(model.name.clone(), divergence(&generated, &real)?));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(otmap::Error::from)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| otmap::Error::Parse(e.to_string()))?;
    let path = out.join("table.csv");
    write_file(&path, &bytes)?;
    report.output("table", &path);
    report.finish(out, json!({ "rows": rows }))
}

/// `baseline`: K-means + one Gaussian per cluster, sampled and scored.
pub fn baseline(s: &BaselineSettings, out: &Path) -> CliResult<Report> {
    let mut report = ReportBuilder::new("baseline", s.seed, s)?;
    let train = s
        .data
        .sample(s.train_n, derive_seed(s.seed, SeedUse::Data))?;
    let real = s
        .data
        .sample(s.eval_n, derive_seed(s.seed, SeedUse::EvalData))?;
    let (div, fit, samples) = cluster_divergence(&train, &real, s.k, s.max_iters, s.seed)?;
    let model_path = out.join("cluster_model.json");
    write_json(&model_path, &fit.model)?;
    report.output("model", &model_path);
    let samples_path = out.join("samples.csv");
    write_points(&samples_path, &samples, None)?;
    report.output("samples", &samples_path);
    report.finish(
        out,
        json!({
            "k": s.k,
            "dataset": s.data.label(),
            "divergence": div,
            "eval_n": s.eval_n,
            "sse": fit.sse(),
            "iterations": fit.iterations,
        }),
    )
}

/// Inputs of the `plot` command. With `trace` set a feedback plot is drawn,
/// otherwise a scatter of whichever point files are given.
#[derive(Debug, Clone, Default)]
pub struct PlotInputs {
    pub real: Option<PathBuf>,
    pub generated: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub index: usize,
    pub output: PathBuf,
}

fn read_points_file(path: &Path) -> CliResult<PointSet> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let (points, _) = otmap::datasets::read_points_csv(file).map_err(|e| CliError::Stage {
        stage: "reading points",
        source: Box::new(e.into()),
    })?;
    Ok(points)
}

fn read_trace(path: &Path, index: usize) -> CliResult<otmap::mappers::FeedbackTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let items: Vec<serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| otmap::Error::Parse(format!("trace file: {e}")))?;
    let item = items.get(index).ok_or_else(|| {
        otmap::Error::Parse(format!(
            "trace index {index} out of range ({} traces)",
            items.len()
        ))
    })?;
    let trace = serde_json::from_value(item.clone())
        .map_err(|e| otmap::Error::Parse(format!("trace {index}: {e}")))?;
    Ok(trace)
}

/// `plot`: renders the whole SVG in memory and writes it only on success.
pub fn plot(p: &PlotInputs) -> CliResult<PathBuf> {
    let svg = if let Some(trace) = &p.trace {
        render::feedback_svg(&read_trace(trace, p.index)?)?
    } else {
        let mut sets = Vec::new();
        for (path, color, label) in [
            (&p.real, render::REAL, "real"),
            (&p.generated, render::GENERATED, "generated"),
            (&p.predictions, render::PREDICTED, "predictions"),
        ] {
            if let Some(path) = path {
                sets.push((read_points_file(path)?, color, label));
            }
        }
        if sets.is_empty() {
            return Err(CliError::Usage(
                "plot needs --trace or at least one of --real, --generated, --predictions".into(),
            ));
        }
        let layers: Vec<Layer> = sets
            .iter()
            .map(|(points, color, label)| Layer {
                points,
                color,
                label,
            })
            .collect();
        render::scatter_svg(&layers)?
    };
    write_file(&p.output, svg.as_bytes())?;
    Ok(p.output.clone())
}

fn ae_spec(a: &crate::config::AeSettings, input_dim: usize) -> AutoencoderSpec {
    AutoencoderSpec::new(input_dim, a.hidden.clone(), a.latent)
}

fn ae_checkpoints(
    model: &otmap::autoenc::Autoencoder,
    images: &ImageBatch,
) -> (Checkpoint<f32>, Checkpoint<f32>) {
    let image = json!({ "h": images.h, "w": images.w, "c": images.c });
    let mut enc = Checkpoint::new(model.encoder.clone());
    enc.meta = json!({ "role": "encoder", "image": image });
    let mut dec = Checkpoint::new(model.decoder.clone());
    dec.meta = json!({ "role": "decoder", "image": image });
    (enc, dec)
}

fn limit_images(images: ImageBatch, limit: Option<usize>) -> ImageBatch {
    match limit {
        Some(n) if n < images.len() => images.select(&(0..n).collect::<Vec<_>>()),
        _ => images,
    }
}

/// `train-ae`: autoencoder on an IDX image file; writes both halves and
/// the encoded training set.
pub fn train_ae(s: &TrainAeSettings, out: &Path) -> CliResult<Report> {
    let mut report = ReportBuilder::new("train-ae", s.seed, s)?;
    let images = load_idx(&s.images, s.labels.as_deref()).stage("loading images")?;
    let images = limit_images(images, s.limit);
    let spec = ae_spec(&s.ae, images.pixel_dim());
    let cfg = AeTrainConfig {
        steps: s.ae.steps,
        batch: s.ae.batch,
        lr: s.ae.lr,
        seed: derive_seed(s.seed, SeedUse::NetInit),
    };
    let trained = train_autoencoder(&images, &spec, &cfg).stage("autoencoder")?;
    let (enc, dec) = ae_checkpoints(&trained.model, &images);
    for (name, ck) in [("encoder", &enc), ("decoder", &dec)] {
        let path = out.join(format!("{name}.ckpt"));
        save_checkpoint(&path, ck)?;
        report.output(name, &path);
    }
    let latents = encode(&trained.model.encoder, &images)?;
    let latent_path = out.join("latents.csv");
    write_points(&latent_path, &latents, images.labels.as_deref())?;
    report.output("latents", &latent_path);
    let loss_path = out.join("ae_losses.csv");
    write_ae_losses(&loss_path, &trained.losses)?;
    report.output("losses", &loss_path);
    let mse = trained.model.reconstruction_mse(&images)?;
    report.finish(
        out,
        json!({
            "n_images": images.len(),
            "train_mse": mse,
            "first_batch_mse": trained.losses[0].mse,
            "final_batch_mse": trained.losses.last().expect("steps > 0").mse,
        }),
    )
}

fn write_ae_losses(path: &Path, losses: &[otmap::autoenc::AeLossRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in losses {
        w.serialize(r).map_err(otmap::Error::from)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| otmap::Error::Parse(e.to_string()))?;
    write_file(path, &bytes)
}

fn mnist_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// `pipeline`: autoencoder, encoding, latent mapper, generation, decoding,
/// image grid and the latent-space divergence check against held-out data.
pub fn pipeline(s: &PipelineSettings, out: &Path) -> CliResult<Report> {
    let mut report = ReportBuilder::new("pipeline", s.seed, s)?;
    let dir = &s.mnist_dir;
    let train_labels = mnist_file(dir, "train-labels-idx1-ubyte");
    let train = load_idx(
        mnist_file(dir, "train-images-idx3-ubyte"),
        Some(train_labels.as_path()),
    )
    .stage("loading training images")?;
    let train = limit_images(train, s.train_limit);
    let test_labels = mnist_file(dir, "t10k-labels-idx1-ubyte");
    let test = load_idx(
        mnist_file(dir, "t10k-images-idx3-ubyte"),
        Some(test_labels.as_path()),
    )
    .stage("loading held-out images")?;
    if s.eval_n > test.len() || s.eval_n > train.len() {
        return Err(CliError::Usage(format!(
            "eval_n {} exceeds the {} held-out or {} training images",
            s.eval_n,
            test.len(),
            train.len()
        )));
    }

    let spec = ae_spec(&s.ae, train.pixel_dim());
    let ae_cfg = AeTrainConfig {
        steps: s.ae.steps,
        batch: s.ae.batch,
        lr: s.ae.lr,
        seed: derive_seed(s.seed, SeedUse::NetInit),
    };
    let ae = train_autoencoder(&train, &spec, &ae_cfg).stage("autoencoder")?;
    let z_train = encode(&ae.model.encoder, &train).stage("encoding")?;
    let z_test = encode(&ae.model.encoder, &test).stage("encoding")?;

    let (mapper, cfg) = train_mapper(&s.mapper, &z_train, s.seed, 0).stage("mapper")?;
    let eval_prior = PriorSpec::uniform(z_train.dim(), derive_seed(s.seed, SeedUse::EvalPrior));
    let generated = generate(&mapper.net, &eval_prior, s.eval_n).stage("generation")?;
    let images =
        decode(&ae.model.decoder, &generated, train.h, train.w, train.c).stage("decoding")?;

    let held = PoolSampler::new(z_test, derive_seed(s.seed, SeedUse::EvalData))
        .next_batch(s.eval_n)
        .stage("evaluation")?;
    let train_sub = PoolSampler::new(z_train, derive_seed(s.seed, SeedUse::Data))
        .next_batch(s.eval_n)
        .stage("evaluation")?;
    let gen_div = divergence(&generated, &held).stage("evaluation")?;
    let data_div = divergence(&train_sub, &held).stage("evaluation")?;

    let (enc_ck, dec_ck) = ae_checkpoints(&ae.model, &train);
    for (name, ck) in [
        ("encoder", enc_ck),
        ("decoder", dec_ck),
        ("mapper", mapper_checkpoint(&mapper, &cfg, s.mapper.algo)),
    ] {
        let path = out.join(format!("{name}.ckpt"));
        save_checkpoint(&path, &ck)?;
        report.output(name, &path);
    }
    let grid_path = out.join("grid.pgm");
    write_file(&grid_path, &render::pgm_grid(&images, s.grid, s.grid)?)?;
    report.output("grid", &grid_path);
    let ae_loss_path = out.join("ae_losses.csv");
    write_ae_losses(&ae_loss_path, &ae.losses)?;
    report.output("ae_losses", &ae_loss_path);
    let mut buf = Vec::new();
    write_loss_csv(&mut buf, &mapper.losses)?;
    let mapper_loss_path = out.join("mapper_losses.csv");
    write_file(&mapper_loss_path, &buf)?;
    report.output("mapper_losses", &mapper_loss_path);

    let (pmin, pmax) = images
        .pixels
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    report.finish(
        out,
        json!({
            "ae_train_mse": ae.model.reconstruction_mse(&train)?,
            "ae_test_mse": ae.model.reconstruction_mse(&test)?,
            "latent_dim": spec.latent_dim,
            "eval_n": s.eval_n,
            "latent_divergence_generated": gen_div,
            "latent_divergence_data": data_div,
            "divergence_ratio": gen_div / data_div,
            "pixel_min": pmin,
            "pixel_max": pmax,
            "pixels_finite": images.pixels.iter().all(|v| v.is_finite()),
            "mapper_final_loss": mapper.losses.last().expect("steps > 0").loss,
        }),
    )
}

fn image_dims(ck: &Checkpoint<f32>, path: &Path) -> CliResult<(usize, usize, usize)> {
    let dim = |k: &str| ck.meta["image"][k].as_u64().map(|v| v as usize);
    match (dim("h"), dim("w"), dim("c")) {
        (Some(h), Some(w), Some(c)) => Ok((h, w, c)),
        _ => Err(otmap::Error::Format(format!(
            "{} carries no image dimensions; is it a decoder checkpoint?",
            path.display()
        ))
        .into()),
    }
}

/// Noise-space interpolation frames decoded to images.
pub struct Interpolation {
    pub frames: ImageBatch,
    /// Mean absolute pixel difference between consecutive frames.
    pub adjacent: Vec<f64>,
    /// Same, between the first and last frame.
    pub endpoint: f64,
}

pub fn interpolation_frames(
    mapper: &Mlp<f32>,
    decoder: &Mlp<f32>,
    dims: (usize, usize, usize),
    n0_seed: u64,
    n1_seed: u64,
    steps: usize,
) -> CliResult<Interpolation> {
    if steps < 2 {
        return Err(otmap::Error::InvalidCount(format!(
            "interpolation needs at least 2 steps, got {steps}"
        ))
        .into());
    }
    let dim = mapper.input_dim();
    let n0 = sample_prior(&PriorSpec::uniform(dim, n0_seed), 1)?;
    let n1 = sample_prior(&PriorSpec::uniform(dim, n1_seed), 1)?;
    let mut noise = Vec::with_capacity(steps * dim);
    for t in 0..steps {
        let a = t as f64 / (steps - 1) as f64;
        noise.extend(
            n0.as_slice()
                .iter()
                .zip(n1.as_slice())
                .map(|(x, y)| (1.0 - a) * x + a * y),
        );
    }
    let latents = map_points(mapper, &PointSet::new(steps, dim, noise)?)?;
    let frames = decode(decoder, &latents, dims.0, dims.1, dims.2)?;
    let mad = |i: usize, j: usize| {
        let (a, b) = (frames.image(i), frames.image(j));
        a.iter()
            .zip(b)
            .map(|(x, y)| f64::from((x - y).abs()))
            .sum::<f64>()
            / a.len() as f64
    };
    let adjacent = (1..steps).map(|i| mad(i - 1, i)).collect();
    let endpoint = mad(0, steps - 1);
    Ok(Interpolation {
        frames,
        adjacent,
        endpoint,
    })
}

/// `interpolate`: a 1 x steps PGM strip between two prior samples.
pub fn interpolate(s: &InterpolateSettings, out: &Path) -> CliResult<Report> {
    let mut report = ReportBuilder::new("interpolate", s.n0_seed, s)?;
    let mapper = load_checkpoint(&s.mapper)?;
    let decoder = load_checkpoint(&s.decoder)?;
    let dims = image_dims(&decoder, &s.decoder)?;
    let interp = interpolation_frames(
        &mapper.net,
        &decoder.net,
        dims,
        s.n0_seed,
        s.n1_seed,
        s.steps,
    )?;
    let path = out.join("interpolation.pgm");
    write_file(&path, &render::pgm_grid(&interp.frames, s.steps, 1)?)?;
    report.output("strip", &path);
    report.finish(
        out,
        json!({
            "steps": s.steps,
            "adjacent_mean_abs_diff": interp.adjacent,
            "endpoint_mean_abs_diff": interp.endpoint,
        }),
    )
}
