use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otmap_cli::commands::{self, PlotInputs};
use otmap_cli::config::{
    load_settings, Algo, DataSettings, EvalSettings, GenDataSettings, InterpolateSettings,
    ModelEntry, PipelineSettings, TrainAeSettings, TrainSettings,
};
use otmap_cli::{CliResult, Report};

/// Exact optimal-transport mapping networks: data, training, evaluation, plots.
#[derive(Parser)]
#[command(name = "otmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic 2-D dataset to CSV
    GenData(GenDataArgs),
    /// Train an OTgen or OTtrans mapper and score it
    Train(TrainArgs),
    /// Write the divergence table (data, cluster baselines, checkpoints)
    Eval(EvalArgs),
    /// Fit and score the K-means Gaussian baseline
    Baseline(BaselineArgs),
    /// Render point CSVs or a feedback trace as SVG
    Plot(PlotArgs),
    /// Train the image autoencoder
    TrainAe(TrainAeArgs),
    /// Autoencoder, latent mapper, generation and image grid in one run
    Pipeline(PipelineArgs),
    /// Decode a noise-space interpolation to a PGM strip
    Interpolate(InterpolateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML settings, or a report.json whose embedded config is rerun
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $OTMAP_OUT_DIR/<command> or out/<command>]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn out_dir(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let base = std::env::var_os("OTMAP_OUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out"));
            base.join(command)
        })
    }
}

#[derive(Args)]
struct DataArgs {
    /// moons, circles, or a CSV file of points
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    factor: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
}

impl DataArgs {
    fn apply(&self, d: &mut DataSettings) {
        set(&mut d.dataset, self.data.clone());
        set(&mut d.noise_sd, self.noise);
        set(&mut d.factor, self.factor);
        set(&mut d.scale, self.scale);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, required_unless_present = "config")]
    algo: Option<Algo>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    pool_m: Option<usize>,
    #[arg(long)]
    train_n: Option<usize>,
    #[arg(long)]
    eval_n: Option<usize>,
    /// Comma-separated hidden widths
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Record a feedback trace every N OTgen steps
    #[arg(long)]
    feedback_every: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    train_n: Option<usize>,
    #[arg(long)]
    eval_n: Option<usize>,
    /// Comma-separated cluster counts
    #[arg(long, value_delimiter = ',')]
    clusters: Option<Vec<usize>>,
    /// NAME=PATH of a mapper checkpoint; repeatable
    #[arg(long = "model")]
    models: Vec<ModelEntry>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    train_n: Option<usize>,
    #[arg(long)]
    eval_n: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    generated: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// traces.json written by `train --feedback-every`
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Which trace in the file to draw
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct AeArgs {
    #[arg(long)]
    latent: Option<usize>,
    /// Comma-separated encoder hidden widths
    #[arg(long, value_delimiter = ',')]
    ae_hidden: Option<Vec<usize>>,
    #[arg(long)]
    ae_steps: Option<usize>,
    #[arg(long)]
    ae_batch: Option<usize>,
    #[arg(long)]
    ae_lr: Option<f64>,
}

impl AeArgs {
    fn apply(&self, a: &mut otmap_cli::config::AeSettings) {
        set(&mut a.latent, self.latent);
        set(&mut a.hidden, self.ae_hidden.clone());
        set(&mut a.steps, self.ae_steps);
        set(&mut a.batch, self.ae_batch);
        set(&mut a.lr, self.ae_lr);
    }
}

#[derive(Args)]
struct TrainAeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    limit: Option<usize>,
    #[command(flatten)]
    ae: AeArgs,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    #[arg(long)]
    train_limit: Option<usize>,
    #[command(flatten)]
    ae: AeArgs,
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    pool_m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    eval_n: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct InterpolateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    mapper: Option<PathBuf>,
    #[arg(long)]
    decoder: Option<PathBuf>,
    #[arg(long)]
    n0_seed: Option<u64>,
    #[arg(long)]
    n1_seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
}

fn settings<T: serde::de::DeserializeOwned + Default>(c: &Common) -> CliResult<T> {
    load_settings(c.config.as_deref())
}

fn run(cli: Cli) -> CliResult<Option<Report>> {
    let report = match cli.command {
        Command::GenData(a) => {
            let mut s: GenDataSettings = settings(&a.common)?;
            a.data.apply(&mut s.data);
            set(&mut s.n, a.n);
            set(&mut s.seed, a.common.seed);
            commands::gen_data(&s, &a.common.out_dir("gen-data"))?
        }
        Command::Train(a) => {
            let mut s: TrainSettings = settings(&a.common)?;
            set(&mut s.algo, a.algo);
            a.data.apply(&mut s.data);
            set(&mut s.steps, a.steps);
            set(&mut s.lr, a.lr);
            set(&mut s.batch, a.batch);
            set(&mut s.lambda, a.lambda);
            set(&mut s.pool_m, a.pool_m);
            set(&mut s.train_n, a.train_n);
            set(&mut s.eval_n, a.eval_n);
            set(&mut s.hidden, a.hidden);
            set(&mut s.feedback_every, a.feedback_every);
            set(&mut s.seed, a.common.seed);
            commands::train(&s, &a.common.out_dir("train"))?
        }
        Command::Eval(a) => {
            let mut s: EvalSettings = settings(&a.common)?;
            a.data.apply(&mut s.data);
            set(&mut s.train_n, a.train_n);
            set(&mut s.eval_n, a.eval_n);
            set(&mut s.clusters, a.clusters);
            if !a.models.is_empty() {
                s.models = a.models;
            }
            set(&mut s.seed, a.common.seed);
            let out = a.common.out_dir("eval");
            let report = commands::eval(&s, &out)?;
            let table = out.join("table.csv");
            let text =
                std::fs::read_to_string(&table).map_err(|e| otmap_cli::CliError::io(&table, e))?;
            print!("{text}");
            report
        }
        Command::Baseline(a) => {
            let mut s: otmap_cli::config::BaselineSettings = settings(&a.common)?;
            a.data.apply(&mut s.data);
            set(&mut s.k, a.k);
            set(&mut s.train_n, a.train_n);
            set(&mut s.eval_n, a.eval_n);
            set(&mut s.max_iters, a.max_iters);
            set(&mut s.seed, a.common.seed);
            commands::baseline(&s, &a.common.out_dir("baseline"))?
        }
        Command::Plot(a) => {
            let path = commands::plot(&PlotInputs {
                real: a.real,
                generated: a.generated,
                predictions: a.predictions,
                trace: a.trace,
                index: a.index,
                output: a.output,
            })?;
            println!("wrote {}", path.display());
            return Ok(None);
        }
        Command::TrainAe(a) => {
            let mut s: TrainAeSettings = settings(&a.common)?;
            set(&mut s.images, a.images);
            if a.labels.is_some() {
                s.labels = a.labels;
            }
            if a.limit.is_some() {
                s.limit = a.limit;
            }
            a.ae.apply(&mut s.ae);
            set(&mut s.seed, a.common.seed);
            commands::train_ae(&s, &a.common.out_dir("train-ae"))?
        }
        Command::Pipeline(a) => {
            let mut s: PipelineSettings = settings(&a.common)?;
            set(&mut s.mnist_dir, a.mnist_dir);
            if a.train_limit.is_some() {
                s.train_limit = a.train_limit;
            }
            a.ae.apply(&mut s.ae);
            set(&mut s.mapper.algo, a.algo);
            set(&mut s.mapper.steps, a.steps);
            set(&mut s.mapper.lr, a.lr);
            set(&mut s.mapper.batch, a.batch);
            set(&mut s.mapper.lambda, a.lambda);
            set(&mut s.mapper.pool_m, a.pool_m);
            set(&mut s.mapper.hidden, a.hidden);
            set(&mut s.eval_n, a.eval_n);
            set(&mut s.grid, a.grid);
            set(&mut s.seed, a.common.seed);
            commands::pipeline(&s, &a.common.out_dir("pipeline"))?
        }
        Command::Interpolate(a) => {
            let mut s: InterpolateSettings = settings(&a.common)?;
            set(&mut s.mapper, a.mapper);
            set(&mut s.decoder, a.decoder);
            set(&mut s.n0_seed, a.n0_seed);
            set(&mut s.n1_seed, a.n1_seed);
            set(&mut s.steps, a.steps);
            commands::interpolate(&s, &a.common.out_dir("interpolate"))?
        }
    };
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Some(report)) => {
            let path = report
                .outputs
                .get("report")
                .map(|p| p.as_path())
                .unwrap_or(Path::new("report.json"));
            println!(
                "{}",
                serde_json::to_string_pretty(&report.results).unwrap_or_default()
            );
            eprintln!("report: {}", path.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
