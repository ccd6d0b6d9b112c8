//! `obk`: generate datasets, train, sweep and infer from the command line.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use obk_core::datagen::{self, DataSpec};
use obk_core::eval::{self, SweepBase, SweepSpec};
use obk_core::inference::infer_all;
use obk_core::{
    csv_io, DistanceMode, Hyperparams, InferenceParams, Matrix, ModelSnapshot, SweepAxis,
};

use config::{parse_seeds, parse_values, FileConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad input detected before any computation; exit code 1.
    Validation(String),
    /// Failure while running; exit code 2.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        format!("error: {kind}: {}", msg.replace(['\n', '\r'], " "))
    }
}

impl From<obk_core::Error> for CliError {
    fn from(e: obk_core::Error) -> Self {
        use obk_core::Error::*;
        match e {
            Io(_) | Csv(_) | Json(_) | Malformed(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "obk", version, about = "Online balanced k-means experiments")]
struct Cli {
    /// Seed for data generation, splitting and Monte Carlo draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Train one model and export its snapshot and windowed record.
    Train(TrainArgs),
    /// Sweep one hyperparameter over values and seeds.
    Sweep(SweepArgs),
    /// Predict the last coordinate of query points with all seven methods.
    Infer(InferArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Preset name, e.g. `normal_2clust`.
    #[arg(long)]
    preset: Option<String>,
    /// Number of points to generate.
    #[arg(long)]
    n: Option<usize>,
    /// Point dimension, including the predicted last coordinate.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// `euclidean` or `squared_euclidean`.
    #[arg(long)]
    distance: Option<DistanceMode>,
    /// Points per loss/error window.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Args)]
struct InferenceArgs {
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    merge_alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    cs_beta: Option<f64>,
    /// Use the unnormalized exponential cluster-size weights.
    #[arg(long)]
    cs_exp_literal: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output path; defaults to `<out-dir>/data.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset CSV. Without it, the preset is generated from `--seed`.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    gen: DataArgs,
    /// Fraction of rows used for training.
    #[arg(long)]
    train_fraction: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    inference: InferenceArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    preset: Option<String>,
    /// `k`, `alpha` or `beta`.
    #[arg(long)]
    axis: Option<String>,
    /// `start:end:step` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// Comma-separated seeds; defaults to `--seed`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    inference: InferenceArgs,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Model snapshot JSON written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// CSV of queries with `dim - 1` columns.
    #[arg(long)]
    queries: PathBuf,
    /// Output path; defaults to `<out-dir>/predictions.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the training mean stored in the snapshot.
    #[arg(long, allow_hyphen_values = true)]
    overall_mean: Option<f64>,
    #[command(flatten)]
    inference: InferenceArgs,
}

struct Globals {
    seed: u64,
    out_dir: PathBuf,
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = FileConfig::load(cli.config.as_ref())?;
    let globals = Globals {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        out_dir: cli
            .out_dir
            .clone()
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| ".".into()),
        jobs: cli.jobs.or(file.jobs).unwrap_or(1),
    };
    if globals.jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(&globals, &file, a),
        Command::Train(a) => cmd_train(&globals, &file, a),
        Command::Sweep(a) => cmd_sweep(&globals, &file, a),
        Command::Infer(a) => cmd_infer(&globals, &file, a),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut File>) -> obk_core::Result<()>,
) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| CliError::Runtime(format!("cannot write in {}: {e}", dir.display())))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn hyperparams(file: &FileConfig, a: &ModelArgs) -> CliResult<(Hyperparams, usize)> {
    let d = Hyperparams::default();
    let hp = Hyperparams {
        k: a.k.or(file.model.k).unwrap_or(d.k),
        alpha: a.alpha.or(file.model.alpha).unwrap_or(d.alpha),
        beta: a.beta.or(file.model.beta).unwrap_or(d.beta),
        distance_mode: a.distance.or(file.model.distance).unwrap_or_default(),
    };
    hp.validate()?;
    let window = a
        .window
        .or(file.model.window)
        .unwrap_or(eval::DEFAULT_WINDOW);
    if window == 0 {
        return Err(CliError::Validation("window must be positive".into()));
    }
    Ok((hp, window))
}

fn inference_params(file: &FileConfig, a: &InferenceArgs) -> CliResult<InferenceParams> {
    let d = InferenceParams::default();
    let f = &file.inference;
    let p = InferenceParams {
        temperature: a.temperature.or(f.temperature).unwrap_or(d.temperature),
        neighbor_count: a.neighbors.or(f.neighbor_count).unwrap_or(d.neighbor_count),
        merge_alpha: a.merge_alpha.or(f.merge_alpha).unwrap_or(d.merge_alpha),
        cs_beta: a.cs_beta.or(f.cs_beta).unwrap_or(d.cs_beta),
        normalize_cs_exp: if a.cs_exp_literal {
            false
        } else {
            f.normalize_cs_exp.unwrap_or(d.normalize_cs_exp)
        },
    };
    p.validate()?;
    Ok(p)
}

/// Preset or inline components, with size, dimension and seed applied.
fn data_spec(
    g: &Globals,
    file: &FileConfig,
    a: &DataArgs,
    default_n: usize,
) -> CliResult<(String, DataSpec)> {
    let preset = a.preset.clone().or_else(|| file.data.preset.clone());
    let (label, mut spec) = match (preset, &file.data.components) {
        (Some(name), _) => {
            let spec = datagen::preset(&name)?;
            (name, spec)
        }
        (None, Some(components)) => (
            "custom".to_string(),
            DataSpec {
                dim: datagen::DEFAULT_PRESET_DIM,
                components: components.clone(),
                n_points: default_n,
                seed: 0,
            },
        ),
        (None, None) => {
            return Err(CliError::Validation(
                "no dataset given: pass --preset or set [data] in the config".into(),
            ))
        }
    };
    spec.n_points = a.n.or(file.data.n).unwrap_or(default_n);
    spec.dim = a.dim.or(file.data.dim).unwrap_or(spec.dim);
    spec.seed = g.seed;
    spec.validate()?;
    Ok((label, spec))
}

fn cmd_generate(g: &Globals, file: &FileConfig, a: GenerateArgs) -> CliResult<()> {
    let (_, spec) = data_spec(g, file, &a.data, datagen::DEFAULT_PRESET_POINTS)?;
    let out = a.out.unwrap_or_else(|| g.out_dir.join("data.csv"));
    let data = datagen::generate(&spec)?;
    write_atomic(&out, |w| csv_io::write_matrix(&data, w))?;
    println!("{}", out.display());
    Ok(())
}

fn read_csv(path: &Path) -> CliResult<Matrix> {
    let f = File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    csv_io::read_matrix(BufReader::new(f))
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn cmd_train(g: &Globals, file: &FileConfig, a: TrainArgs) -> CliResult<()> {
    let (hp, window) = hyperparams(file, &a.model)?;
    let params = inference_params(file, &a.inference)?;
    params.validate_for(hp.k)?;
    let fraction = a
        .train_fraction
        .or(file.data.train_fraction)
        .unwrap_or(10.0 / 11.0);

    let (label, data) = match &a.data {
        Some(path) => {
            let label = path
                .file_stem()
                .map_or("data".into(), |s| s.to_string_lossy().into_owned());
            (label, read_csv(path)?)
        }
        None => {
            let (label, spec) = data_spec(g, file, &a.gen, datagen::DEFAULT_PRESET_POINTS)?;
            (label, datagen::generate(&spec)?)
        }
    };
    if data.ncols() < 2 {
        return Err(CliError::Validation(
            "training data needs at least two columns".into(),
        ));
    }
    let (train, test) = datagen::split(&data, fraction, g.seed)?;
    if train.nrows() < hp.k + window {
        return Err(CliError::Validation(format!(
            "{} training rows cannot cover k = {} plus a window of {window}",
            train.nrows(),
            hp.k
        )));
    }

    let run = eval::run_training(&train, &test, &hp, &params, window, &label, g.seed)?;
    let snapshot = ModelSnapshot::capture(&run.model, &hp, Some(run.overall_mean));
    let model_path = g.out_dir.join("model.json");
    let run_path = g.out_dir.join("run.csv");
    write_atomic(&model_path, |w| snapshot.write(w))?;
    write_atomic(&run_path, |w| {
        csv_io::write_run_record(0, &run.record, w, true)
    })?;
    println!("{}", model_path.display());
    println!("{}", run_path.display());
    Ok(())
}

fn cmd_sweep(g: &Globals, file: &FileConfig, a: SweepArgs) -> CliResult<()> {
    let s = &file.sweep;
    let axis: SweepAxis = a
        .axis
        .clone()
        .or_else(|| s.axis.clone())
        .unwrap_or_else(|| "k".into())
        .parse()?;
    let values = match a.values.as_deref().or(s.values.as_deref()) {
        Some(v) => parse_values(v)?,
        None => match axis {
            SweepAxis::K => parse_values("100:1000:100")?,
            SweepAxis::Alpha => parse_values("0.2,0.4,0.6,0.9,1.0")?,
            SweepAxis::Beta => parse_values("-0.21,0.07,0.7")?,
        },
    };
    let seeds = match &a.seeds {
        Some(text) => parse_seeds(text)?,
        None => s.seeds.clone().unwrap_or_else(|| vec![g.seed]),
    };
    let (hp, window) = hyperparams(file, &a.model)?;
    let params = inference_params(file, &a.inference)?;
    let defaults = SweepBase::default();
    let spec = SweepSpec {
        axis,
        values,
        base: SweepBase {
            hp,
            params,
            preset: a
                .preset
                .clone()
                .or_else(|| file.data.preset.clone())
                .unwrap_or(defaults.preset),
            seeds,
            n_train: a.n_train.or(s.n_train).unwrap_or(defaults.n_train),
            n_test: a.n_test.or(s.n_test).unwrap_or(defaults.n_test),
            window_size: window,
            dim: a.dim.or(file.data.dim).unwrap_or(defaults.dim),
        },
    };
    spec.validate()?;
    for &v in &spec.values {
        let hp = axis.apply(&spec.base.hp, v)?;
        params.validate_for(hp.k)?;
    }

    let outcomes = eval::sweep(&spec, g.jobs)?;
    let runs_dir = g.out_dir.join("runs");
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (id, o) in outcomes.into_iter().enumerate() {
        match o.result {
            Ok(r) => {
                let path = runs_dir.join(format!("run_{id:03}.csv"));
                write_atomic(&path, |w| csv_io::write_run_record(id, &r, w, true))?;
                records.push(r);
            }
            Err(e) => failures.push(format!(
                "run {id} ({axis}={} seed={}): {e}",
                o.value, o.seed
            )),
        }
    }
    if !records.is_empty() {
        let summary = eval::summarize(&records, axis)?;
        let path = g.out_dir.join("summary.csv");
        write_atomic(&path, |w| csv_io::write_summary(&summary, w))?;
        let best = &summary.rows[summary.argmin_error];
        let (method, err) = best.best_method();
        println!("{}", path.display());
        println!(
            "argmin error: {axis}={} ({method}, mean error over last 3 windows {err})",
            best.value
        );
        println!(
            "argmin loss: {axis}={}",
            summary.rows[summary.argmin_loss].value
        );
    }
    if !failures.is_empty() {
        return Err(CliError::Runtime(format!(
            "{} of {} runs failed; {}",
            failures.len(),
            failures.len() + records.len(),
            failures.join("; ")
        )));
    }
    Ok(())
}

fn cmd_infer(g: &Globals, file: &FileConfig, a: InferArgs) -> CliResult<()> {
    let params = inference_params(file, &a.inference)?;
    let text = std::fs::read_to_string(&a.model)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", a.model.display())))?;
    let snapshot = ModelSnapshot::from_json(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", a.model.display())))?;
    let model = snapshot.to_model()?;
    params.validate_for(model.k())?;
    let overall_mean = a
        .overall_mean
        .or(file.inference.overall_mean)
        .or(snapshot.overall_mean)
        .ok_or_else(|| {
            CliError::Validation("snapshot has no overall_mean; pass --overall-mean".into())
        })?;
    let queries = read_csv(&a.queries)?;
    if queries.ncols() + 1 != model.dim() {
        return Err(CliError::Validation(format!(
            "queries have {} columns, model expects {}",
            queries.ncols(),
            model.dim() - 1
        )));
    }
    let predictions = queries
        .rows()
        .map(|q| infer_all(&model, q, &params, overall_mean))
        .collect::<obk_core::Result<Vec<_>>>()?;
    let out = a.out.unwrap_or_else(|| g.out_dir.join("predictions.csv"));
    write_atomic(&out, |w| csv_io::write_predictions(&predictions, w))?;
    println!("{}", out.display());
    Ok(())
}
