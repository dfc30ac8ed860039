//! The `geo2vec` command line: `synth`, `train`, `eval` and `render`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use geo2vec::autodecoder::{load_checkpoint, save_checkpoint, CheckpointError};
use geo2vec::evaluation::{
    summary_table, task_distance, task_edge_count, task_line_length, task_shape_classification, task_topology,
    write_results_csv, EvalError, PairKind, ProbeConfig, ResultRow, Task,
};
use geo2vec::ingest::{parse_geojson, synthesize, to_geojson, Dataset, IngestError, SynthesisSpec};
use geo2vec::render::{to_pgm, truth_field, Field, RenderError};
use geo2vec::training::{
    canonical_entities, combine, load_embeddings, reconstruct_field_in, save_embeddings, train_with,
    write_loss_csv, EmbeddingError, TrainConfig, TrainError,
};
use geo2vec::geometry::BBox;
use geo2vec::Mode;

pub const CHECKPOINT_FILE: &str = "checkpoint.g2v";
pub const EMBEDDINGS_FILE: &str = "embeddings.g2ve";
pub const LOSS_FILE: &str = "loss.csv";
pub const CONFIG_FILE: &str = "config.json";

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "GEO2VEC_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            TrainError::Config(_) | TrainError::Render(RenderError::Resolution(_)) => CliError::Usage(e.to_string()),
            TrainError::Autodecoder(ref inner) if matches!(inner, geo2vec::autodecoder::AutodecoderError::NonFinite) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Train(t) => t.into(),
            EvalError::Config(_) => CliError::Usage(e.to_string()),
            EvalError::NonFinite(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Resolution(_) | RenderError::Range => CliError::Usage(e.to_string()),
            RenderError::Pgm(_) => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "geo2vec", version, about = "Signed-distance-field embeddings for vector geo-entities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic GeoJSON dataset.
    Synth(SynthArgs),
    /// Learn embeddings; writes a checkpoint, embeddings, loss history and config echo to --out.
    Train(TrainArgs),
    /// Score embeddings with a downstream probe and write a results CSV.
    Eval(EvalArgs),
    /// Render an entity's signed distance field as a binary PGM.
    Render(RenderArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Five building-footprint families.
    Shapes,
    /// Points, polylines and polygons spread over one region.
    Scattered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Shape,
    Location,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Shape => Mode::Shape,
            ModeArg::Location => Mode::Location,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthesis spec (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    /// Built-in spec used when no --spec is given.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Entities per class for --preset.
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    /// Overlap fraction for --preset scattered.
    #[arg(long, default_value_t = 0.3)]
    pub overlap: f64,
    /// Seed; overrides the spec file's.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output GeoJSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input GeoJSON dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// shape: per-entity canonical frames; location: one dataset-wide frame.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Seed; required unless the config file sets one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Partial or full training config (JSON) layered over the mode defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sampling density.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Grid samples per axis.
    #[arg(long)]
    pub n_axis: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Passes over the training set.
    #[arg(long)]
    pub epochs: Option<u32>,
    /// Embedding width.
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Frequencies per encoded component.
    #[arg(long)]
    pub freq_count: Option<usize>,
    /// Encode (x, y) only, without the radial component.
    #[arg(long)]
    pub no_rotation_invariant: bool,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// GeoJSON dataset the embeddings were trained on.
    #[arg(long)]
    pub data: PathBuf,
    /// Embedding file: shape embeddings for shape/edge, location for distance/topology,
    /// location or combined for length.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Shape embeddings combined with --embeddings for the length task.
    #[arg(long)]
    pub shape_embeddings: Option<PathBuf>,
    /// shape, edge, length, distance or topology.
    #[arg(long)]
    pub task: Task,
    /// Probe seed; required unless the config file sets one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Partial or full probe config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Entity pairs for distance and topology.
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
    /// Type combinations (pt-pl, pt-pg, pl-pl, pl-pg, pg-pg); defaults depend on the task.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub kinds: Vec<PairKind>,
    /// Results CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_kind(s: &str) -> Result<PairKind, String> {
    PairKind::from_name(s).ok_or_else(|| format!("unknown pair kind `{s}`"))
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Render the exact field of an entity from this dataset.
    #[arg(long, requires = "data", conflicts_with = "learned")]
    pub truth: bool,
    /// Render the network's field from this checkpoint.
    #[arg(long, value_name = "CHECKPOINT")]
    pub learned: Option<PathBuf>,
    /// GeoJSON dataset for --truth.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Frame for --truth: the entity's own canonical square or the dataset's.
    #[arg(long, value_enum, default_value = "shape")]
    pub mode: ModeArg,
    /// Entity id.
    #[arg(long)]
    pub id: String,
    /// Pixels per side.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Distance mapped to full white or black.
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    /// Margin added on every side of the canonical square [-1, 1]².
    #[arg(long, default_value_t = 0.25)]
    pub pad: f64,
    /// Output PGM path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Fully-resolved parameters of one invocation, echoed beside its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase", deny_unknown_fields)]
pub enum RunConfig {
    Synth {
        out: PathBuf,
        spec: SynthesisSpec,
    },
    Train {
        data: PathBuf,
        out: PathBuf,
        resume: Option<PathBuf>,
        train: TrainConfig,
    },
    Eval {
        data: PathBuf,
        embeddings: PathBuf,
        shape_embeddings: Option<PathBuf>,
        task: String,
        pairs: usize,
        kinds: Vec<PairKind>,
        out: PathBuf,
        probe: ProbeConfig,
    },
    Render {
        source: RenderSource,
        id: String,
        resolution: usize,
        range: f64,
        pad: f64,
        out: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RenderSource {
    Truth { data: PathBuf, mode: Mode },
    Learned { checkpoint: PathBuf },
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes to a sibling temporary and renames, so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    write_bytes(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn echo_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".config.json");
    PathBuf::from(p)
}

fn write_echo(path: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(cfg).expect("configs serialize");
    write_bytes(path, format!("{text}\n").as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    Ok(parse_geojson(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?)
}

/// Overlays the keys of a JSON object file onto `base`; unknown keys are rejected
/// when the result is deserialized.
fn layer_json(base: Value, path: &Path) -> Result<Value, CliError> {
    let text = read_text(path)?;
    let over: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let Value::Object(over) = over else {
        return Err(CliError::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    let Value::Object(mut base) = base else {
        unreachable!("configs serialize to objects")
    };
    base.extend(over);
    Ok(Value::Object(base))
}

fn config_error(path: &Path, e: serde_json::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

/// Mode defaults, then the config file, then individual flags.
pub fn resolve_train_config(args: &TrainArgs) -> Result<TrainConfig, CliError> {
    let file: Option<Value> = match &args.config {
        Some(p) => Some(serde_json::from_str(&read_text(p)?).map_err(|e| config_error(p, e))?),
        None => None,
    };
    let file_mode = file
        .as_ref()
        .and_then(|v| v.get("mode"))
        .map(|m| serde_json::from_value::<Mode>(m.clone()))
        .transpose()
        .map_err(|e| CliError::Usage(format!("mode: {e}")))?;
    let file_seed = file.as_ref().and_then(|v| v.get("seed")).is_some();
    let mode = args.mode.map(Mode::from).or(file_mode).unwrap_or(Mode::Shape);
    if args.seed.is_none() && !file_seed {
        return Err(CliError::Usage("--seed is required (or set `seed` in --config)".into()));
    }
    let base = serde_json::to_value(TrainConfig::for_mode(mode, 0)).expect("configs serialize");
    let merged = match &args.config {
        Some(p) => layer_json(base, p)?,
        None => base,
    };
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => serde_json::from_value(merged).map_err(|e| config_error(p, e))?,
        None => serde_json::from_value(merged).expect("defaults deserialize"),
    };
    cfg.mode = mode;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = args.n_axis {
        cfg.n_axis = v;
    }
    if let Some(v) = args.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.latent_dim {
        cfg.latent_dim = v;
    }
    if let Some(v) = args.freq_count {
        cfg.freq_count = v;
    }
    if args.no_rotation_invariant {
        cfg.rotation_invariant = false;
    }
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}

pub fn resolve_probe_config(config: Option<&Path>, seed: Option<u64>) -> Result<ProbeConfig, CliError> {
    let mut cfg = match config {
        Some(p) => {
            let merged = layer_json(serde_json::to_value(ProbeConfig::default()).expect("configs serialize"), p)?;
            let file: Value = serde_json::from_str(&read_text(p)?).map_err(|e| config_error(p, e))?;
            if seed.is_none() && file.get("seed").is_none() {
                return Err(CliError::Usage("--seed is required (or set `seed` in --config)".into()));
            }
            serde_json::from_value(merged).map_err(|e| config_error(p, e))?
        }
        None if seed.is_none() => return Err(CliError::Usage("--seed is required".into())),
        None => ProbeConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut spec = match (&args.spec, args.preset) {
        (Some(p), _) => {
            let text = read_text(p)?;
            serde_json::from_str::<SynthesisSpec>(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        (None, Some(preset)) => {
            let seed = args
                .seed
                .ok_or_else(|| CliError::Usage("--seed is required with --preset".into()))?;
            match preset {
                Preset::Shapes => SynthesisSpec::shapes(args.count, seed),
                Preset::Scattered => SynthesisSpec::scattered(args.count, args.overlap, seed),
            }
        }
        (None, None) => return Err(CliError::Usage("one of --spec or --preset is required".into())),
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let d = synthesize(&spec)?;
    write_bytes(&args.out, to_geojson(&d).as_bytes())?;
    write_echo(
        &echo_path(&args.out),
        &RunConfig::Synth {
            out: args.out.clone(),
            spec,
        },
    )?;
    eprintln!("wrote {} entities to {}", d.len(), args.out.display());
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = resolve_train_config(args)?;
    let d = load_dataset(&args.data)?;
    let resume = match &args.resume {
        Some(p) => Some(load_checkpoint(p, Some(cfg.mode))?),
        None => None,
    };
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    write_echo(
        &args.out.join(CONFIG_FILE),
        &RunConfig::Train {
            data: args.data.clone(),
            out: args.out.clone(),
            resume: args.resume.clone(),
            train: cfg.clone(),
        },
    )?;
    let ckpt_path = args.out.join(CHECKPOINT_FILE);
    let out = train_with(&d, &cfg, resume, |c| {
        let bytes = geo2vec::autodecoder::write_checkpoint(c)?;
        write_atomic(&ckpt_path, &bytes).map_err(|e| TrainError::Io(std::io::Error::other(e.to_string())))
    })?;
    save_checkpoint(&ckpt_path, &out.checkpoint)?;
    save_embeddings(args.out.join(EMBEDDINGS_FILE), &out.embeddings)?;
    let mut csv = Vec::new();
    write_loss_csv(&out.history, &mut csv).expect("writing to memory");
    write_bytes(&args.out.join(LOSS_FILE), &csv)?;
    eprintln!(
        "trained {} entities on {} samples for {} epochs; final loss {:.6}",
        out.embeddings.len(),
        out.samples,
        out.checkpoint.epochs_completed,
        out.history.last().map_or(f64::NAN, |r| r.loss)
    );
    Ok(())
}

fn default_kinds(task: Task) -> Vec<PairKind> {
    match task {
        Task::Distance => vec![PairKind::PtPg, PairKind::PlPg, PairKind::PgPg],
        _ => PairKind::ALL.to_vec(),
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let probe = resolve_probe_config(args.config.as_deref(), args.seed)?;
    let kinds = if args.kinds.is_empty() {
        default_kinds(args.task)
    } else {
        args.kinds.clone()
    };
    let d = load_dataset(&args.data)?;
    let emb = load_embeddings(&args.embeddings)?;
    let seed = probe.seed;
    let mut rows = Vec::new();
    match args.task {
        Task::Shape => rows.extend(ResultRow::from_report("shape", &task_shape_classification(&d, &emb, &probe)?, seed)),
        Task::Edge => rows.extend(ResultRow::from_report("edge", &task_edge_count(&d, &emb, &probe)?, seed)),
        Task::Length => {
            let set = match &args.shape_embeddings {
                Some(p) => combine(&emb, &load_embeddings(p)?)?,
                None => emb,
            };
            rows.extend(ResultRow::from_report("length", &task_line_length(&d, &set, &probe)?, seed));
        }
        Task::Distance => {
            let (r, _) = task_distance(&d, &emb, &kinds, args.pairs, &probe)?;
            rows.extend(ResultRow::from_report("distance", &r, seed));
        }
        Task::Topology => {
            for &k in &kinds {
                let (r, _) = task_topology(&d, &emb, k, args.pairs, &probe)?;
                rows.extend(ResultRow::from_report(format!("topology/{k}"), &r, seed));
            }
        }
    }
    let mut csv = Vec::new();
    write_results_csv(&rows, &mut csv).expect("writing to memory");
    write_bytes(&args.out, &csv)?;
    write_echo(
        &echo_path(&args.out),
        &RunConfig::Eval {
            data: args.data.clone(),
            embeddings: args.embeddings.clone(),
            shape_embeddings: args.shape_embeddings.clone(),
            task: args.task.name().into(),
            pairs: args.pairs,
            kinds,
            out: args.out.clone(),
            probe,
        },
    )?;
    print!("{}", summary_table(&rows));
    std::io::stdout().flush().ok();
    Ok(())
}

pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    Field::check_resolution(args.resolution)?;
    if !(args.range.is_finite() && args.range > 0.0) {
        return Err(RenderError::Range.into());
    }
    if !(args.pad.is_finite() && args.pad >= 0.0) {
        return Err(CliError::Usage(format!("--pad must be non-negative, got {}", args.pad)));
    }
    let domain = BBox::CANONICAL.padded(args.pad);
    let (field, source) = match (&args.learned, args.truth) {
        (Some(ckpt), false) => {
            let c = load_checkpoint(ckpt, None)?;
            let f = reconstruct_field_in(&c, &args.id, args.resolution, domain)?;
            (
                f,
                RenderSource::Learned {
                    checkpoint: ckpt.clone(),
                },
            )
        }
        (None, true) => {
            let data = args.data.as_ref().expect("clap requires --data with --truth");
            let mode = Mode::from(args.mode);
            let d = load_dataset(data)?;
            let canon = canonical_entities(&d, mode)?;
            let e = canon
                .iter()
                .find(|e| e.id == args.id)
                .ok_or_else(|| CliError::Data(format!("unknown entity id `{}`", args.id)))?;
            (
                truth_field(&e.geometry, args.resolution, domain)?,
                RenderSource::Truth {
                    data: data.clone(),
                    mode,
                },
            )
        }
        _ => return Err(CliError::Usage("exactly one of --truth or --learned is required".into())),
    };
    write_bytes(&args.out, &to_pgm(&field, args.range)?)?;
    write_echo(
        &echo_path(&args.out),
        &RunConfig::Render {
            source,
            id: args.id.clone(),
            resolution: args.resolution,
            range: args.range,
            pad: args.pad,
            out: args.out.clone(),
        },
    )
}

/// Sizes the global worker pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Render(a) => cmd_render(a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
