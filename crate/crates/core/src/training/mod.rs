//! End-to-end training: sample every entity, pool, shuffle and optimize the network
//! jointly with the latent codes.

mod embeddings;

use std::io::Write;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embeddings::{
    combine, load_embeddings, read_embeddings, save_embeddings, uniform_vector, write_embeddings,
    EmbeddingError, EmbeddingKind, EmbeddingSet,
};

use crate::autodecoder::{
    adam_step, batch_gradients, init, AdamConfig, AdamState, Arch, AutodecoderError, Batch,
    Checkpoint, CheckpointError, LatentTable, LossConfig, MlpParams,
};
use crate::encoding::{frequency_bounds, EncodingConfig, EncodingError};
use crate::geometry::{normalize_dataset, normalize_shape, BBox, GeoEntity, Geometry, GeometryError};
use crate::ingest::Dataset;
use crate::render::{Field, RenderError};
use crate::sampling::{
    build_training_set, estimate_sigma_loc, estimate_sigma_shp, grid_points, splitmix, CountRule,
    SampleDomain, SamplingError, SamplingParams,
};
use crate::Mode;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("shape training needs at least one polyline or polygon")]
    NoShapes,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: u32, batch: u32 },
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("unknown entity id `{0}`")]
    UnknownId(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Autodecoder(#[from] AutodecoderError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Every knob of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    pub seed: u64,
    pub epsilon: f64,
    pub n_axis: usize,
    /// Neighbours per entity (or edge) for the sigma estimate.
    pub k: usize,
    /// Entities drawn for the sigma estimate.
    pub subset: usize,
    pub count_rule: CountRule,
    /// Fixed sampling deviation; estimated from the data when absent.
    pub sigma: Option<f64>,
    pub freq_count: usize,
    pub rotation_invariant: bool,
    /// Extra octaves above the location bound in shape mode.
    pub headroom: f64,
    /// Fixed `[l_min, l_max]`; derived from the data when absent.
    pub frequency_bounds: Option<[f64; 2]>,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub slope: f64,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: u32,
    /// Redraw the sample pool before every epoch.
    pub resample: bool,
    /// Emit a checkpoint every this many epochs (0 disables).
    pub checkpoint_every: u32,
}

impl TrainConfig {
    pub fn shape(seed: u64) -> Self {
        TrainConfig {
            mode: Mode::Shape,
            seed,
            epsilon: 20.0,
            n_axis: 8,
            k: 5,
            subset: 1000,
            count_rule: CountRule::Linear,
            sigma: None,
            freq_count: 8,
            rotation_invariant: true,
            headroom: 6.0,
            frequency_bounds: None,
            hidden: vec![256; 4],
            latent_dim: 64,
            slope: 0.01,
            loss: LossConfig {
                clamp: Some(0.1),
                gamma: 1e-4,
                sigma_z: 0.1,
            },
            adam: AdamConfig::default(),
            batch_size: 64,
            epochs: 50,
            resample: false,
            checkpoint_every: 0,
        }
    }

    pub fn location(seed: u64) -> Self {
        TrainConfig {
            mode: Mode::Location,
            rotation_invariant: false,
            loss: LossConfig {
                clamp: None,
                gamma: 0.0,
                sigma_z: 0.1,
            },
            epochs: 30,
            ..TrainConfig::shape(seed)
        }
    }

    pub fn for_mode(mode: Mode, seed: u64) -> Self {
        match mode {
            Mode::Shape => TrainConfig::shape(seed),
            Mode::Location => TrainConfig::location(seed),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.freq_count == 0 {
            return bad("freq_count must be >= 1");
        }
        if !(self.headroom.is_finite() && self.headroom >= 0.0) {
            return bad("headroom must be non-negative");
        }
        if self.subset == 0 {
            return bad("subset must be >= 1");
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return bad("sigma must be positive");
            }
        }
        self.sampling(1.0).validate()?;
        self.arch(1).validate()?;
        self.loss.validate()?;
        self.adam.validate()?;
        if let Some([lo, hi]) = self.frequency_bounds {
            EncodingConfig::new(lo, hi, self.freq_count, self.rotation_invariant, self.mode)?;
        }
        Ok(())
    }

    pub fn sampling(&self, sigma: f64) -> SamplingParams {
        SamplingParams {
            sigma,
            epsilon: self.epsilon,
            n_axis: self.n_axis,
            k: self.k,
            subset: self.subset,
            seed: self.seed,
            count_rule: self.count_rule,
        }
    }

    pub fn arch(&self, pe_width: usize) -> Arch {
        Arch {
            hidden: self.hidden.clone(),
            pe_width,
            latent_dim: self.latent_dim,
            slope: self.slope,
        }
    }
}

/// One row of the loss history. `loss` is the batch objective divided by its size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRecord {
    pub epoch: u32,
    pub batch: u32,
    pub loss: f64,
}

pub fn write_loss_csv(history: &[LossRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "epoch,batch,loss")?;
    for r in history {
        writeln!(w, "{},{},{}", r.epoch, r.batch, r.loss)?;
    }
    Ok(())
}

/// Entities in the canonical frame of `mode`, with their dataset indices.
///
/// Shape mode scales every non-point entity into its own `[-1, 1]²`; location mode maps
/// the whole dataset with one shared transform.
pub fn canonical_entities(d: &Dataset, mode: Mode) -> Result<Vec<GeoEntity>, TrainError> {
    if d.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    match mode {
        Mode::Shape => {
            let out = d
                .entities()
                .iter()
                .filter(|e| !matches!(e.geometry, Geometry::Point(_)))
                .map(|e| normalize_shape(e).map(|(c, _)| c))
                .collect::<Result<Vec<_>, _>>()?;
            if out.is_empty() {
                return Err(TrainError::NoShapes);
            }
            Ok(out)
        }
        Mode::Location => Ok(normalize_dataset(d.entities())?.0),
    }
}

/// Sampling deviation for a run: the configured value or the data-driven estimate.
pub fn resolve_sigma(d: &Dataset, canon: &[GeoEntity], cfg: &TrainConfig) -> Result<f64, TrainError> {
    if let Some(s) = cfg.sigma {
        return Ok(s);
    }
    Ok(match cfg.mode {
        Mode::Shape => estimate_sigma_shp(d.entities(), cfg.k, cfg.subset, cfg.seed)?,
        Mode::Location => estimate_sigma_loc(canon, cfg.k, cfg.subset, cfg.seed)?,
    })
}

pub fn resolve_encoding(canon: &[GeoEntity], cfg: &TrainConfig) -> Result<EncodingConfig, TrainError> {
    let (lo, hi) = match cfg.frequency_bounds {
        Some([lo, hi]) => (lo, hi),
        None => frequency_bounds(canon, cfg.mode, cfg.headroom)?,
    };
    Ok(EncodingConfig::new(lo, hi, cfg.freq_count, cfg.rotation_invariant, cfg.mode)?)
}

/// Encoded positions, targets and latent rows of the pooled sample set.
struct Pool {
    features: Array2<f32>,
    targets: Array1<f32>,
    rows: Vec<usize>,
}

fn draw_pool(
    canon: &[GeoEntity],
    params: &SamplingParams,
    domain: SampleDomain,
    enc: &EncodingConfig,
) -> Result<Pool, TrainError> {
    let sets = canon
        .par_iter()
        .map(|e| build_training_set(e, params, domain))
        .collect::<Result<Vec<_>, _>>()?;
    let n: usize = sets.iter().map(|s| s.len()).sum();
    let mut features = Array2::zeros((n, enc.width()));
    let mut targets = Array1::zeros(n);
    let mut rows = Vec::with_capacity(n);
    for (row, set) in sets.iter().enumerate() {
        for s in set.iter() {
            let i = rows.len();
            for (dst, v) in features.row_mut(i).iter_mut().zip(enc.encode(s.position)) {
                *dst = v as f32;
            }
            targets[i] = s.signed_distance as f32;
            rows.push(row);
        }
    }
    Ok(Pool {
        features,
        targets,
        rows,
    })
}

fn epoch_seed(seed: u64, epoch: u32) -> u64 {
    splitmix(seed ^ splitmix(u64::from(epoch) + 1))
}

/// Training artifacts.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    pub embeddings: EmbeddingSet,
    pub history: Vec<LossRecord>,
    pub sigma: f64,
    /// Samples per epoch.
    pub samples: usize,
}

pub fn train(d: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput, TrainError> {
    train_with(d, cfg, None, |_| Ok(()))
}

/// Runs (or resumes) training. `on_checkpoint` receives a checkpoint with optimizer
/// state every `checkpoint_every` epochs.
pub fn train_with(
    d: &Dataset,
    cfg: &TrainConfig,
    resume: Option<Checkpoint>,
    mut on_checkpoint: impl FnMut(&Checkpoint) -> Result<(), TrainError>,
) -> Result<TrainOutput, TrainError> {
    cfg.validate()?;
    let canon = canonical_entities(d, cfg.mode)?;
    let sigma = resolve_sigma(d, &canon, cfg)?;
    let enc = resolve_encoding(&canon, cfg)?;
    let domain = match cfg.mode {
        Mode::Shape => SampleDomain::Shape,
        Mode::Location => SampleDomain::Location(BBox::CANONICAL),
    };
    let ids: Vec<String> = canon.iter().map(|e| e.id.clone()).collect();
    let arch = cfg.arch(enc.width());

    let (mut params, mut table, mut opt, start) = match resume {
        Some(c) => resume_state(c, cfg, &arch, &enc, &ids)?,
        None => {
            let (p, t, mut s) = init::<f32>(&arch, &ids, cfg.loss.sigma_z, cfg.seed)?;
            s.config = cfg.adam.clone();
            (p, t, s, 0)
        }
    };

    let base = cfg.sampling(sigma);
    let params_for = |epoch: u32| {
        let mut p = base.clone();
        if cfg.resample && epoch > 0 {
            p.seed = epoch_seed(cfg.seed ^ 0x5a5a_5a5a, epoch);
        }
        p
    };
    let mut pool = draw_pool(&canon, &params_for(start), domain, &enc)?;
    let samples = pool.rows.len();
    let mut history = Vec::new();
    let mut order: Vec<usize> = Vec::with_capacity(samples);
    let mut batch_rows = Vec::with_capacity(cfg.batch_size);

    for epoch in start..cfg.epochs {
        if cfg.resample && epoch > start {
            pool = draw_pool(&canon, &params_for(epoch), domain, &enc)?;
        }
        order.clear();
        order.extend(0..pool.rows.len());
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed(cfg.seed, epoch)));
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let features = pool.features.select(Axis(0), idx);
            let targets = pool.targets.select(Axis(0), idx);
            batch_rows.clear();
            batch_rows.extend(idx.iter().map(|&i| pool.rows[i]));
            let batch = Batch {
                features: features.view(),
                targets: targets.view(),
                rows: &batch_rows,
            };
            let grads = batch_gradients(&params, &table, &batch, &cfg.loss)?;
            let objective = grads.objective();
            if !objective.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch: epoch + 1,
                    batch: bi as u32 + 1,
                });
            }
            adam_step(&mut params, &mut table, &grads, &mut opt)?;
            history.push(LossRecord {
                epoch: epoch + 1,
                batch: bi as u32 + 1,
                loss: objective / idx.len() as f64,
            });
        }
        if table.values().iter().any(|v| !v.is_finite()) || params.layers.iter().any(|l| l.weight.iter().any(|v| !v.is_finite())) {
            return Err(TrainError::NonFinite {
                epoch: epoch + 1,
                batch: order.len().div_ceil(cfg.batch_size) as u32,
            });
        }
        if cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs {
            on_checkpoint(&Checkpoint {
                encoding: enc.clone(),
                params: params.clone(),
                latents: table.clone(),
                epochs_completed: epoch + 1,
                optimizer: Some(opt.clone()),
            })?;
        }
    }

    let checkpoint = Checkpoint {
        encoding: enc,
        params,
        latents: table,
        epochs_completed: cfg.epochs,
        optimizer: Some(opt),
    };
    let embeddings = embeddings_from(d, &checkpoint)?;
    Ok(TrainOutput {
        checkpoint,
        embeddings,
        history,
        sigma,
        samples,
    })
}

type State = (MlpParams<f32>, LatentTable<f32>, AdamState<f32>, u32);

fn resume_state(
    c: Checkpoint,
    cfg: &TrainConfig,
    arch: &Arch,
    enc: &EncodingConfig,
    ids: &[String],
) -> Result<State, TrainError> {
    let fail = |m: String| Err(TrainError::Resume(m));
    if c.mode() != cfg.mode {
        return fail(format!("checkpoint is {}-mode, config is {}-mode", c.mode(), cfg.mode));
    }
    if &c.params.arch != arch {
        return fail("network architecture differs from the config".into());
    }
    if &c.encoding != enc {
        return fail("positional encoding differs from the one derived for this dataset".into());
    }
    if c.latents.ids() != ids {
        return fail("checkpoint entities differ from the dataset".into());
    }
    if c.epochs_completed > cfg.epochs {
        return fail(format!(
            "checkpoint already has {} epochs, config asks for {}",
            c.epochs_completed, cfg.epochs
        ));
    }
    let Some(mut opt) = c.optimizer else {
        return fail("checkpoint has no optimizer state".into());
    };
    opt.config = cfg.adam.clone();
    Ok((c.params, c.latents, opt, c.epochs_completed))
}

/// Embeddings for every dataset entity from a trained model, in dataset order.
///
/// Shape models give points the uniform vector, since they carry no shape.
pub fn embeddings_from(d: &Dataset, c: &Checkpoint) -> Result<EmbeddingSet, TrainError> {
    let kind = match c.mode() {
        Mode::Shape => EmbeddingKind::Shape,
        Mode::Location => EmbeddingKind::Location,
    };
    let dim = c.latents.dim();
    let mut set = EmbeddingSet::new(Some(kind), dim);
    for e in d.entities() {
        let v = match (c.latents.row_of(&e.id), &e.geometry) {
            (Some(r), _) => c.latents.row(r).to_vec(),
            (None, Geometry::Point(_)) if c.mode() == Mode::Shape => uniform_vector(dim),
            (None, _) => return Err(TrainError::UnknownId(e.id.clone())),
        };
        set.insert(e.id.clone(), v)?;
    }
    Ok(set)
}

/// Shape embeddings of the point entities: the uniform unit vector.
pub fn embed_points(d: &Dataset, dim: usize) -> EmbeddingSet {
    let mut set = EmbeddingSet::new(Some(EmbeddingKind::Shape), dim);
    for e in d.entities().iter().filter(|e| matches!(e.geometry, Geometry::Point(_))) {
        set.insert(e.id.clone(), uniform_vector(dim))
            .expect("uniform vectors are finite and ids unique");
    }
    set
}

/// Network predictions for one entity on a grid over the canonical square.
pub fn reconstruct_field(c: &Checkpoint, id: &str, resolution: usize) -> Result<Field, TrainError> {
    reconstruct_field_in(c, id, resolution, BBox::CANONICAL)
}

pub fn reconstruct_field_in(
    c: &Checkpoint,
    id: &str,
    resolution: usize,
    domain: BBox,
) -> Result<Field, TrainError> {
    Field::check_resolution(resolution)?;
    let row = c
        .latents
        .row_of(id)
        .ok_or_else(|| TrainError::UnknownId(id.to_string()))?;
    let pts = grid_points(&domain, resolution);
    let pw = c.encoding.width();
    let z = c.latents.row(row);
    let mut values = Vec::with_capacity(pts.len());
    for chunk in pts.chunks(1024) {
        let mut cond = Array2::<f32>::zeros((chunk.len(), pw + z.len()));
        for (i, p) in chunk.iter().enumerate() {
            let mut r = cond.row_mut(i);
            for (dst, v) in r.iter_mut().zip(c.encoding.encode(*p)) {
                *dst = v as f32;
            }
            r.slice_mut(ndarray::s![pw..]).assign(&z);
        }
        let (out, _) = c.params.forward_batch(cond.view());
        values.extend(out.iter().map(|&v| v as f64));
    }
    Ok(Field {
        resolution,
        domain,
        values,
    })
}
