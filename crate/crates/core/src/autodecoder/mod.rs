//! Conditioned MLP with a per-entity latent table, exact gradients and Adam.

mod adam;
mod checkpoint;
mod grad;
mod latent;
mod loss;
mod mlp;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use grad::{batch_gradients, Batch, Gradients, GRAD_CHUNK};
pub use latent::LatentTable;
pub use loss::{loss, LossConfig};
pub use mlp::{Arch, Dense, ForwardCache, MlpParams, Real};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const OUTPUT_INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodecoderError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("conditioning width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("duplicate latent id `{0}`")]
    DuplicateId(String),
    #[error("unknown entity id `{0}`")]
    UnknownId(String),
    #[error("latent table contains non-finite values")]
    NonFinite,
    #[error("tensor shape mismatch: {0}")]
    Shape(&'static str),
}

/// Fresh network, latent table and optimizer state.
///
/// Hidden weights and biases are drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`. The
/// output layer uses a tenth of that bound and a zero bias, so initial predictions sit
/// near the zero level set. Latents come from `N(0, sigma_z²)`, rows in the order of `ids`.
pub fn init<T: Real>(
    arch: &Arch,
    ids: &[String],
    sigma_z: f64,
    seed: u64,
) -> Result<(MlpParams<T>, LatentTable<T>, AdamState<T>), AutodecoderError> {
    arch.validate()?;
    if !(sigma_z.is_finite() && sigma_z > 0.0) {
        return Err(AutodecoderError::Config("sigma_z must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = MlpParams::<T>::zeros(arch.clone());
    let last = params.layers.len() - 1;
    for (k, layer) in params.layers.iter_mut().enumerate() {
        let mut bound = 1.0 / (layer.weight.ncols() as f64).sqrt();
        if k == last {
            bound *= OUTPUT_INIT_SCALE;
        }
        layer
            .weight
            .mapv_inplace(|_| T::from_f64(rng.random_range(-bound..bound)));
        if k != last {
            layer
                .bias
                .mapv_inplace(|_| T::from_f64(rng.random_range(-bound..bound)));
        }
    }
    let normal = Normal::new(0.0, sigma_z).expect("sigma_z validated");
    let values = ndarray::Array2::from_shape_simple_fn((ids.len(), arch.latent_dim), || {
        T::from_f64(normal.sample(&mut rng))
    });
    let table = LatentTable::new(ids.to_vec(), values)?;
    let state = AdamState::new(&params, &table, AdamConfig::default());
    Ok((params, table, state))
}
