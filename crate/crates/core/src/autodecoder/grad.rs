use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use super::loss::loss_and_grad;
use super::{AutodecoderError, Dense, LatentTable, LossConfig, MlpParams, Real};

/// Rows per gradient work unit. Partial results are reduced in chunk order, so the
/// result does not depend on how many threads run the chunks.
pub const GRAD_CHUNK: usize = 128;

/// A mini-batch: encoded positions, target distances and the latent row of each sample.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a, T> {
    pub features: ArrayView2<'a, T>,
    pub targets: ArrayView1<'a, T>,
    pub rows: &'a [usize],
}

impl<T> Batch<'_, T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
    /// Gradient of every latent row touched by the batch.
    pub latents: BTreeMap<usize, Array1<T>>,
    /// Summed per-sample loss.
    pub data_loss: f64,
    /// Regularizer over the distinct entities in the batch.
    pub reg_loss: f64,
}

impl<T> Gradients<T> {
    pub fn objective(&self) -> f64 {
        self.data_loss + self.reg_loss
    }
}

struct Partial<T> {
    layers: Vec<Dense<T>>,
    d_latent: Array2<T>,
    loss: f64,
}

fn chunk<T: Real>(
    params: &MlpParams<T>,
    table: &LatentTable<T>,
    batch: &Batch<T>,
    lo: usize,
    hi: usize,
    clamp: Option<f64>,
) -> Partial<T> {
    let pw = params.arch.pe_width;
    let m = hi - lo;
    let mut cond = Array2::zeros((m, params.arch.cond_width()));
    cond.slice_mut(s![.., ..pw])
        .assign(&batch.features.slice(s![lo..hi, ..]));
    for (i, &r) in batch.rows[lo..hi].iter().enumerate() {
        cond.slice_mut(s![i, pw..]).assign(&table.row(r));
    }
    let (pred, cache) = params.forward_batch(cond.view());
    let mut d_out = Array1::zeros(m);
    let mut total = 0.0;
    for i in 0..m {
        let (l, g) = loss_and_grad(pred[i], batch.targets[lo + i], clamp);
        total += l.as_f64();
        d_out[i] = g;
    }
    let (layers, d_cond) = params.backward(&cache, d_out.view());
    Partial {
        layers,
        d_latent: d_cond.slice(s![.., pw..]).to_owned(),
        loss: total,
    }
}

/// Gradients of `Σ loss(G(z, x), s) + (γ/σ_z²) Σ_E ‖z_E‖²` over a batch, with each
/// distinct entity regularized once. Latents absent from the batch get no entry.
pub fn batch_gradients<T: Real>(
    params: &MlpParams<T>,
    table: &LatentTable<T>,
    batch: &Batch<T>,
    cfg: &LossConfig,
) -> Result<Gradients<T>, AutodecoderError> {
    if batch.is_empty() {
        return Err(AutodecoderError::Config("batch must be nonempty"));
    }
    if batch.features.ncols() != params.arch.pe_width {
        return Err(AutodecoderError::WidthMismatch {
            expected: params.arch.pe_width,
            got: batch.features.ncols(),
        });
    }
    if table.dim() != params.arch.latent_dim {
        return Err(AutodecoderError::WidthMismatch {
            expected: params.arch.latent_dim,
            got: table.dim(),
        });
    }
    if batch.features.nrows() != batch.len() || batch.targets.len() != batch.len() {
        return Err(AutodecoderError::Shape("batch columns differ in length"));
    }
    if batch.rows.iter().any(|&r| r >= table.len()) {
        return Err(AutodecoderError::Shape("latent row out of range"));
    }

    let n = batch.len();
    let bounds: Vec<(usize, usize)> = (0..n)
        .step_by(GRAD_CHUNK)
        .map(|lo| (lo, (lo + GRAD_CHUNK).min(n)))
        .collect();
    let partials: Vec<Partial<T>> = bounds
        .par_iter()
        .map(|&(lo, hi)| chunk(params, table, batch, lo, hi, cfg.clamp))
        .collect();

    let mut layers: Option<Vec<Dense<T>>> = None;
    let mut latents: BTreeMap<usize, Array1<T>> = BTreeMap::new();
    let mut data_loss = 0.0;
    for (p, &(lo, _)) in partials.into_iter().zip(&bounds) {
        data_loss += p.loss;
        match layers.as_mut() {
            None => layers = Some(p.layers),
            Some(acc) => acc.iter_mut().zip(&p.layers).for_each(|(a, g)| a.add_assign(g)),
        }
        for (i, g) in p.d_latent.rows().into_iter().enumerate() {
            let r = batch.rows[lo + i];
            match latents.get_mut(&r) {
                Some(acc) => *acc += &g,
                None => {
                    latents.insert(r, g.to_owned());
                }
            }
        }
    }

    let w = cfg.reg_weight();
    let mut reg_loss = 0.0;
    if w > 0.0 {
        let coef = T::from_f64(2.0 * w);
        for (&r, g) in latents.iter_mut() {
            let z = table.row(r);
            reg_loss += w * z.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>();
            g.zip_mut_with(&z, |a, &b| *a = *a + coef * b);
        }
    }

    Ok(Gradients {
        layers: layers.expect("batch is nonempty"),
        latents,
        data_loss,
        reg_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodecoder::Arch;
    use ndarray::array;

    #[test]
    fn exact_fit_has_zero_gradient() {
        let arch = Arch {
            hidden: vec![3],
            pe_width: 2,
            latent_dim: 2,
            slope: 0.01,
        };
        let params = MlpParams::<f64>::zeros(arch);
        let table = LatentTable::new(vec!["a".into()], array![[0.3, -0.1]]).unwrap();
        let feats = array![[0.1, 0.2], [0.5, 0.5]];
        let targets = array![0.0, 0.0];
        let cfg = LossConfig {
            clamp: None,
            gamma: 0.0,
            sigma_z: 1.0,
        };
        let g = batch_gradients(
            &params,
            &table,
            &Batch {
                features: feats.view(),
                targets: targets.view(),
                rows: &[0, 0],
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(g.data_loss, 0.0);
        assert!(g.layers.iter().all(|l| l.weight.iter().all(|&v| v == 0.0)));
        assert!(g.latents[&0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_weight_closed_form() {
        // G = w * z (input [c, c] = [z, z]; only the second copy is weighted)
        let arch = Arch {
            hidden: vec![],
            pe_width: 1,
            latent_dim: 1,
            slope: 0.01,
        };
        let mut params = MlpParams::<f64>::zeros(arch);
        params.layers[0].weight[[0, 3]] = 2.0;
        let table = LatentTable::new(vec!["a".into()], array![[1.5]]).unwrap();
        let feats = array![[0.0]];
        let targets = array![1.0];
        let cfg = LossConfig {
            clamp: None,
            gamma: 0.5,
            sigma_z: 1.0,
        };
        let g = batch_gradients(
            &params,
            &table,
            &Batch {
                features: feats.view(),
                targets: targets.view(),
                rows: &[0],
            },
            &cfg,
        )
        .unwrap();
        // L = |2z - 1| + 0.5 z²; dL/dw = z, dL/dz = w + z, dL/db = 1
        assert_eq!(g.layers[0].weight[[0, 3]], 1.5);
        assert_eq!(g.layers[0].bias[0], 1.0);
        assert_eq!(g.latents[&0][0], 2.0 + 1.5);
        assert_eq!(g.data_loss, 2.0);
        assert_eq!(g.reg_loss, 0.5 * 2.25);
    }
}
