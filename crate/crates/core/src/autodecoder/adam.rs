use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{AutodecoderError, Dense, Gradients, LatentTable, MlpParams, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr_net: f64,
    pub lr_latent: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr_net: 1e-4,
            lr_latent: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), AutodecoderError> {
        let lr_ok = |v: f64| v.is_finite() && v > 0.0;
        let beta_ok = |v: f64| (0.0..1.0).contains(&v);
        if !lr_ok(self.lr_net) || !lr_ok(self.lr_latent) {
            return Err(AutodecoderError::Config("learning rates must be positive"));
        }
        if !beta_ok(self.beta1) || !beta_ok(self.beta2) {
            return Err(AutodecoderError::Config("Adam betas must lie in [0, 1)"));
        }
        if !lr_ok(self.eps) {
            return Err(AutodecoderError::Config("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// Adam moments for every trainable tensor. Latent rows are updated only when the
/// batch touches them; the step counter is global.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Dense<T>>,
    pub v: Vec<Dense<T>>,
    pub m_latent: Array2<T>,
    pub v_latent: Array2<T>,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &MlpParams<T>, table: &LatentTable<T>, config: AdamConfig) -> Self {
        let zeros: Vec<Dense<T>> = params
            .layers
            .iter()
            .map(|l| Dense::zeros(l.weight.ncols(), l.weight.nrows()))
            .collect();
        AdamState {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
            m_latent: Array2::zeros(table.values().dim()),
            v_latent: Array2::zeros(table.values().dim()),
        }
    }
}

struct Coeffs<T> {
    b1: T,
    b2: T,
    one_b1: T,
    one_b2: T,
    c1: T,
    c2: T,
    eps: T,
}

#[inline]
fn update<T: Real>(p: &mut T, m: &mut T, v: &mut T, g: T, lr: T, k: &Coeffs<T>) {
    *m = k.b1 * *m + k.one_b1 * g;
    *v = k.b2 * *v + k.one_b2 * g * g;
    // flush subnormals
    if m.abs() < T::min_positive_value() {
        *m = T::zero();
    }
    if *v < T::min_positive_value() {
        *v = T::zero();
    }
    *p = *p - lr * (*m / k.c1) / ((*v / k.c2).sqrt() + k.eps);
}

/// One bias-corrected Adam update of the network and of the touched latent rows.
pub fn adam_step<T: Real>(
    params: &mut MlpParams<T>,
    table: &mut LatentTable<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
) -> Result<(), AutodecoderError> {
    if grads.layers.len() != params.layers.len()
        || state.m.len() != params.layers.len()
        || state.m_latent.dim() != table.values().dim()
    {
        return Err(AutodecoderError::Shape("optimizer state does not match parameters"));
    }
    for ((p, g), m) in params.layers.iter().zip(&grads.layers).zip(&state.m) {
        if p.weight.dim() != g.weight.dim() || p.weight.dim() != m.weight.dim() {
            return Err(AutodecoderError::Shape("gradient does not match parameters"));
        }
    }
    if grads.latents.keys().any(|&r| r >= table.len()) {
        return Err(AutodecoderError::Shape("latent gradient row out of range"));
    }

    state.step += 1;
    let c = &state.config;
    let t = state.step.min(i32::MAX as u64) as i32;
    let k = Coeffs {
        b1: T::from_f64(c.beta1),
        b2: T::from_f64(c.beta2),
        one_b1: T::from_f64(1.0 - c.beta1),
        one_b2: T::from_f64(1.0 - c.beta2),
        c1: T::from_f64(1.0 - c.beta1.powi(t)),
        c2: T::from_f64(1.0 - c.beta2.powi(t)),
        eps: T::from_f64(c.eps),
    };
    let lr_net = T::from_f64(c.lr_net);
    let lr_lat = T::from_f64(c.lr_latent);

    for (((p, g), m), v) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        Zip::from(&mut p.weight)
            .and(&mut m.weight)
            .and(&mut v.weight)
            .and(&g.weight)
            .for_each(|p, m, v, &g| update(p, m, v, g, lr_net, &k));
        Zip::from(&mut p.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .and(&g.bias)
            .for_each(|p, m, v, &g| update(p, m, v, g, lr_net, &k));
    }
    let values = table.values_mut();
    for (&r, g) in &grads.latents {
        Zip::from(values.row_mut(r))
            .and(state.m_latent.row_mut(r))
            .and(state.v_latent.row_mut(r))
            .and(g)
            .for_each(|p, m, v, &g| update(p, m, v, g, lr_lat, &k));
    }
    Ok(())
}
