use serde::{Deserialize, Serialize};

use super::{AutodecoderError, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// L1 clamp. `None` gives plain L1.
    pub clamp: Option<f64>,
    /// Latent regularizer weight.
    pub gamma: f64,
    pub sigma_z: f64,
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), AutodecoderError> {
        if let Some(d) = self.clamp {
            if !(d.is_finite() && d > 0.0) {
                return Err(AutodecoderError::Config("clamp must be positive"));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(AutodecoderError::Config("gamma must be non-negative"));
        }
        if !(self.sigma_z.is_finite() && self.sigma_z > 0.0) {
            return Err(AutodecoderError::Config("sigma_z must be positive"));
        }
        Ok(())
    }

    /// `γ / σ_z²`.
    pub fn reg_weight(&self) -> f64 {
        self.gamma / (self.sigma_z * self.sigma_z)
    }
}

/// Per-sample loss: `|clamp(pred) - clamp(target)|`.
pub fn loss(pred: f64, target: f64, cfg: &LossConfig) -> f64 {
    loss_and_grad(pred, target, cfg.clamp).0
}

/// Loss and its derivative in `pred`. The subgradient at a zero residual is 0.
#[inline]
pub(crate) fn loss_and_grad<T: Real>(pred: T, target: T, clamp: Option<f64>) -> (T, T) {
    let (p, t, active) = match clamp {
        Some(d) => {
            let d = T::from_f64(d);
            (pred.max(-d).min(d), target.max(-d).min(d), pred.abs() < d)
        }
        None => (pred, target, true),
    };
    let r = p - t;
    let g = if !active || r == T::zero() {
        T::zero()
    } else {
        r.signum()
    };
    (r.abs(), g)
}
