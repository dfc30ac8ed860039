use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::AutodecoderError;

/// Scalar type the network can run in. Training uses `f32`; gradient checks use `f64`.
pub trait Real:
    LinalgScalar + Float + ScalarOperand + AddAssign + SubAssign + MulAssign + Send + Sync + Debug + Display + Default + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Layer layout. Every layer sees its predecessor's output concatenated with the
/// conditioning vector `[encoded position, latent code]`; the first layer's
/// predecessor output is the conditioning vector itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arch {
    pub hidden: Vec<usize>,
    pub pe_width: usize,
    pub latent_dim: usize,
    /// LeakyReLU negative slope.
    pub slope: f64,
}

impl Arch {
    pub fn cond_width(&self) -> usize {
        self.pe_width + self.latent_dim
    }

    /// `(fan_in, fan_out)` of every affine layer, output layer last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let c = self.cond_width();
        let mut prev = c;
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        for &h in &self.hidden {
            dims.push((prev + c, h));
            prev = h;
        }
        dims.push((prev + c, 1));
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn validate(&self) -> Result<(), AutodecoderError> {
        if self.hidden.contains(&0) || self.pe_width == 0 || self.latent_dim == 0 {
            return Err(AutodecoderError::Config("layer widths must be positive"));
        }
        if !(self.slope.is_finite() && self.slope >= 0.0 && self.slope < 1.0) {
            return Err(AutodecoderError::Config("LeakyReLU slope must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Weight `(fan_out, fan_in)` and bias of one affine layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Dense<T>) {
        self.weight += &other.weight;
        self.bias += &other.bias;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams<T> {
    pub arch: Arch,
    pub layers: Vec<Dense<T>>,
}

/// Activations kept from a batched forward pass.
pub struct ForwardCache<T> {
    inputs: Vec<Array2<T>>,
    preacts: Vec<Array2<T>>,
}

#[inline]
fn leaky<T: Real>(a: T, slope: T) -> T {
    if a > T::zero() {
        a
    } else {
        a * slope
    }
}

impl<T: Real> MlpParams<T> {
    pub fn zeros(arch: Arch) -> Self {
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(i, o)| Dense::zeros(i, o))
            .collect();
        MlpParams { arch, layers }
    }

    /// Predictions for a batch of conditioning rows `[features, latent]`.
    pub fn forward_batch(&self, cond: ArrayView2<T>) -> (Array1<T>, ForwardCache<T>) {
        let b = cond.nrows();
        let cw = cond.ncols();
        debug_assert_eq!(cw, self.arch.cond_width());
        let slope = T::from_f64(self.arch.slope);
        let last = self.layers.len() - 1;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            preacts: Vec::with_capacity(last),
        };
        let mut h = cond.to_owned();
        let mut out = Array1::zeros(b);
        for (k, layer) in self.layers.iter().enumerate() {
            let prev = h.ncols();
            let mut u = Array2::zeros((b, prev + cw));
            u.slice_mut(s![.., ..prev]).assign(&h);
            u.slice_mut(s![.., prev..]).assign(&cond);
            let mut a = u.dot(&layer.weight.t());
            a += &layer.bias;
            cache.inputs.push(u);
            if k == last {
                out = a.column(0).to_owned();
            } else {
                h = a.mapv(|v| leaky(v, slope));
                cache.preacts.push(a);
            }
        }
        (out, cache)
    }

    /// Back-propagates `d_out` (dLoss/dPrediction per row). Returns parameter gradients and
    /// the gradient with respect to every conditioning row.
    pub fn backward(&self, cache: &ForwardCache<T>, d_out: ArrayView1<T>) -> (Vec<Dense<T>>, Array2<T>) {
        let b = d_out.len();
        let cw = self.arch.cond_width();
        let slope = T::from_f64(self.arch.slope);
        let mut grads: Vec<Dense<T>> = Vec::with_capacity(self.layers.len());
        let mut d_cond = Array2::<T>::zeros((b, cw));
        let mut da = d_out.insert_axis(Axis(1)).to_owned();
        for k in (0..self.layers.len()).rev() {
            let u = &cache.inputs[k];
            let layer = &self.layers[k];
            grads.push(Dense {
                weight: da.t().dot(u),
                bias: da.sum_axis(Axis(0)),
            });
            let du = da.dot(&layer.weight);
            let prev = du.ncols() - cw;
            d_cond += &du.slice(s![.., prev..]);
            let dh = du.slice(s![.., ..prev]);
            if k == 0 {
                d_cond += &dh;
            } else {
                let mut next = dh.to_owned();
                Zip::from(&mut next)
                    .and(&cache.preacts[k - 1])
                    .for_each(|g, &a| {
                        if a <= T::zero() {
                            *g = *g * slope;
                        }
                    });
                da = next;
            }
        }
        grads.reverse();
        (grads, d_cond)
    }

    /// Single prediction for one latent code and one encoded position.
    pub fn forward(&self, latent: ArrayView1<T>, features: ArrayView1<T>) -> Result<T, AutodecoderError> {
        if features.len() != self.arch.pe_width || latent.len() != self.arch.latent_dim {
            return Err(AutodecoderError::WidthMismatch {
                expected: self.arch.cond_width(),
                got: features.len() + latent.len(),
            });
        }
        let mut cond = Array2::zeros((1, self.arch.cond_width()));
        cond.slice_mut(s![0, ..features.len()]).assign(&features);
        cond.slice_mut(s![0, features.len()..]).assign(&latent);
        Ok(self.forward_batch(cond.view()).0[0])
    }

    pub fn cast<U: Real>(&self) -> MlpParams<U> {
        MlpParams {
            arch: self.arch.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.mapv(|v| U::from_f64(v.as_f64())),
                    bias: l.bias.mapv(|v| U::from_f64(v.as_f64())),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn arch(hidden: Vec<usize>, pe: usize, latent: usize) -> Arch {
        Arch {
            hidden,
            pe_width: pe,
            latent_dim: latent,
            slope: 0.01,
        }
    }

    #[test]
    fn layer_dims_include_conditioning() {
        let a = arch(vec![256, 256, 256, 256], 48, 64);
        let dims = a.layer_dims();
        assert_eq!(dims[0], (224, 256));
        assert_eq!(dims[1], (368, 256));
        assert_eq!(dims[4], (368, 1));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::<f64>::zeros(arch(vec![4, 3], 2, 2));
        let y = p.forward(array![0.3, -2.0].view(), array![1.0, 5.0].view()).unwrap();
        assert_eq!(y, 0.0);
    }

    #[test]
    fn linear_layer_selects_input() {
        let mut p = MlpParams::<f64>::zeros(arch(vec![], 2, 1));
        // input = [c, c] with c = [f0, f1, z0]; pick f1 from the second copy
        p.layers[0].weight[[0, 4]] = 1.0;
        let y = p.forward(array![7.0].view(), array![0.5, -0.25].view()).unwrap();
        assert_eq!(y, -0.25);
    }

    #[test]
    fn leaky_unit_passes_scaled_negative() {
        let mut p = MlpParams::<f64>::zeros(arch(vec![1], 1, 1));
        // hidden pre-activation = -1 via bias; output reads the hidden unit
        p.layers[0].bias[0] = -1.0;
        p.layers[1].weight[[0, 0]] = 1.0;
        let y = p.forward(array![0.0].view(), array![0.0].view()).unwrap();
        assert!((y + 0.01).abs() < 1e-15);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let p = MlpParams::<f64>::zeros(arch(vec![2], 3, 2));
        assert!(p.forward(array![0.0, 0.0].view(), array![1.0].view()).is_err());
    }
}
