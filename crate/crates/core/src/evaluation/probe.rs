//! Two-layer MLP probes trained on frozen embeddings.

use ndarray::{s, Array, Array1, Array2, ArrayView2, Axis, Dimension, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, Metric};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Fraction of examples used for training.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            hidden: 128,
            epochs: 200,
            lr: 1e-3,
            batch_size: 32,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn with_seed(seed: u64) -> Self {
        ProbeConfig {
            seed,
            ..ProbeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.hidden == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(EvalError::Config("probe widths, epochs and batch size must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(EvalError::Config("probe learning rate must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(EvalError::Config("train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Probe targets: class indices `0..n_classes` or real values.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Test-split score of a probe next to its trivial baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub metric: Metric,
    pub value: f64,
    /// Majority-class accuracy or mean-predictor MAE on the same split.
    pub baseline: f64,
    /// R² on the test split for regression probes.
    pub r2: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Test-split predictions (class index or value), in test order.
    pub predictions: Vec<f64>,
    /// Indices of the test examples.
    pub test_index: Vec<usize>,
}

/// Minimum examples per class for classification probes.
pub const MIN_CLASS_EXAMPLES: usize = 10;

/// Train/test index split; stratified per class for classification.
pub fn split(targets: &Targets, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut train = Vec::new();
    let mut test = Vec::new();
    match targets {
        Targets::Classes { labels, n_classes } => {
            for c in 0..*n_classes {
                let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
                if idx.len() < MIN_CLASS_EXAMPLES {
                    return Err(EvalError::ClassStarvation {
                        class: c.to_string(),
                        count: idx.len(),
                    });
                }
                idx.shuffle(&mut rng);
                let n_train = ((idx.len() as f64) * fraction).round() as usize;
                if n_train >= idx.len() {
                    return Err(EvalError::NoTestExamples { class: c.to_string() });
                }
                train.extend_from_slice(&idx[..n_train.max(1)]);
                test.extend_from_slice(&idx[n_train.max(1)..]);
            }
        }
        Targets::Values(v) => {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.shuffle(&mut rng);
            let n_train = ((v.len() as f64) * fraction).round() as usize;
            if n_train == 0 || n_train >= v.len() {
                return Err(EvalError::Config("too few examples to split".into()));
            }
            test.extend_from_slice(&idx[n_train..]);
            train.extend_from_slice(&idx[..n_train]);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

struct Mlp {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
}

struct Moments {
    m: [Array2<f64>; 2],
    v: [Array2<f64>; 2],
    mb: [Array1<f64>; 2],
    vb: [Array1<f64>; 2],
}

impl Mlp {
    fn new(inputs: usize, hidden: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut uni = |rows: usize, cols: usize| {
            let bound = 1.0 / (cols as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
        };
        Mlp {
            w1: uni(hidden, inputs),
            b1: Array1::zeros(hidden),
            w2: uni(outputs, hidden),
            b2: Array1::zeros(outputs),
        }
    }

    fn hidden(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.dot(&self.w1.t());
        h += &self.b1;
        h.mapv_inplace(|v| v.max(0.0));
        h
    }

    fn forward(&self, x: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        let h = self.hidden(x);
        let mut out = h.dot(&self.w2.t());
        out += &self.b2;
        (h, out)
    }
}

fn adam<D: Dimension>(
    p: &mut Array<f64, D>,
    m: &mut Array<f64, D>,
    v: &mut Array<f64, D>,
    g: &Array<f64, D>,
    lr: f64,
    t: i32,
) {
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let c1 = 1.0 - f64::powi(b1, t);
    let c2 = 1.0 - f64::powi(b2, t);
    Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    });
}

fn standardize(x: &Array2<f64>, rows: &[usize]) -> (Array1<f64>, Array1<f64>) {
    let sub = x.select(Axis(0), rows);
    let mean = sub.mean_axis(Axis(0)).expect("train split is nonempty");
    let mut std = sub.std_axis(Axis(0), 0.0);
    std.mapv_inplace(|s| if s > 1e-12 { s } else { 1.0 });
    (mean, std)
}

/// Trains a probe on the train split and scores it on the test split.
///
/// Inputs are z-scored with train statistics; regression targets likewise, with
/// predictions mapped back before scoring. The learning rate decays linearly to zero.
pub fn train_probe(x: ArrayView2<f64>, targets: &Targets, cfg: &ProbeConfig) -> Result<ProbeReport, EvalError> {
    cfg.validate()?;
    if x.nrows() != targets.len() {
        return Err(EvalError::Config("feature rows differ from target count".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite("features"));
    }
    if let Targets::Values(v) = targets {
        if v.iter().any(|t| !t.is_finite()) {
            return Err(EvalError::NonFinite("targets"));
        }
    }
    let (train_idx, test_idx) = split(targets, cfg.train_fraction, cfg.seed)?;
    let x = x.to_owned();
    let (mu, sd) = standardize(&x, &train_idx);
    let z = (&x - &mu) / &sd;

    let (outputs, y_train, t_mean, t_std) = match targets {
        Targets::Classes { labels, n_classes } => {
            let y = Array2::from_shape_fn((train_idx.len(), 1), |(i, _)| labels[train_idx[i]] as f64);
            (*n_classes, y, 0.0, 1.0)
        }
        Targets::Values(v) => {
            let tr: Vec<f64> = train_idx.iter().map(|&i| v[i]).collect();
            let m = tr.iter().sum::<f64>() / tr.len() as f64;
            let s = (tr.iter().map(|t| (t - m).powi(2)).sum::<f64>() / tr.len() as f64).sqrt();
            let s = if s > 1e-12 { s } else { 1.0 };
            let y = Array2::from_shape_fn((tr.len(), 1), |(i, _)| (tr[i] - m) / s);
            (1, y, m, s)
        }
    };
    let classify = matches!(targets, Targets::Classes { .. });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::new(z.ncols(), cfg.hidden, outputs, &mut rng);
    let mut mom = Moments {
        m: [Array2::zeros(net.w1.dim()), Array2::zeros(net.w2.dim())],
        v: [Array2::zeros(net.w1.dim()), Array2::zeros(net.w2.dim())],
        mb: [Array1::zeros(cfg.hidden), Array1::zeros(outputs)],
        vb: [Array1::zeros(cfg.hidden), Array1::zeros(outputs)],
    };
    let z_train = z.select(Axis(0), &train_idx);
    let mut order: Vec<usize> = (0..train_idx.len()).collect();
    let steps_per_epoch = order.len().div_ceil(cfg.batch_size);
    let total = (cfg.epochs * steps_per_epoch) as f64;
    let mut t = 0i32;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(cfg.batch_size) {
            let xb = z_train.select(Axis(0), idx);
            let yb = y_train.select(Axis(0), idx);
            let (h, out) = net.forward(xb.view());
            let n = idx.len() as f64;
            let d_out = if classify {
                let mut p = out;
                for (mut row, y) in p.rows_mut().into_iter().zip(yb.column(0)) {
                    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.sum();
                    row /= sum;
                    row[*y as usize] -= 1.0;
                }
                p / n
            } else {
                (out - &yb) * (2.0 / n)
            };
            let gw2 = d_out.t().dot(&h);
            let gb2 = d_out.sum_axis(Axis(0));
            let mut dh = d_out.dot(&net.w2);
            Zip::from(&mut dh).and(&h).for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
            let gw1 = dh.t().dot(&xb);
            let gb1 = dh.sum_axis(Axis(0));
            t += 1;
            let lr = cfg.lr * (1.0 - (t - 1) as f64 / total);
            let [m1, m2] = &mut mom.m;
            let [v1, v2] = &mut mom.v;
            adam(&mut net.w1, m1, v1, &gw1, lr, t);
            adam(&mut net.w2, m2, v2, &gw2, lr, t);
            let [mb1, mb2] = &mut mom.mb;
            let [vb1, vb2] = &mut mom.vb;
            adam(&mut net.b1, mb1, vb1, &gb1, lr, t);
            adam(&mut net.b2, mb2, vb2, &gb2, lr, t);
        }
    }

    let z_test = z.select(Axis(0), &test_idx);
    let (_, out) = net.forward(z_test.view());
    match targets {
        Targets::Classes { labels, n_classes } => {
            let pred: Vec<usize> = out
                .rows()
                .into_iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                        .0
                })
                .collect();
            let correct = pred
                .iter()
                .zip(&test_idx)
                .filter(|(p, &i)| **p == labels[i])
                .count();
            let mut counts = vec![0usize; *n_classes];
            for &i in &train_idx {
                counts[labels[i]] += 1;
            }
            let majority = (0..*n_classes).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap_or(0);
            let base = test_idx.iter().filter(|&&i| labels[i] == majority).count();
            Ok(ProbeReport {
                metric: Metric::Accuracy,
                value: correct as f64 / test_idx.len() as f64,
                baseline: base as f64 / test_idx.len() as f64,
                r2: None,
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                predictions: pred.iter().map(|&p| p as f64).collect(),
                test_index: test_idx,
            })
        }
        Targets::Values(v) => {
            let pred: Vec<f64> = out.slice(s![.., 0]).iter().map(|p| p * t_std + t_mean).collect();
            let truth: Vec<f64> = test_idx.iter().map(|&i| v[i]).collect();
            let n = truth.len() as f64;
            let mae = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
            let baseline = truth.iter().map(|t| (t - t_mean).abs()).sum::<f64>() / n;
            let mean = truth.iter().sum::<f64>() / n;
            let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
            let ss_res: f64 = pred.iter().zip(&truth).map(|(p, t)| (p - t).powi(2)).sum();
            let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN };
            Ok(ProbeReport {
                metric: Metric::Mae,
                value: mae,
                baseline,
                r2: Some(r2),
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                predictions: pred,
                test_index: test_idx,
            })
        }
    }
}
