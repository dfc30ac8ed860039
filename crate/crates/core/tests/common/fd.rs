use std::collections::BTreeSet;

use geo2vec::autodecoder::*;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain-loop forward pass: every layer reads `[h, c]`, with `h = c` at the input.
pub fn naive_forward(p: &MlpParams<f64>, c: &[f64]) -> f64 {
    let mut h = c.to_vec();
    let last = p.layers.len() - 1;
    for (k, layer) in p.layers.iter().enumerate() {
        let input: Vec<f64> = h.iter().chain(c).copied().collect();
        let mut out = vec![0.0; layer.weight.nrows()];
        for (o, v) in out.iter_mut().enumerate() {
            let mut a = layer.bias[o];
            for (i, x) in input.iter().enumerate() {
                a += layer.weight[[o, i]] * x;
            }
            *v = if k == last || a > 0.0 { a } else { p.arch.slope * a };
        }
        h = out;
    }
    h[0]
}

pub fn naive_loss(pred: f64, target: f64, clamp: Option<f64>) -> f64 {
    match clamp {
        Some(d) => (pred.clamp(-d, d) - target.clamp(-d, d)).abs(),
        None => (pred - target).abs(),
    }
}

pub struct Case {
    pub params: MlpParams<f64>,
    pub table: LatentTable<f64>,
    pub features: Array2<f64>,
    pub targets: Array1<f64>,
    pub rows: Vec<usize>,
    pub cfg: LossConfig,
}

impl Case {
    pub fn random(seed: u64) -> Case {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let depth = r.random_range(1..4);
        let arch = Arch {
            hidden: (0..depth).map(|_| r.random_range(2..7)).collect(),
            pe_width: r.random_range(1..6),
            latent_dim: r.random_range(1..5),
            slope: r.random_range(0.0..0.3),
        };
        let n_ent = r.random_range(1..6);
        let ids: Vec<String> = (0..n_ent).map(|i| format!("e{i}")).collect();
        let (mut params, table, _) = init::<f64>(&arch, &ids, 0.5, seed).unwrap();
        for v in params.layers.last_mut().unwrap().weight.iter_mut() {
            *v *= 10.0;
        }
        let n = r.random_range(1..300);
        let features = Array2::from_shape_simple_fn((n, arch.pe_width), || r.random_range(-1.0..1.0));
        let targets = Array1::from_shape_simple_fn(n, || r.random_range(-0.5..0.5));
        let rows = (0..n).map(|_| r.random_range(0..n_ent)).collect();
        let cfg = LossConfig {
            clamp: if r.random_bool(0.5) { Some(r.random_range(0.3..2.0)) } else { None },
            gamma: r.random_range(0.0..0.1),
            sigma_z: r.random_range(0.1..1.0),
        };
        Case {
            params,
            table,
            features,
            targets,
            rows,
            cfg,
        }
    }

    pub fn objective(&self, params: &MlpParams<f64>, latents: &Array2<f64>) -> f64 {
        let pw = params.arch.pe_width;
        let mut total = 0.0;
        for (i, &r) in self.rows.iter().enumerate() {
            let mut c = vec![0.0; pw + latents.ncols()];
            for j in 0..pw {
                c[j] = self.features[[i, j]];
            }
            for j in 0..latents.ncols() {
                c[pw + j] = latents[[r, j]];
            }
            total += naive_loss(naive_forward(params, &c), self.targets[i], self.cfg.clamp);
        }
        let w = self.cfg.gamma / (self.cfg.sigma_z * self.cfg.sigma_z);
        let touched: BTreeSet<usize> = self.rows.iter().copied().collect();
        for r in touched {
            total += w * latents.row(r).iter().map(|v| v * v).sum::<f64>();
        }
        total
    }
}

const H: f64 = 1e-6;

/// Relative error of the analytic gradient against central differences over every
/// parameter and every touched latent coordinate.
pub fn gradient_error(case: &Case) -> f64 {
    let batch = Batch {
        features: case.features.view(),
        targets: case.targets.view(),
        rows: &case.rows,
    };
    let g = batch_gradients(&case.params, &case.table, &batch, &case.cfg).unwrap();
    let base = case.table.values().clone();
    assert!((g.objective() - case.objective(&case.params, &base)).abs() <= 1e-9 * (1.0 + g.objective().abs()));
    let mut num = Vec::new();
    let mut ana = Vec::new();
    for k in 0..case.params.layers.len() {
        let (rows, cols) = case.params.layers[k].weight.dim();
        for i in 0..rows {
            for j in 0..cols {
                let mut p = case.params.clone();
                p.layers[k].weight[[i, j]] += H;
                let up = case.objective(&p, &base);
                p.layers[k].weight[[i, j]] -= 2.0 * H;
                let down = case.objective(&p, &base);
                num.push((up - down) / (2.0 * H));
                ana.push(g.layers[k].weight[[i, j]]);
            }
            let mut p = case.params.clone();
            p.layers[k].bias[i] += H;
            let up = case.objective(&p, &base);
            p.layers[k].bias[i] -= 2.0 * H;
            let down = case.objective(&p, &base);
            num.push((up - down) / (2.0 * H));
            ana.push(g.layers[k].bias[i]);
        }
    }
    for (&r, grad) in &g.latents {
        for j in 0..base.ncols() {
            let mut z = base.clone();
            z[[r, j]] += H;
            let up = case.objective(&case.params, &z);
            z[[r, j]] -= 2.0 * H;
            let down = case.objective(&case.params, &z);
            num.push((up - down) / (2.0 * H));
            ana.push(grad[j]);
        }
    }
    let diff: f64 = num.iter().zip(&ana).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = num.iter().map(|a| a * a).sum::<f64>().sqrt().max(ana.iter().map(|a| a * a).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

