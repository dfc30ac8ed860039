use super::{task_edge_count, task_shape_classification, EvalError, ProbeConfig};
use crate::geometry::GeoEntity;
use crate::ingest::Dataset;
use crate::sampling::SamplingParams;
use crate::training::{canonical_entities, resolve_sigma, train, TrainConfig};
use crate::Mode;

/// Mean per-entity sample count under `params`.
pub fn mean_sample_count(entities: &[GeoEntity], params: &SamplingParams) -> f64 {
    let total: usize = entities.iter().map(|e| params.total_count(&e.geometry)).sum();
    total as f64 / entities.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetRow {
    pub budget: usize,
    pub epsilon: f64,
    /// Achieved mean samples per entity.
    pub mean_samples: f64,
    pub shape_accuracy: f64,
    pub shape_baseline: f64,
    pub edge_mae: f64,
    pub edge_baseline: f64,
}

const BISECT_STEPS: usize = 60;

/// `epsilon` whose mean per-entity count is closest to `budget`.
fn fit_epsilon(entities: &[GeoEntity], base: &SamplingParams, budget: usize) -> Result<(f64, f64), EvalError> {
    let count = |eps: f64| {
        mean_sample_count(
            entities,
            &SamplingParams {
                epsilon: eps,
                ..base.clone()
            },
        )
    };
    let floor = count(f64::MIN_POSITIVE);
    let target = budget as f64;
    if budget < base.n_axis * base.n_axis || floor > target {
        return Err(EvalError::InfeasibleBudget {
            budget,
            min: floor.max((base.n_axis * base.n_axis) as f64),
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while count(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(EvalError::InfeasibleBudget { budget, min: floor });
        }
    }
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if count(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lo = lo.max(f64::MIN_POSITIVE);
    let (cl, ch) = (count(lo), count(hi));
    Ok(if (target - cl).abs() <= (ch - target).abs() {
        (lo, cl)
    } else {
        (hi, ch)
    })
}

/// Trains one shape model per budget, with `epsilon` rescaled so the mean number of
/// samples per entity matches the budget, and scores both shape probes.
///
/// Sample sets at different budgets are drawn independently; they are not nested.
pub fn sample_budget_sweep(
    d: &Dataset,
    budgets: &[usize],
    cfg: &TrainConfig,
    probe: &ProbeConfig,
) -> Result<Vec<BudgetRow>, EvalError> {
    let cfg = TrainConfig {
        mode: Mode::Shape,
        ..cfg.clone()
    };
    let canon = canonical_entities(d, Mode::Shape)?;
    let sigma = resolve_sigma(d, &canon, &cfg)?;
    let base = cfg.sampling(sigma);
    let fitted = budgets
        .iter()
        .map(|&b| fit_epsilon(&canon, &base, b))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(budgets.len());
    for (&budget, (epsilon, mean_samples)) in budgets.iter().zip(fitted) {
        let run = TrainConfig {
            epsilon,
            sigma: Some(sigma),
            ..cfg.clone()
        };
        let out = train(d, &run)?;
        let shape = task_shape_classification(d, &out.embeddings, probe)?;
        let edge = task_edge_count(d, &out.embeddings, probe)?;
        rows.push(BudgetRow {
            budget,
            epsilon,
            mean_samples,
            shape_accuracy: shape.value,
            shape_baseline: shape.baseline,
            edge_mae: edge.value,
            edge_baseline: edge.baseline,
        });
    }
    Ok(rows)
}
