use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{train_probe, EvalError, PairKind, ProbeConfig, ProbeReport, Targets, TopoLabel, MIN_CLASS_EXAMPLES};
use super::topology::topology_ground_truth;
use crate::geometry::{min_entity_distance, GeoEntity, Geometry, GeometryKind};
use crate::ingest::Dataset;
use crate::training::{canonical_entities, EmbeddingSet};
use crate::Mode;

/// Rows of `set` for `ids`, as `f64`.
pub fn embedding_matrix(set: &EmbeddingSet, ids: &[&str]) -> Result<Array2<f64>, EvalError> {
    let missing = set.missing(ids.iter().copied());
    if !missing.is_empty() {
        return Err(EvalError::MissingIds(missing));
    }
    let mut x = Array2::zeros((ids.len(), set.dim()));
    for (mut row, id) in x.rows_mut().into_iter().zip(ids) {
        for (dst, &v) in row.iter_mut().zip(set.get(id).expect("checked")) {
            *dst = v as f64;
        }
    }
    Ok(x)
}

/// `[z_a, z_b]` per pair of entity indices.
pub fn pair_matrix(set: &EmbeddingSet, entities: &[GeoEntity], pairs: &[(usize, usize)]) -> Result<Array2<f64>, EvalError> {
    let ids: Vec<&str> = entities.iter().map(|e| e.id.as_str()).collect();
    let x = embedding_matrix(set, &ids)?;
    let d = set.dim();
    let mut out = Array2::zeros((pairs.len(), 2 * d));
    for (i, &(a, b)) in pairs.iter().enumerate() {
        out.slice_mut(ndarray::s![i, ..d]).assign(&x.row(a));
        out.slice_mut(ndarray::s![i, d..]).assign(&x.row(b));
    }
    Ok(out)
}

/// Family classification from shape embeddings against the dataset labels.
pub fn task_shape_classification(d: &Dataset, shp: &EmbeddingSet, cfg: &ProbeConfig) -> Result<ProbeReport, EvalError> {
    let labeled: Vec<(&str, i64)> = d
        .entities()
        .iter()
        .filter(|e| e.kind() != GeometryKind::Point)
        .filter_map(|e| d.label(&e.id).map(|l| (e.id.as_str(), l)))
        .collect();
    if labeled.is_empty() {
        return Err(EvalError::MissingLabels);
    }
    let classes: BTreeMap<i64, usize> = labeled
        .iter()
        .map(|&(_, l)| l)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let ids: Vec<&str> = labeled.iter().map(|&(id, _)| id).collect();
    let x = embedding_matrix(shp, &ids)?;
    let labels = labeled.iter().map(|&(_, l)| classes[&l]).collect();
    train_probe(
        x.view(),
        &Targets::Classes {
            labels,
            n_classes: classes.len(),
        },
        cfg,
    )
}

/// Edge-count regression over polygon entities.
pub fn task_edge_count(d: &Dataset, shp: &EmbeddingSet, cfg: &ProbeConfig) -> Result<ProbeReport, EvalError> {
    let polys: Vec<&GeoEntity> = d.entities().iter().filter(|e| e.geometry.has_interior()).collect();
    if polys.is_empty() {
        return Err(EvalError::NoEntities("polygon"));
    }
    let ids: Vec<&str> = polys.iter().map(|e| e.id.as_str()).collect();
    let x = embedding_matrix(shp, &ids)?;
    let y = polys.iter().map(|e| e.geometry.edge_count() as f64).collect();
    train_probe(x.view(), &Targets::Values(y), cfg)
}

/// Length regression over polylines, with lengths measured in the dataset's canonical frame.
pub fn task_line_length(d: &Dataset, combined: &EmbeddingSet, cfg: &ProbeConfig) -> Result<ProbeReport, EvalError> {
    let canon = canonical_entities(d, Mode::Location)?;
    let lines: Vec<&GeoEntity> = canon
        .iter()
        .filter(|e| matches!(e.geometry, Geometry::Polyline(_)))
        .collect();
    if lines.is_empty() {
        return Err(EvalError::NoEntities("polyline"));
    }
    let ids: Vec<&str> = lines.iter().map(|e| e.id.as_str()).collect();
    let x = embedding_matrix(combined, &ids)?;
    let y = lines.iter().map(|e| e.geometry.perimeter()).collect();
    train_probe(x.view(), &Targets::Values(y), cfg)
}

/// A pair of entity indices with its boundary distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSample {
    pub a: usize,
    pub b: usize,
    pub kind: PairKind,
    pub distance: f64,
}

/// Fraction of distance pairs whose second member is among the first's nearest.
const NEAR_FRACTION: f64 = 0.5;
const NEAR_K: usize = 8;

fn members(entities: &[GeoEntity], kind: PairKind) -> (Vec<usize>, Vec<usize>) {
    let (fa, fb) = kind.members();
    let a = (0..entities.len()).filter(|&i| fa(entities[i].kind())).collect();
    let b = (0..entities.len()).filter(|&i| fb(entities[i].kind())).collect();
    (a, b)
}

/// `n` pairs spread round-robin over `kinds`. Half draw the second member from the
/// first's `NEAR_K` nearest candidates, so contact and near-contact pairs are present;
/// the rest are uniform.
pub fn distance_pairs(entities: &[GeoEntity], kinds: &[PairKind], n: usize, seed: u64) -> Result<Vec<PairSample>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<(PairKind, Vec<usize>, Vec<usize>)> = kinds
        .iter()
        .map(|&k| {
            let (a, b) = members(entities, k);
            (k, a, b)
        })
        .filter(|(_, a, b)| !a.is_empty() && b.iter().any(|&j| a.iter().any(|&i| i != j)))
        .collect();
    if pools.is_empty() {
        return Err(EvalError::NoEntities("paired"));
    }
    let mut near: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (kind, pa, pb) = &pools[out.len() % pools.len()];
        let a = *pa.choose(&mut rng).expect("nonempty");
        let b = if rng.random_bool(NEAR_FRACTION) {
            let list = near.entry((a, out.len() % pools.len())).or_insert_with(|| {
                let mut c: Vec<(f64, usize)> = pb
                    .iter()
                    .filter(|&&j| j != a)
                    .map(|&j| (min_entity_distance(&entities[a].geometry, &entities[j].geometry), j))
                    .collect();
                c.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                c.into_iter().take(NEAR_K).map(|(_, j)| j).collect()
            });
            match list.choose(&mut rng) {
                Some(&b) => b,
                None => continue,
            }
        } else {
            let b = *pb.choose(&mut rng).expect("nonempty");
            if b == a {
                continue;
            }
            b
        };
        out.push(PairSample {
            a,
            b,
            kind: *kind,
            distance: min_entity_distance(&entities[a].geometry, &entities[b].geometry),
        });
    }
    Ok(out)
}

/// Pairwise distance regression on concatenated location embeddings, in canonical units.
pub fn task_distance(
    d: &Dataset,
    loc: &EmbeddingSet,
    kinds: &[PairKind],
    n_pairs: usize,
    cfg: &ProbeConfig,
) -> Result<(ProbeReport, Vec<PairSample>), EvalError> {
    let canon = canonical_entities(d, Mode::Location)?;
    let pairs = distance_pairs(&canon, kinds, n_pairs, cfg.seed)?;
    let idx: Vec<(usize, usize)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    let x = pair_matrix(loc, &canon, &idx)?;
    let y = pairs.iter().map(|p| p.distance).collect();
    Ok((train_probe(x.view(), &Targets::Values(y), cfg)?, pairs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabeledPair {
    pub a: usize,
    pub b: usize,
    pub label: TopoLabel,
}

/// Class-balanced labelled pairs of one combination: up to `n / |vocabulary|` per class.
///
/// Every candidate pair is labelled exactly, so rare relations are found whenever they
/// exist. Same-type pairs are unordered with a random orientation.
pub fn topology_pairs(entities: &[GeoEntity], kind: PairKind, n: usize, seed: u64) -> Result<Vec<LabeledPair>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pa, pb) = members(entities, kind);
    let same = matches!(kind, PairKind::PlPl | PairKind::PgPg);
    let vocab = kind.vocabulary();
    let mut by_class: BTreeMap<TopoLabel, Vec<LabeledPair>> = vocab.iter().map(|&l| (l, Vec::new())).collect();
    for &a in &pa {
        for &b in &pb {
            if a == b || (same && b < a) {
                continue;
            }
            let (a, b) = if same && rng.random_bool(0.5) { (b, a) } else { (a, b) };
            let label = topology_ground_truth(&entities[a], &entities[b]);
            by_class.get_mut(&label).expect("label within vocabulary").push(LabeledPair { a, b, label });
        }
    }
    let quota = (n / vocab.len()).max(1);
    let mut out = Vec::new();
    for (label, mut v) in by_class {
        if v.len() < MIN_CLASS_EXAMPLES {
            return Err(EvalError::ClassStarvation {
                class: format!("{kind}/{label}"),
                count: v.len(),
            });
        }
        v.shuffle(&mut rng);
        v.truncate(quota);
        out.extend(v);
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Topological relation classification for one type combination.
pub fn task_topology(
    d: &Dataset,
    loc: &EmbeddingSet,
    kind: PairKind,
    n_pairs: usize,
    cfg: &ProbeConfig,
) -> Result<(ProbeReport, Vec<LabeledPair>), EvalError> {
    let canon = canonical_entities(d, Mode::Location)?;
    let pairs = topology_pairs(&canon, kind, n_pairs, cfg.seed)?;
    let idx: Vec<(usize, usize)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    let x = pair_matrix(loc, &canon, &idx)?;
    let vocab = kind.vocabulary();
    let labels = pairs
        .iter()
        .map(|p| vocab.iter().position(|&l| l == p.label).expect("label within vocabulary"))
        .collect();
    let r = train_probe(
        x.view(),
        &Targets::Classes {
            labels,
            n_classes: vocab.len(),
        },
        cfg,
    )?;
    Ok((r, pairs))
}
