//! Adaptive boundary-aware sampling of signed-distance training points.
//!
//! Each entity contributes three groups of samples: Gaussian clouds around every
//! vertex, perpendicular jitter along every edge, and a uniform grid over the
//! domain. Sample counts scale with a resolution `epsilon` and the data-driven
//! deviation `sigma`.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    min_entity_distance, normalize_shape, sdf, segment_segment_distance, BBox, Coord, GeoEntity,
    Geometry,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("need at least {need} entities, got {got}")]
    TooFewEntities { need: usize, got: usize },
    #[error("all sampled distances are zero; sigma is undefined")]
    DegenerateDistances,
    #[error("dataset has no entity with edges")]
    NoEdges,
    #[error("degenerate edge ({0:?} == {1:?})")]
    DegenerateEdge(Coord, Coord),
    #[error("invalid sampling parameter: {0}")]
    InvalidParams(&'static str),
}

/// How per-vertex and per-edge counts follow from `epsilon` and `sigma`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountRule {
    /// `eps * sigma` per vertex, `eps * length` per edge.
    #[default]
    Linear,
    /// `pi * sigma^2 * eps^2` per vertex, `2 * sigma * length * eps^2` per edge.
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub sigma: f64,
    pub epsilon: f64,
    pub n_axis: usize,
    pub k: usize,
    pub subset: usize,
    pub seed: u64,
    #[serde(default)]
    pub count_rule: CountRule,
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(SamplingError::InvalidParams("sigma must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SamplingError::InvalidParams("epsilon must be positive"));
        }
        if self.n_axis < 2 {
            return Err(SamplingError::InvalidParams("n_axis must be at least 2"));
        }
        if self.k == 0 {
            return Err(SamplingError::InvalidParams("k must be at least 1"));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        let raw = match self.count_rule {
            CountRule::Linear => self.epsilon * self.sigma,
            CountRule::Quadratic => std::f64::consts::PI * self.sigma.powi(2) * self.epsilon.powi(2),
        };
        (raw.round() as usize).max(1)
    }

    pub fn edge_count(&self, length: f64) -> usize {
        let raw = match self.count_rule {
            CountRule::Linear => self.epsilon * length,
            CountRule::Quadratic => 2.0 * self.sigma * length * self.epsilon.powi(2),
        };
        (raw.round() as usize).max(1)
    }

    /// Total samples `build_training_set` will emit for `g`.
    pub fn total_count(&self, g: &Geometry) -> usize {
        let verts = g.vertices().len() * self.vertex_count();
        let edges: usize = g
            .edges()
            .iter()
            .map(|(a, b)| self.edge_count(a.distance(*b)))
            .sum();
        verts + edges + self.n_axis * self.n_axis
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdfSample {
    pub position: Coord,
    pub signed_distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleOrigin {
    Vertex,
    Edge,
    Space,
}

/// One entity's samples, grouped by origin.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingSet {
    pub vertex: Vec<SdfSample>,
    pub edge: Vec<SdfSample>,
    pub space: Vec<SdfSample>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.vertex.len() + self.edge.len() + self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &SdfSample> {
        self.vertex.iter().chain(&self.edge).chain(&self.space)
    }

    pub fn iter_tagged(&self) -> impl Iterator<Item = (SampleOrigin, &SdfSample)> {
        self.vertex
            .iter()
            .map(|s| (SampleOrigin::Vertex, s))
            .chain(self.edge.iter().map(|s| (SampleOrigin::Edge, s)))
            .chain(self.space.iter().map(|s| (SampleOrigin::Space, s)))
    }
}

/// Which canonical space an entity is sampled in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleDomain {
    /// Per-entity `[-1, 1]²`.
    Shape,
    /// The dataset's canonical bounding box.
    Location(BBox),
}

impl SampleDomain {
    pub fn bbox(&self) -> BBox {
        match self {
            SampleDomain::Shape => BBox::CANONICAL,
            SampleDomain::Location(b) => *b,
        }
    }
}

fn population_std_or_mean(values: &[f64]) -> Result<f64, SamplingError> {
    if values.is_empty() {
        return Err(SamplingError::DegenerateDistances);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 0.0 {
        Ok(std)
    } else if mean > 0.0 {
        Ok(mean)
    } else {
        Err(SamplingError::DegenerateDistances)
    }
}

/// Distances from each entity in a random subset to its `k` nearest neighbours.
pub fn location_neighbor_distances(
    entities: &[GeoEntity],
    k: usize,
    subset: usize,
    seed: u64,
) -> Result<Vec<f64>, SamplingError> {
    if entities.len() < 2 {
        return Err(SamplingError::TooFewEntities {
            need: 2,
            got: entities.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = entities.len();
    let mut chosen = sample_indices(&mut rng, n, subset.min(n)).into_vec();
    chosen.sort_unstable();
    let mut pooled = Vec::with_capacity(chosen.len() * k);
    for i in chosen {
        let mut d: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| min_entity_distance(&entities[i].geometry, &entities[j].geometry))
            .collect();
        d.sort_by(f64::total_cmp);
        pooled.extend_from_slice(&d[..k.min(d.len())]);
    }
    Ok(pooled)
}

/// Location sampling deviation: std of k-nearest-neighbour entity distances.
///
/// Falls back to the mean when the std is zero.
pub fn estimate_sigma_loc(
    entities: &[GeoEntity],
    k: usize,
    subset: usize,
    seed: u64,
) -> Result<f64, SamplingError> {
    population_std_or_mean(&location_neighbor_distances(entities, k, subset, seed)?)
}

/// Distances from each edge to its `k` nearest non-adjacent edges of the same entity,
/// measured in the entity's shape-canonical space.
pub fn shape_edge_distances(
    entities: &[GeoEntity],
    k: usize,
    subset: usize,
    seed: u64,
) -> Result<Vec<f64>, SamplingError> {
    let shaped: Vec<&GeoEntity> = entities
        .iter()
        .filter(|e| !matches!(e.geometry, Geometry::Point(_)))
        .collect();
    if shaped.is_empty() {
        return Err(SamplingError::NoEdges);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample_indices(&mut rng, shaped.len(), subset.min(shaped.len())).into_vec();
    chosen.sort_unstable();
    let mut pooled = Vec::new();
    for i in chosen {
        let Ok((canon, _)) = normalize_shape(shaped[i]) else {
            continue;
        };
        let edges = canon.geometry.edges();
        for (ei, &(a, b)) in edges.iter().enumerate() {
            let mut d: Vec<f64> = edges
                .iter()
                .enumerate()
                .filter(|&(ej, &(c, dd))| ej != ei && !shares_vertex(a, b, c, dd))
                .map(|(_, &(c, dd))| segment_segment_distance(a, b, c, dd))
                .collect();
            d.sort_by(f64::total_cmp);
            pooled.extend_from_slice(&d[..k.min(d.len())]);
        }
    }
    if pooled.is_empty() {
        return Err(SamplingError::NoEdges);
    }
    Ok(pooled)
}

fn shares_vertex(a: Coord, b: Coord, c: Coord, d: Coord) -> bool {
    a == c || a == d || b == c || b == d
}

/// Shape sampling deviation: std of nearest non-adjacent edge distances.
pub fn estimate_sigma_shp(
    entities: &[GeoEntity],
    k: usize,
    subset: usize,
    seed: u64,
) -> Result<f64, SamplingError> {
    population_std_or_mean(&shape_edge_distances(entities, k, subset, seed)?)
}

/// `n` points from `N(v, sigma² I)` with their signed distances to `g`.
pub fn sample_vertex<R: Rng + ?Sized>(
    v: Coord,
    g: &Geometry,
    sigma: f64,
    n: usize,
    rng: &mut R,
) -> Vec<SdfSample> {
    (0..n)
        .map(|_| {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            let p = Coord::new(v.x + sigma * dx, v.y + sigma * dy);
            SdfSample {
                position: p,
                signed_distance: sdf(p, g),
            }
        })
        .collect()
}

/// Stochastic perpendicular sampling along edge `a -> b`.
///
/// Each point is `(1-f) a + f b + s d n` with `f ~ U(0,1)`, `d ~ N(0, sigma²)`,
/// `s ~ U{-1,+1}` and `n` the unit left normal of the edge.
pub fn sample_edge<R: Rng + ?Sized>(
    a: Coord,
    b: Coord,
    g: &Geometry,
    sigma: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<SdfSample>, SamplingError> {
    if a == b {
        return Err(SamplingError::DegenerateEdge(a, b));
    }
    let dir = b - a;
    let normal = Coord::new(-dir.y, dir.x) * (1.0 / dir.norm());
    let offset = Normal::new(0.0, sigma).map_err(|_| SamplingError::InvalidParams("sigma"))?;
    Ok((0..n)
        .map(|_| {
            let f: f64 = rng.random();
            let d = offset.sample(rng);
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let p = a * (1.0 - f) + b * f + normal * (s * d);
            SdfSample {
                position: p,
                signed_distance: sdf(p, g),
            }
        })
        .collect())
}

/// Inclusive `n_axis × n_axis` grid over `domain`, row-major from the min corner.
pub fn grid_points(domain: &BBox, n_axis: usize) -> Vec<Coord> {
    let step_x = domain.width() / (n_axis - 1) as f64;
    let step_y = domain.height() / (n_axis - 1) as f64;
    let mut out = Vec::with_capacity(n_axis * n_axis);
    for j in 0..n_axis {
        let y = if j == n_axis - 1 {
            domain.max.y
        } else {
            domain.min.y + j as f64 * step_y
        };
        for i in 0..n_axis {
            let x = if i == n_axis - 1 {
                domain.max.x
            } else {
                domain.min.x + i as f64 * step_x
            };
            out.push(Coord::new(x, y));
        }
    }
    out
}

/// Uniform grid samples over `domain`.
pub fn sample_space(domain: &BBox, g: &Geometry, n_axis: usize) -> Vec<SdfSample> {
    grid_points(domain, n_axis)
        .into_iter()
        .map(|p| SdfSample {
            position: p,
            signed_distance: sdf(p, g),
        })
        .collect()
}

/// Per-entity RNG seed derived from the run seed and the entity id.
pub fn entity_seed(seed: u64, id: &str) -> u64 {
    // FNV-1a over the id, then a splitmix64 finalizer with the run seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(h ^ splitmix(seed))
}

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// All three sampling stages for one (already normalized) entity.
pub fn build_training_set(
    e: &GeoEntity,
    params: &SamplingParams,
    domain: SampleDomain,
) -> Result<TrainingSet, SamplingError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(entity_seed(params.seed, &e.id));
    let g = &e.geometry;
    let n_vertex = params.vertex_count();
    let mut set = TrainingSet::default();
    for v in g.vertices() {
        set.vertex
            .extend(sample_vertex(v, g, params.sigma, n_vertex, &mut rng));
    }
    for (a, b) in g.edges() {
        let n_edge = params.edge_count(a.distance(b));
        set.edge
            .extend(sample_edge(a, b, g, params.sigma, n_edge, &mut rng)?);
    }
    set.space = sample_space(&domain.bbox(), g, params.n_axis);
    Ok(set)
}
