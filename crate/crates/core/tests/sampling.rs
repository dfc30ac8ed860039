mod common;

use geo2vec::geometry::{sdf, Coord, GeoEntity, Geometry, Polygon};
use geo2vec::ingest::{synthesize, SynthesisSpec};
use geo2vec::sampling::*;
use geo2vec::training::canonical_entities;
use geo2vec::Mode;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(sigma: f64, epsilon: f64, seed: u64) -> SamplingParams {
    SamplingParams {
        sigma,
        epsilon,
        n_axis: 8,
        k: 5,
        subset: 1000,
        seed,
        count_rule: CountRule::Linear,
    }
}

fn expected_vertex(eps: f64, sigma: f64) -> usize {
    let n = (eps * sigma).round();
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

fn expected_edge(eps: f64, len: f64) -> usize {
    let n = (eps * len).round();
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

#[test]
fn counts_follow_linear_rule_on_full_dataset() {
    let d = synthesize(&SynthesisSpec::shapes(10, 3)).unwrap();
    let canon = canonical_entities(&d, Mode::Shape).unwrap();
    for (eps, sigma) in [(20.0, 0.07), (3.0, 0.01), (150.0, 0.33), (0.5, 0.5)] {
        let p = params(sigma, eps, 1);
        for e in &canon {
            let set = build_training_set(e, &p, SampleDomain::Shape).unwrap();
            let g = &e.geometry;
            assert_eq!(set.vertex.len(), g.vertices().len() * expected_vertex(eps, sigma));
            let edges: usize = g.edges().iter().map(|(a, b)| expected_edge(eps, a.distance(*b))).sum();
            assert_eq!(set.edge.len(), edges);
            assert_eq!(set.space.len(), 64);
            assert_eq!(set.len(), p.total_count(g));
        }
    }
}

#[test]
fn quadratic_rule_is_available() {
    let p = SamplingParams {
        count_rule: CountRule::Quadratic,
        ..params(0.1, 10.0, 0)
    };
    assert_eq!(p.vertex_count(), (std::f64::consts::PI * 0.01 * 100.0).round() as usize);
    assert_eq!(p.edge_count(0.5), (2.0f64 * 0.1 * 0.5 * 100.0).round() as usize);
}

const KS_N: usize = 10_000;
const ALPHA: f64 = 0.01;

#[test]
fn edge_offsets_are_symmetric_gaussian() {
    let (a, b) = (Coord::new(0.0, 0.0), Coord::new(1.0, 0.0));
    let g = Geometry::Polyline(geo2vec::geometry::Polyline::new(vec![a, b]).unwrap());
    let sigma = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = sample_edge(a, b, &g, sigma, KS_N, &mut rng).unwrap();
    let mut offsets: Vec<f64> = s.iter().map(|x| x.position.y / sigma).collect();
    let d = common::ks_statistic(&mut offsets, common::normal_cdf);
    assert!(common::ks_p_value(d, KS_N) > ALPHA, "offset KS d={d}");
    let mut mirrored: Vec<f64> = s.iter().map(|x| -x.position.y / sigma).collect();
    let d = common::ks_statistic(&mut mirrored, common::normal_cdf);
    assert!(common::ks_p_value(d, KS_N) > ALPHA, "mirrored KS d={d}");
    let positive = s.iter().filter(|x| x.position.y > 0.0).count() as f64;
    let z = (positive - KS_N as f64 / 2.0) / (KS_N as f64 / 4.0).sqrt();
    assert!(z.abs() < 2.576, "sign imbalance z={z}");
}

#[test]
fn edge_positions_are_uniform_along_edge() {
    let (a, b) = (Coord::new(-1.0, 2.0), Coord::new(3.0, 5.0));
    let g = Geometry::Polyline(geo2vec::geometry::Polyline::new(vec![a, b]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let s = sample_edge(a, b, &g, 0.1, KS_N, &mut rng).unwrap();
    let dir = b - a;
    let len2 = dir.norm_squared();
    let mut t: Vec<f64> = s.iter().map(|x| (x.position - a).dot(dir) / len2).collect();
    let d = common::ks_statistic(&mut t, |x| x.clamp(0.0, 1.0));
    assert!(common::ks_p_value(d, KS_N) > ALPHA, "along-edge KS d={d}");
}

#[test]
fn vertex_clouds_are_isotropic_gaussian() {
    let v = Coord::new(0.3, -0.2);
    let g = Geometry::Point(v);
    let sigma = 0.2;
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let s = sample_vertex(v, &g, sigma, KS_N, &mut rng);
    for axis in 0..2 {
        let mut z: Vec<f64> = s
            .iter()
            .map(|x| if axis == 0 { x.position.x - v.x } else { x.position.y - v.y } / sigma)
            .collect();
        let d = common::ks_statistic(&mut z, common::normal_cdf);
        assert!(common::ks_p_value(d, KS_N) > ALPHA, "axis {axis} KS d={d}");
    }
}

#[test]
fn grid_is_inclusive_row_major() {
    let b = geo2vec::geometry::BBox::new(Coord::new(-1.0, 0.0), Coord::new(1.0, 4.0));
    let pts = grid_points(&b, 3);
    assert_eq!(pts.len(), 9);
    assert_eq!(pts[0], Coord::new(-1.0, 0.0));
    assert_eq!(pts[1], Coord::new(0.0, 0.0));
    assert_eq!(pts[3], Coord::new(-1.0, 2.0));
    assert_eq!(pts[8], Coord::new(1.0, 4.0));
}

#[test]
fn sigma_estimates_are_positive() {
    let d = synthesize(&SynthesisSpec::scattered(10, 0.3, 5)).unwrap();
    let canon = canonical_entities(&d, Mode::Location).unwrap();
    let s = estimate_sigma_loc(&canon, 5, 1000, 1).unwrap();
    assert!(s > 0.0 && s.is_finite());
    let shapes = canonical_entities(&d, Mode::Shape).unwrap();
    let s = estimate_sigma_shp(&shapes, 5, 1000, 1).unwrap();
    assert!(s > 0.0 && s.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samples_carry_exact_signed_distances(seed in any::<u64>(), eps in 1.0..40.0f64, sigma in 0.01..0.3f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let e = common::random_shape(&mut r, 0);
        let (canon, _) = geo2vec::geometry::normalize_shape(&e).unwrap();
        let set = build_training_set(&canon, &params(sigma, eps, seed), SampleDomain::Shape).unwrap();
        for s in set.iter() {
            prop_assert!(s.signed_distance.is_finite());
            prop_assert_eq!(s.signed_distance, sdf(s.position, &canon.geometry));
            if !canon.geometry.has_interior() {
                prop_assert!(s.signed_distance >= 0.0);
            }
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let e = common::random_shape(&mut r, 1);
        let p = params(0.1, 10.0, seed);
        let a = build_training_set(&e, &p, SampleDomain::Shape).unwrap();
        let b = build_training_set(&e, &p, SampleDomain::Shape).unwrap();
        prop_assert_eq!(&a, &b);
        let other = GeoEntity::new("other-id", e.geometry.clone());
        let c = build_training_set(&other, &p, SampleDomain::Shape).unwrap();
        prop_assert_ne!(&a.vertex, &c.vertex);
    }
}

#[test]
fn degenerate_edge_is_rejected() {
    let a = Coord::new(1.0, 1.0);
    let g = Geometry::Polygon(
        Polygon::from_rings(vec![Coord::new(0., 0.), Coord::new(2., 0.), Coord::new(1., 2.)], vec![]).unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        sample_edge(a, a, &g, 0.1, 3, &mut rng),
        Err(SamplingError::DegenerateEdge(..))
    ));
}
