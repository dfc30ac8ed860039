mod common;

use std::collections::BTreeMap;

use geo2vec::autodecoder::read_checkpoint;
use geo2vec::geometry::GeometryKind;
use geo2vec::ingest::*;
use geo2vec::training::{read_embeddings, write_embeddings, EmbeddingSet, EmbeddingKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(seed: u64, n: usize) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let entities: Vec<_> = (0..n).map(|i| common::random_entity(&mut r, i)).collect();
    let mut labels = BTreeMap::new();
    for e in &entities {
        if r.random_bool(0.5) {
            labels.insert(e.id.clone(), r.random_range(-5i64..50));
        }
    }
    Dataset::new("random", entities, labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geojson_round_trips(seed in any::<u64>(), n in 1usize..12) {
        let d = random_dataset(seed, n);
        let text = to_geojson(&d);
        let back = parse_geojson(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(to_geojson(&back), text);
    }

    #[test]
    fn wkt_round_trips(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_geometry(&mut r);
        prop_assert_eq!(parse_wkt(&to_wkt(&g)).unwrap(), g);
    }
}

#[test]
fn synthesis_is_deterministic_and_sized() {
    let spec = SynthesisSpec::shapes(40, 12);
    let a = to_geojson(&synthesize(&spec).unwrap());
    let b = to_geojson(&synthesize(&spec).unwrap());
    assert_eq!(a, b);
    let d = parse_geojson(&a).unwrap();
    assert_eq!(d.len(), 200);
    let mut per_label = BTreeMap::new();
    for e in d.entities() {
        *per_label.entry(d.label(&e.id).unwrap()).or_insert(0) += 1;
        assert_eq!(e.kind(), GeometryKind::Polygon);
    }
    assert_eq!(per_label.len(), 5);
    assert!(per_label.values().all(|&c| c == 40));
    let other = to_geojson(&synthesize(&SynthesisSpec::shapes(40, 13)).unwrap());
    assert_ne!(a, other);
}

#[test]
fn family_vertex_counts_are_exact() {
    let d = synthesize(&SynthesisSpec::shapes(3, 1)).unwrap();
    for e in d.entities() {
        let fam = Family::ALL[d.label(&e.id).unwrap() as usize];
        assert_eq!(e.geometry.edge_count(), fam.template().len());
    }
}

#[test]
fn scattered_mixes_kinds() {
    let d = synthesize(&SynthesisSpec::scattered(20, 0.3, 4)).unwrap();
    for kind in [GeometryKind::Point, GeometryKind::Polyline, GeometryKind::Polygon] {
        assert_eq!(d.of_kind(kind).count(), 20);
    }
}

#[test]
fn spec_errors_name_the_field() {
    let mut spec = SynthesisSpec::shapes(4, 0);
    spec.scale_range = [5.0, 1.0];
    let err = synthesize(&spec).unwrap_err();
    assert!(err.to_string().contains("scale_range"), "{err}");
    spec = SynthesisSpec::shapes(4, 0);
    spec.classes.push("hexagon".into());
    assert!(synthesize(&spec).unwrap_err().to_string().contains("classes"));
    let json = serde_json::to_string(&SynthesisSpec::shapes(4, 0)).unwrap();
    let bad = json.replacen("{", "{\"colour\":1,", 1);
    assert!(serde_json::from_str::<SynthesisSpec>(&bad).unwrap_err().to_string().contains("colour"));
}

fn mutate(r: &mut ChaCha8Rng, seed: &[u8]) -> Vec<u8> {
    let mut b = seed.to_vec();
    for _ in 0..r.random_range(1..6) {
        match r.random_range(0..5) {
            0 if !b.is_empty() => {
                let i = r.random_range(0..b.len());
                b[i] = r.random();
            }
            1 if !b.is_empty() => {
                let i = r.random_range(0..b.len());
                b.remove(i);
            }
            2 => {
                let i = r.random_range(0..=b.len());
                b.insert(i, r.random());
            }
            3 if !b.is_empty() => {
                let i = r.random_range(0..b.len());
                b.truncate(i);
            }
            _ if b.len() > 1 => {
                let i = r.random_range(0..b.len());
                let j = r.random_range(0..b.len());
                b.swap(i, j);
            }
            _ => b.push(r.random()),
        }
    }
    b
}

const MUTATIONS: usize = 100_000;

#[test]
fn text_parsers_are_total() {
    let wkt_seeds = [
        "POINT (1 2)",
        "LINESTRING (0 0, 1 1, 2 0)",
        "POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 2 1, 2 2, 1 2, 1 1))",
        "MULTIPOLYGON (((0 0, 1 0, 1 1, 0 0)), ((5 5, 6 5, 6 6, 5 5)))",
    ];
    let geojson_seed = to_geojson(&random_dataset(3, 4));
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for i in 0..MUTATIONS {
        let w = mutate(&mut r, wkt_seeds[i % wkt_seeds.len()].as_bytes());
        if let Ok(g) = parse_wkt(&String::from_utf8_lossy(&w)) {
            assert_eq!(parse_wkt(&to_wkt(&g)).unwrap(), g);
        }
        if i % 4 == 0 {
            let g = mutate(&mut r, geojson_seed.as_bytes());
            if let Ok(d) = parse_geojson(&String::from_utf8_lossy(&g)) {
                assert_eq!(parse_geojson(&to_geojson(&d)).unwrap().entities(), d.entities());
            }
        }
    }
}

#[test]
fn binary_readers_are_total() {
    let mut set = EmbeddingSet::new(Some(EmbeddingKind::Shape), 3);
    set.insert("a", vec![0.1, 0.2, 0.3]).unwrap();
    set.insert("b", vec![1.0, -1.0, 0.0]).unwrap();
    let emb = write_embeddings(&set).unwrap();
    let d = synthesize(&SynthesisSpec::shapes(1, 2)).unwrap();
    let mut cfg = geo2vec::training::TrainConfig::shape(1);
    cfg.hidden = vec![4];
    cfg.latent_dim = 2;
    cfg.epochs = 1;
    cfg.freq_count = 2;
    let ckpt = geo2vec::autodecoder::write_checkpoint(&geo2vec::training::train(&d, &cfg).unwrap().checkpoint).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..MUTATIONS / 4 {
        let m = mutate(&mut r, &emb);
        if let Ok(s) = read_embeddings(&m) {
            assert_eq!(write_embeddings(&s).unwrap(), m);
        }
        let m = mutate(&mut r, &ckpt);
        if let Ok(c) = read_checkpoint(&m, None) {
            assert_eq!(geo2vec::autodecoder::write_checkpoint(&c).unwrap(), m);
        }
    }
}
