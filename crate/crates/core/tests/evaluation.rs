mod common;

use geo2vec::evaluation::*;
use geo2vec::geometry::{boundary_samples, inside_even_odd, Coord, GeoEntity, Geometry, Transform};
use geo2vec::ingest::{synthesize, Dataset, SynthesisSpec};
use geo2vec::training::{canonical_entities, EmbeddingSet, TrainConfig};
use geo2vec::Mode;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn orient(a: Coord, b: Coord, c: Coord) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(p: Coord, a: Coord, b: Coord) -> bool {
    orient(a, b, p).abs() <= 1e-12
        && p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

fn cross(a: Coord, b: Coord, c: Coord, d: Coord) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

fn boundary_contact(a: &Geometry, b: &Geometry) -> bool {
    match (a, b) {
        (Geometry::Point(p), Geometry::Point(q)) => p == q,
        (Geometry::Point(p), g) | (g, Geometry::Point(p)) => g.edges().iter().any(|&(u, v)| on_segment(*p, u, v)),
        _ => {
            let eb = b.edges();
            a.edges().iter().any(|&(u, v)| eb.iter().any(|&(s, t)| cross(u, v, s, t)))
        }
    }
}

/// Share of `g`'s dense boundary that lies inside `by`: 0, partial or all.
fn dense_cover(g: &Geometry, by: &Geometry, n: usize) -> (usize, usize) {
    if !by.has_interior() {
        return (0, 1);
    }
    let pts = boundary_samples(g, n);
    (pts.iter().filter(|&&p| inside_even_odd(p, by)).count(), pts.len())
}

fn brute_label(a: &GeoEntity, b: &GeoEntity, n: usize) -> TopoLabel {
    let full = if boundary_contact(&a.geometry, &b.geometry) {
        TopoLabel::TouchesOrCrosses
    } else {
        let (ib, nb) = dense_cover(&b.geometry, &a.geometry, n);
        let (ia, na) = dense_cover(&a.geometry, &b.geometry, n);
        if ib == nb {
            TopoLabel::Contains
        } else if ia == na {
            TopoLabel::Within
        } else if ia == 0 && ib == 0 {
            TopoLabel::Disjoint
        } else {
            TopoLabel::TouchesOrCrosses
        }
    };
    match PairKind::of(a.kind(), b.kind()) {
        Some(k) if k.is_binary() && full != TopoLabel::Disjoint => TopoLabel::Intersects,
        _ => full,
    }
}

#[test]
fn topology_agrees_with_brute_force_on_500_pairs() {
    let d = synthesize(&SynthesisSpec::scattered(30, 0.5, 8)).unwrap();
    let es = canonical_entities(&d, Mode::Location).unwrap();
    let mut near = Vec::new();
    let mut far = Vec::new();
    for i in 0..es.len() {
        for j in 0..es.len() {
            if i == j || PairKind::of(es[i].kind(), es[j].kind()).is_none() {
                continue;
            }
            if es[i].geometry.bbox().distance(&es[j].geometry.bbox()) == 0.0 {
                near.push((i, j));
            } else {
                far.push((i, j));
            }
        }
    }
    let mut r = ChaCha8Rng::seed_from_u64(3);
    near.shuffle(&mut r);
    far.shuffle(&mut r);
    let take_near = near.len().min(350);
    let pairs: Vec<(usize, usize)> = near.iter().take(take_near).chain(far.iter().take(500 - take_near)).copied().collect();
    assert_eq!(pairs.len(), 500);
    let mut seen = std::collections::BTreeSet::new();
    for (i, j) in pairs {
        let got = topology_ground_truth(&es[i], &es[j]);
        assert_eq!(got, brute_label(&es[i], &es[j], 4000), "{} vs {}", es[i].id, es[j].id);
        assert!(PairKind::of(es[i].kind(), es[j].kind()).unwrap().vocabulary().contains(&got));
        seen.insert(got);
    }
    assert!(seen.len() >= 4, "{seen:?}");
}

#[test]
fn nested_and_shared_edge_fixtures() {
    let c = Coord::new;
    let sq = |id: &str, x0: f64, y0: f64, s: f64| {
        GeoEntity::new(
            id,
            Geometry::Polygon(
                geo2vec::geometry::Polygon::from_rings(vec![c(x0, y0), c(x0 + s, y0), c(x0 + s, y0 + s), c(x0, y0 + s)], vec![])
                    .unwrap(),
            ),
        )
    };
    let big = sq("a", 0.0, 0.0, 4.0);
    let small = sq("b", 1.0, 1.0, 1.0);
    assert_eq!(topology_ground_truth(&big, &small), TopoLabel::Contains);
    assert_eq!(topology_ground_truth(&small, &big), TopoLabel::Within);
    assert_eq!(topology_ground_truth(&big, &sq("c", 4.0, 1.0, 2.0)), TopoLabel::TouchesOrCrosses);
    assert_eq!(topology_ground_truth(&big, &sq("d", 6.0, 0.0, 1.0)), TopoLabel::Disjoint);
}

fn random_embeddings(ids: impl Iterator<Item = String>, dim: usize, seed: u64) -> EmbeddingSet {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut set = EmbeddingSet::new(None, dim);
    for id in ids {
        set.insert(id, (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
    }
    set
}

fn fast_probe(seed: u64) -> ProbeConfig {
    ProbeConfig {
        epochs: 40,
        ..ProbeConfig::with_seed(seed)
    }
}

#[test]
fn probes_leave_embeddings_untouched() {
    let d = synthesize(&SynthesisSpec::shapes(12, 1)).unwrap();
    let set = random_embeddings(d.ids().map(String::from), 6, 2);
    let before = geo2vec::training::write_embeddings(&set).unwrap();
    task_shape_classification(&d, &set, &fast_probe(1)).unwrap();
    task_edge_count(&d, &set, &fast_probe(1)).unwrap();
    assert_eq!(geo2vec::training::write_embeddings(&set).unwrap(), before);
}

#[test]
fn uninformative_embeddings_score_near_chance() {
    let d = synthesize(&SynthesisSpec::shapes(40, 5)).unwrap();
    let set = random_embeddings(d.ids().map(String::from), 8, 6);
    let r = task_shape_classification(&d, &set, &fast_probe(2)).unwrap();
    assert!((r.value - 0.2).abs() <= 0.15, "acc {}", r.value);
    assert_eq!(r.baseline, 0.2);
}

#[test]
fn label_permutation_destroys_signal() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let n = 400;
    let x = ndarray::Array2::from_shape_simple_fn((n, 4), || r.random_range(-1.0..1.0));
    let labels: Vec<usize> = (0..n).map(|i| usize::from(x[[i, 0]] > 0.0)).collect();
    let t = Targets::Classes {
        labels: labels.clone(),
        n_classes: 2,
    };
    let informed = train_probe(x.view(), &t, &fast_probe(3)).unwrap();
    let mut shuffled = labels;
    shuffled.shuffle(&mut r);
    let control = train_probe(
        x.view(),
        &Targets::Classes {
            labels: shuffled,
            n_classes: 2,
        },
        &fast_probe(3),
    )
    .unwrap();
    assert!(informed.value >= 0.9, "{}", informed.value);
    assert!((control.value - 0.5).abs() <= 0.12, "{}", control.value);
}

#[test]
fn missing_ids_are_listed() {
    let d = synthesize(&SynthesisSpec::shapes(10, 1)).unwrap();
    let set = random_embeddings(d.ids().skip(2).map(String::from), 4, 1);
    match task_shape_classification(&d, &set, &fast_probe(1)) {
        Err(EvalError::MissingIds(ids)) => assert_eq!(ids.len(), 2),
        other => panic!("{other:?}"),
    }
}

fn scaled(d: &Dataset, s: f64) -> Dataset {
    d.transformed(Transform {
        center: Coord::ORIGIN,
        scale: s,
    })
}

#[test]
fn length_targets_live_in_canonical_space() {
    let d = synthesize(&SynthesisSpec::scattered(15, 0.0, 2)).unwrap();
    let big = scaled(&d, 2.0);
    let lens = |d: &Dataset| -> Vec<f64> {
        canonical_entities(d, Mode::Location)
            .unwrap()
            .iter()
            .filter(|e| matches!(e.geometry, Geometry::Polyline(_)))
            .map(|e| e.geometry.perimeter())
            .collect()
    };
    let raw = |d: &Dataset| -> Vec<f64> {
        d.entities()
            .iter()
            .filter(|e| matches!(e.geometry, Geometry::Polyline(_)))
            .map(|e| e.geometry.perimeter())
            .collect()
    };
    for (a, b) in lens(&d).iter().zip(lens(&big)) {
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
    for (a, b) in raw(&d).iter().zip(raw(&big)) {
        assert!((2.0 * a - b).abs() <= 1e-9 * b);
    }
}

#[test]
fn distance_pairs_cover_requested_kinds_and_contact() {
    let d = synthesize(&SynthesisSpec::scattered(40, 0.4, 3)).unwrap();
    let es = canonical_entities(&d, Mode::Location).unwrap();
    let kinds = [PairKind::PtPg, PairKind::PlPg, PairKind::PgPg];
    let pairs = distance_pairs(&es, &kinds, 900, 7).unwrap();
    assert_eq!(pairs.len(), 900);
    for k in kinds {
        assert_eq!(pairs.iter().filter(|p| p.kind == k).count(), 300);
    }
    assert!(pairs.iter().any(|p| p.distance == 0.0));
    for p in &pairs {
        assert_ne!(p.a, p.b);
        assert_eq!(PairKind::of(es[p.a].kind(), es[p.b].kind()), Some(p.kind));
        let back = geo2vec::geometry::min_entity_distance(&es[p.b].geometry, &es[p.a].geometry);
        assert_eq!(back, p.distance);
    }
    assert_eq!(pairs, distance_pairs(&es, &kinds, 900, 7).unwrap());
}

#[test]
fn topology_pairs_are_balanced() {
    let d = synthesize(&SynthesisSpec::scattered(40, 0.4, 3)).unwrap();
    let es = canonical_entities(&d, Mode::Location).unwrap();
    let pairs = topology_pairs(&es, PairKind::PtPg, 400, 1).unwrap();
    let pos = pairs.iter().filter(|p| p.label == TopoLabel::Intersects).count();
    let neg = pairs.len() - pos;
    assert!(pos >= MIN_CLASS_EXAMPLES && pos <= 200, "{pos}");
    assert_eq!(neg, 200);
    let again = topology_pairs(&es, PairKind::PtPg, 2 * pos, 1).unwrap();
    let pos2 = again.iter().filter(|p| p.label == TopoLabel::Intersects).count();
    assert_eq!(pos2, again.len() - pos2);
    for p in &pairs {
        assert_eq!(topology_ground_truth(&es[p.a], &es[p.b]), p.label);
    }
}

#[test]
fn budget_below_grid_is_infeasible() {
    let d = synthesize(&SynthesisSpec::shapes(4, 1)).unwrap();
    let cfg = TrainConfig::shape(1);
    let err = sample_budget_sweep(&d, &[63], &cfg, &fast_probe(1)).unwrap_err();
    assert!(matches!(err, EvalError::InfeasibleBudget { budget: 63, .. }), "{err}");
    let err = sample_budget_sweep(&d, &[70], &cfg, &fast_probe(1)).unwrap_err();
    assert!(matches!(err, EvalError::InfeasibleBudget { budget: 70, .. }), "{err}");
}

#[test]
fn sweep_hits_budgets() {
    let d = synthesize(&SynthesisSpec::shapes(10, 2)).unwrap();
    let cfg = TrainConfig {
        hidden: vec![16],
        latent_dim: 4,
        epochs: 1,
        ..TrainConfig::shape(1)
    };
    let rows = sample_budget_sweep(&d, &[100, 144], &cfg, &fast_probe(1)).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert!((row.mean_samples - row.budget as f64).abs() <= 2.0, "{row:?}");
    }
    assert!(rows[0].epsilon < rows[1].epsilon);
}
