mod common;

use std::collections::BTreeSet;

use common::{mini_graph, rng, MINI_GRAPH};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use tabner::harness::synthetic_graph;
use tabner::rdl::{load_graph, parse_triples, write_triples, RdlGraph};
use tabner::Error;

#[test]
fn mini_graph_dictionaries() {
    let g = mini_graph();
    assert!(g.eq_names().contains("pump"), "labels are normalized");
    assert!(g.e2q()["pump"].is_superset(&BTreeSet::from(["pressure".to_string(), "capacity".to_string()])));
    assert!(g.q2u()["capacity"].contains("l"));
    let mut r = rng(0);
    for _ in 0..200 {
        let q = g.sample_quantity("pump", &mut r).unwrap();
        assert!(q == "pressure" || q == "capacity");
    }
}

#[test]
fn empty_file_loads_as_empty_graph() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.tsv");
    std::fs::write(&p, "").unwrap();
    let g = load_graph(&p).unwrap();
    assert!(g.is_empty());
    assert!(g.sample_equipment(&mut rng(0)).is_err());
}

#[test]
fn edge_to_untyped_quantity_is_inconsistent() {
    let s = "eq:pump\ttype\tEQ\neq:pump\thasQuantity\tq:flow\n";
    assert!(matches!(RdlGraph::parse(s, "g"), Err(Error::Consistency(_))));
}

#[test]
fn malformed_line_reports_its_location() {
    match parse_triples("eq:pump\ttype\tEQ\nbroken line\n", "g.tsv") {
        Err(Error::Parse { location, .. }) => assert_eq!(location, "g.tsv:2"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn sampling_errors_for_unknown_names() {
    let g = mini_graph();
    assert!(matches!(g.sample_quantity("tank", &mut rng(0)), Err(Error::NoQuantity(_))));
    assert!(matches!(g.sample_uom("speed", &mut rng(0)), Err(Error::NoUnit(_))));
}

#[test]
fn singleton_set_always_sampled() {
    let s = "eq:a\ttype\tEQ\neq:a\thasQuantity\tq:b\nq:b\ttype\tQUANT\nq:b\thasUoM\tu:c\nu:c\ttype\tUoM\n";
    let g = RdlGraph::parse(s, "g").unwrap();
    let mut r = rng(1);
    for _ in 0..100 {
        assert_eq!(g.sample_equipment(&mut r).unwrap(), "eq:a");
        assert_eq!(g.sample_quantity("eq:a", &mut r).unwrap(), "q:b");
        assert_eq!(g.sample_uom("q:b", &mut r).unwrap(), "u:c");
    }
}

#[test]
fn four_way_sampling_is_uniform() {
    let s = "eq:p\ttype\tEQ\n".to_string()
        + &["a", "b", "c", "d"]
            .iter()
            .map(|q| format!("eq:p\thasQuantity\tq:{q}\nq:{q}\ttype\tQUANT\n"))
            .collect::<String>();
    let g = RdlGraph::parse(&s, "g").unwrap();
    let mut r = rng(2024);
    let mut counts = std::collections::BTreeMap::new();
    let n = 10_000;
    for _ in 0..n {
        *counts.entry(g.sample_quantity("eq:p", &mut r).unwrap().to_string()).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 4);
    let expected = n as f64 / 4.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // chi-square, 3 degrees of freedom, upper 1% point
    assert!(chi2 < 11.345, "chi2 = {chi2}");
}

#[test]
fn dictionary_keys_and_values_are_typed_names() {
    let g = RdlGraph::from_triples(&synthetic_graph(50, 3).unwrap()).unwrap();
    for (e, qs) in g.e2q() {
        assert!(g.eq_names().contains(e));
        assert!(qs.iter().all(|q| g.quant_names().contains(q)));
    }
    for (q, us) in g.q2u() {
        assert!(g.quant_names().contains(q));
        assert!(us.iter().all(|u| g.uom_names().contains(u)));
    }
    for name in g.surface_names() {
        assert!(!name.is_empty() && name.trim() == name);
    }
    assert_eq!(g.eq_names().len(), 50);
}

#[test]
fn samples_stay_inside_dictionaries() {
    let g = RdlGraph::from_triples(&synthetic_graph(50, 4).unwrap()).unwrap();
    let mut r = rng(5);
    for _ in 0..5_000 {
        let e = g.sample_equipment_with_quantity(&mut r).unwrap();
        let q = g.sample_quantity(e, &mut r).unwrap();
        assert!(g.is_applicable_quantity(e, q));
        if let Ok(u) = g.sample_uom(q, &mut r) {
            assert!(g.is_applicable_unit(q, u));
        }
    }
}

#[test]
fn triples_round_trip_through_text() {
    let t = parse_triples(MINI_GRAPH, "mini").unwrap();
    assert_eq!(parse_triples(&write_triples(&t), "again").unwrap(), t);
}

proptest! {
    #[test]
    fn line_order_does_not_matter(seed in any::<u64>()) {
        let mut lines: Vec<&str> = MINI_GRAPH.lines().collect();
        lines.shuffle(&mut rng(seed));
        let shuffled = lines.join("\n");
        prop_assert_eq!(RdlGraph::parse(&shuffled, "s").unwrap(), mini_graph());
    }
}
