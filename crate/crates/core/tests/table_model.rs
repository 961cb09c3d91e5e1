mod common;

use std::collections::BTreeSet;

use common::{cell, plant_table, random_corpus, random_table, rng};
use proptest::prelude::*;
use rand::SeedableRng;
use tabner::corpus_io::{read_corpus, table_from_json, table_to_json, write_corpus};
use tabner::table::{compute_stats, entity_types_in};
use tabner::{Cell, Corpus, EntityType, Error, NerTag, Table, Token};

/// Mean, population std and excess kurtosis straight from the definitions.
fn oracle(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let kurt = if sd == 0.0 {
        0.0
    } else {
        xs.iter().map(|x| ((x - mean) / sd).powi(4)).sum::<f64>() / n - 3.0
    };
    (mean, sd, kurt)
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn sized_cell(n: usize) -> Cell {
    Cell::untagged((0..n).map(|i| Token::new(format!("w{i}")).unwrap()).collect())
}

#[test]
fn stats_of_constant_table() {
    let t = Table::new("t", vec![sized_cell(3), sized_cell(3)], vec![vec![sized_cell(3), sized_cell(3)]]).unwrap();
    let s = compute_stats(&Corpus::new(vec![t]).unwrap()).unwrap();
    assert_eq!(s.mean_tokens_per_cell, 3.0);
    assert_eq!(s.std_tokens_per_cell, 0.0);
    assert_eq!(s.kurtosis_tokens_per_cell, 0.0);
    assert_eq!(s.mean_columns, 2.0);
    assert_eq!(s.std_columns, 0.0);
}

#[test]
fn stats_of_heavy_tail() {
    // one column, header plus four body cells: token counts 1, 1, 1, 1, 20
    let counts = [1usize, 1, 1, 1, 20];
    let t = Table::new(
        "t",
        vec![sized_cell(counts[0])],
        counts[1..].iter().map(|&n| vec![sized_cell(n)]).collect(),
    )
    .unwrap();
    let s = compute_stats(&Corpus::new(vec![t]).unwrap()).unwrap();
    let xs: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    let (mean, sd, kurt) = oracle(&xs);
    assert!(close(s.mean_tokens_per_cell, mean));
    assert!(close(s.std_tokens_per_cell, sd));
    assert!(close(s.kurtosis_tokens_per_cell, kurt));
    // hand value: mean 4.8, the 20 dominates the fourth moment
    assert!(close(mean, 4.8));
    assert!(close(kurt, 0.25));
}

#[test]
fn stats_match_oracle_on_random_corpora() {
    let mut r = rng(12);
    for _ in 0..20 {
        let corpus = random_corpus(&mut r, 6, false);
        let s = compute_stats(&corpus).unwrap();
        let toks: Vec<f64> = corpus
            .tables()
            .iter()
            .flat_map(|t| t.cells().map(|(_, c)| c.len() as f64))
            .collect();
        let cols: Vec<f64> = corpus.tables().iter().map(|t| t.n_cols() as f64).collect();
        let (m, sd, k) = oracle(&toks);
        let (mc, sdc, _) = oracle(&cols);
        assert!(close(s.mean_tokens_per_cell, m));
        assert!(close(s.std_tokens_per_cell, sd));
        assert!(close(s.kurtosis_tokens_per_cell, k));
        assert!(close(s.mean_columns, mc));
        assert!(close(s.std_columns, sdc));
    }
}

#[test]
fn empty_corpus_has_no_stats() {
    assert!(matches!(compute_stats(&Corpus::default()), Err(Error::EmptyInput(_))));
}

#[test]
fn pressure_column_in_order() {
    let t = plant_table();
    let col = t.column(2).unwrap();
    let texts: Vec<String> = col.iter().map(|c| c.text()).collect();
    assert_eq!(texts, ["Design pressure", "16 bar", "16 bar", "2.5 bar"]);
    assert!(matches!(t.column(5), Err(Error::Range { .. })));
}

#[test]
fn entity_types_of_columns() {
    let t = plant_table();
    assert_eq!(entity_types_in(t.column(1).unwrap()), BTreeSet::from([EntityType::Eq]));
    assert_eq!(
        entity_types_in(t.column(2).unwrap()),
        BTreeSet::from([EntityType::Quant, EntityType::Uom])
    );
    assert!(entity_types_in(t.column(4).unwrap()).is_empty());
    let untagged = [Cell::from_text("Pump")];
    assert!(entity_types_in(&untagged).is_empty());
    assert!(entity_types_in(&[cell("pump", NerTag::Eq)]).contains(&EntityType::Eq));
}

#[test]
fn duplicate_ids_rejected() {
    let t = plant_table();
    assert!(matches!(Corpus::new(vec![t.clone(), t]), Err(Error::DuplicateId(_))));
}

#[test]
fn ragged_table_rejected() {
    let r = Table::new("bad", vec![Cell::from_text("a"), Cell::from_text("b")], vec![vec![Cell::from_text("x")]]);
    assert!(matches!(r, Err(Error::InvalidTable { .. })));
}

#[test]
fn json_absent_and_short_annotations() {
    let absent = r#"{"id": "t", "header": [["a"]], "body": [[["x", "y"]]],
        "tags": {"header": [["O"]], "body": [[null]]}}"#;
    let t = table_from_json(absent, "absent").unwrap();
    assert_eq!(t.header()[0].tags(), Some(&[NerTag::O][..]));
    assert_eq!(t.body()[0][0].tags(), None);

    let short = r#"{"id": "t", "header": [["a"]], "body": [[["x", "y"]]],
        "tags": {"body": [[["O"]]]}}"#;
    match table_from_json(short, "short.table.json") {
        Err(Error::Parse { location, .. }) => assert!(location.contains("short.table.json")),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn plant_table_round_trips_through_disk() {
    let corpus = Corpus::new(vec![plant_table()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&corpus, dir.path()).unwrap();
    assert_eq!(read_corpus(dir.path()).unwrap(), corpus);
}

fn arb_table() -> impl Strategy<Value = Table> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, tagged)| {
        let mut r = tabner::neural::Rng::seed_from_u64(seed);
        random_table(&mut r, "p", 5, 5, 4, tagged)
    })
}

proptest! {
    #[test]
    fn json_round_trip(t in arb_table()) {
        let s = table_to_json(&t).unwrap();
        prop_assert_eq!(table_from_json(&s, "p").unwrap(), t);
    }

    #[test]
    fn column_shape(t in arb_table()) {
        for j in 0..t.n_cols() {
            let col = t.column(j).unwrap();
            prop_assert_eq!(col.len(), t.n_rows() + 1);
            prop_assert_eq!(col[0], &t.header()[j]);
        }
    }

    #[test]
    fn entity_types_distribute_over_union(a in arb_table(), b in arb_table()) {
        let ca: Vec<&Cell> = a.cells().map(|(_, c)| c).collect();
        let cb: Vec<&Cell> = b.cells().map(|(_, c)| c).collect();
        let union = entity_types_in(ca.iter().chain(cb.iter()).copied());
        let mut sep = entity_types_in(ca.iter().copied());
        sep.extend(entity_types_in(cb.iter().copied()));
        prop_assert_eq!(union, sep);
    }
}
