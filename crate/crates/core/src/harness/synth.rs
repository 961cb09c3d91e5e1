//! Synthetic plant-style graphs and tagged corpora for desk-scale experiments.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};

use crate::augment::{AugmentConfig, HeaderPools, RdlTab, TagPattern};
use crate::error::{Error, Result};
use crate::neural::Rng;
use crate::rdl::{Predicate, RdlGraph, Triple};
use crate::table::{Cell, Corpus, NerTag, Table};
use crate::text::tokenize;

const BASES: &[(&str, &[&str])] = &[
    ("pump", &["pressure", "capacity", "flow rate", "power", "speed", "temperature"]),
    ("compressor", &["pressure", "flow rate", "power", "speed", "temperature"]),
    ("tank", &["capacity", "pressure", "temperature", "level", "diameter"]),
    ("vessel", &["capacity", "pressure", "temperature", "diameter"]),
    ("valve", &["pressure", "diameter", "temperature"]),
    ("heat exchanger", &["temperature", "pressure", "power", "flow rate"]),
    ("motor", &["power", "speed", "voltage", "current", "frequency"]),
    ("fan", &["flow rate", "power", "speed", "pressure"]),
    ("boiler", &["temperature", "pressure", "power", "capacity"]),
    ("turbine", &["power", "speed", "temperature", "pressure", "efficiency"]),
    ("filter", &["pressure", "flow rate", "diameter"]),
    ("separator", &["pressure", "capacity", "temperature"]),
    ("cooler", &["temperature", "power", "flow rate"]),
    ("mixer", &["power", "speed", "capacity"]),
    ("conveyor", &["speed", "length", "power", "mass"]),
    ("generator", &["power", "voltage", "frequency", "speed"]),
    ("transformer", &["voltage", "power", "current", "frequency"]),
    ("reactor", &["pressure", "temperature", "capacity", "diameter"]),
    ("blower", &["flow rate", "pressure", "power"]),
    ("crane", &["mass", "length", "power"]),
];

const MODIFIERS: &[&str] = &[
    "centrifugal", "vertical", "horizontal", "booster", "feed", "transfer", "main",
    "auxiliary", "cooling", "storage", "dosing", "emergency", "high pressure", "submersible",
    "rotary", "standby",
];

const UNITS: &[(&str, &[&str])] = &[
    ("pressure", &["bar", "psi", "kpa", "mpa"]),
    ("temperature", &["celsius", "kelvin", "fahrenheit"]),
    ("capacity", &["l", "m3", "gallon"]),
    ("flow rate", &["m3/h", "l/min", "kg/s"]),
    ("power", &["kw", "hp", "mw"]),
    ("speed", &["rpm"]),
    ("voltage", &["volt", "kv"]),
    ("current", &["amp"]),
    ("mass", &["kg", "tonne"]),
    ("length", &["mm", "m"]),
    ("diameter", &["mm", "inch"]),
    ("frequency", &["hz"]),
    ("level", &["%", "mm"]),
    ("efficiency", &["%"]),
];

const EQ_HEADERS: &[&str] = &["equipment", "equipment type", "description", "type", "item description"];
const TAG_HEADERS: &[&str] = &["tag", "tag no.", "kks", "item", "equipment id"];
const DISTRACTOR_HEADERS: &[&str] = &["remark", "status", "comment", "revision", "note"];
const LOREM: &[&str] = &[
    "lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing", "elit", "sed",
    "eiusmod", "tempor", "incididunt", "labore", "dolore", "magna", "aliqua", "veniam",
    "nostrud", "ullamco", "laboris",
];

fn node_id(prefix: &str, name: &str) -> String {
    format!("{prefix}:{}", name.replace(' ', "_"))
}

/// Triples for a plant-like graph with `n_equipment` equipment names.
///
/// The first names are the bare base names; further names combine a modifier
/// with a base, picked in a seed-dependent order. Every equipment inherits
/// the quantities of its base.
pub fn synthetic_graph(n_equipment: usize, seed: u64) -> Result<Vec<Triple>> {
    let max = BASES.len() * (MODIFIERS.len() + 1);
    if n_equipment == 0 || n_equipment > max {
        return Err(Error::Config(format!("n_equipment must lie in 1..={max}")));
    }
    let mut rng = Rng::seed_from_u64(seed);
    let mut combos: Vec<(usize, usize)> = (0..BASES.len())
        .flat_map(|b| (0..MODIFIERS.len()).map(move |m| (b, m)))
        .collect();
    combos.shuffle(&mut rng);

    let mut equipment: Vec<(String, usize)> = BASES
        .iter()
        .enumerate()
        .map(|(b, (name, _))| (name.to_string(), b))
        .take(n_equipment)
        .collect();
    for &(b, m) in combos.iter().take(n_equipment - equipment.len()) {
        equipment.push((format!("{} {}", MODIFIERS[m], BASES[b].0), b));
    }

    let mut triples = Vec::new();
    let mut used_quants = std::collections::BTreeSet::new();
    for (name, b) in &equipment {
        let id = node_id("eq", name);
        triples.push(Triple::new(&id, Predicate::Type, "EQ"));
        triples.push(Triple::new(&id, Predicate::Label, name));
        for q in BASES[*b].1 {
            triples.push(Triple::new(&id, Predicate::HasQuantity, node_id("q", q)));
            used_quants.insert(*q);
        }
    }
    let mut used_units = std::collections::BTreeSet::new();
    for (q, units) in UNITS {
        if !used_quants.contains(q) {
            continue;
        }
        let id = node_id("q", q);
        triples.push(Triple::new(&id, Predicate::Type, "QUANT"));
        triples.push(Triple::new(&id, Predicate::Label, *q));
        for u in *units {
            triples.push(Triple::new(&id, Predicate::HasUom, node_id("u", u)));
            used_units.insert(*u);
        }
    }
    for u in used_units {
        let id = node_id("u", u);
        triples.push(Triple::new(&id, Predicate::Type, "UoM"));
        triples.push(Triple::new(&id, Predicate::Label, u));
    }
    Ok(triples)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    pub uom_probability: f64,
    /// Inclusive range of distractor column counts.
    pub distractors: (usize, usize),
    pub numeric_value_range: (f64, f64),
    pub tag_pattern: TagPattern,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            uom_probability: 0.8,
            distractors: (1, 3),
            numeric_value_range: (0.0, 1000.0),
            tag_pattern: TagPattern::default(),
        }
    }
}

fn header_cells(names: &[&str]) -> Vec<Cell> {
    names
        .iter()
        .map(|h| Cell::uniform(tokenize(h), NerTag::O))
        .collect()
}

fn lorem_phrase(rng: &mut Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|_| LOREM[rng.random_range(0..LOREM.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn has_uom(table: &Table) -> bool {
    table
        .cells()
        .any(|(_, c)| c.tags().is_some_and(|t| t.contains(&NerTag::Uom)))
}

/// A fully tagged corpus of `n_tables` tables with `rows` body rows each.
///
/// Tables are built by the RDLTab construction without seed columns, so the
/// equipment, per-row quantity and tag columns follow the graph exactly, and
/// then receive 1–3 all-`O` distractor columns at random positions. Every
/// table holds at least one unit so all four entity classes occur.
pub fn generate_synthetic_corpus(graph: &RdlGraph, n_tables: usize, rows: usize, seed: u64) -> Result<Corpus> {
    generate_synthetic_corpus_with(graph, n_tables, rows, seed, &SynthOptions::default())
}

pub fn generate_synthetic_corpus_with(
    graph: &RdlGraph,
    n_tables: usize,
    rows: usize,
    seed: u64,
    opts: &SynthOptions,
) -> Result<Corpus> {
    if rows == 0 {
        return Err(Error::Config("rows must be at least 1".into()));
    }
    let (dlo, dhi) = opts.distractors;
    if dlo > dhi {
        return Err(Error::Config("distractor range is empty".into()));
    }
    let pools = HeaderPools {
        eq_headers: header_cells(EQ_HEADERS),
        tag_headers: header_cells(TAG_HEADERS),
    };
    let cfg = AugmentConfig {
        k: 0,
        n_samples: 1,
        numeric_value_range: opts.numeric_value_range,
        uom_probability: opts.uom_probability,
        seed,
        tag_pattern: opts.tag_pattern.clone(),
    };
    let can_have_uom = !graph.q2u().is_empty();
    let rdltab = RdlTab::with_pools(graph, pools, cfg)?;
    let template = Table::new(
        "template",
        vec![Cell::empty_tagged()],
        vec![vec![Cell::empty_tagged()]; rows],
    )?;

    let mut rng = Rng::seed_from_u64(seed);
    let width = n_tables.saturating_sub(1).to_string().len().max(4);
    let mut tables = Vec::with_capacity(n_tables);
    for t in 0..n_tables {
        let mut base = rdltab.generate(&template, &mut rng)?;
        let mut tries = 0;
        while can_have_uom && !has_uom(&base) && tries < 100 {
            base = rdltab.generate(&template, &mut rng)?;
            tries += 1;
        }

        let mut columns: Vec<Vec<Cell>> = (0..base.n_cols())
            .map(|j| base.column(j).map(|c| c.into_iter().cloned().collect()))
            .collect::<Result<_>>()?;
        let n_distractors = rng.random_range(dlo..=dhi);
        for _ in 0..n_distractors {
            let header = DISTRACTOR_HEADERS[rng.random_range(0..DISTRACTOR_HEADERS.len())];
            let phrases = [lorem_phrase(&mut rng), lorem_phrase(&mut rng)];
            let mut column = vec![Cell::uniform(tokenize(header), NerTag::O)];
            for _ in 0..rows {
                let cell = match rng.random_range(0..3) {
                    0 => Cell::empty_tagged(),
                    k => Cell::uniform(tokenize(&phrases[k - 1]), NerTag::O),
                };
                column.push(cell);
            }
            let at = rng.random_range(0..=columns.len());
            columns.insert(at, column);
        }

        let header = columns.iter().map(|c| c[0].clone()).collect();
        let body = (1..=rows)
            .map(|r| columns.iter().map(|c| c[r].clone()).collect())
            .collect();
        tables.push(Table::new(format!("synth-{t:0width$}"), header, body)?);
    }
    Corpus::new(tables)
}
