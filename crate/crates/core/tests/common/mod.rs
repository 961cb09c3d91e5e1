#![allow(dead_code)]

use rand::{Rng as _, SeedableRng};
use tabner::neural::Rng;
use tabner::rdl::RdlGraph;
use tabner::text::tokenize;
use tabner::{Cell, Corpus, NerTag, Table, Token};

/// Pump with pressure and capacity; pressure in bar or psi, capacity in l or m3.
pub const MINI_GRAPH: &str = "\
eq:pump\ttype\tEQ
eq:pump\tlabel\tPump
eq:pump\thasQuantity\tq:pressure
eq:pump\thasQuantity\tq:capacity
q:pressure\ttype\tQUANT
q:pressure\tlabel\tpressure
q:pressure\thasUoM\tu:bar
q:pressure\thasUoM\tu:psi
q:capacity\ttype\tQUANT
q:capacity\tlabel\tcapacity
q:capacity\thasUoM\tu:l
q:capacity\thasUoM\tu:m3
u:bar\ttype\tUoM
u:bar\tlabel\tbar
u:psi\ttype\tUoM
u:psi\tlabel\tpsi
u:l\ttype\tUoM
u:l\tlabel\tl
u:m3\ttype\tUoM
u:m3\tlabel\tm3
";

pub fn mini_graph() -> RdlGraph {
    RdlGraph::parse(MINI_GRAPH, "mini").unwrap()
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn toks(text: &str) -> Vec<Token> {
    tokenize(text)
}

/// Cell whose tokens all carry `tag`.
pub fn cell(text: &str, tag: NerTag) -> Cell {
    Cell::uniform(tokenize(text), tag)
}

/// Cell with explicit per-token tags.
pub fn cell_tags(text: &str, tags: &[NerTag]) -> Cell {
    Cell::new(tokenize(text), Some(tags.to_vec())).unwrap()
}

/// A small plant equipment sheet: tag, description, design pressure, capacity, remark.
pub fn plant_table() -> Table {
    use NerTag::*;
    let header = vec![
        cell("Tag", O),
        cell("Description", O),
        cell_tags("Design pressure", &[O, Quant]),
        cell("Capacity", Quant),
        cell("Remark", O),
    ];
    let body = vec![
        vec![
            cell("P-101A", Tag),
            cell_tags("Centrifugal Pump", &[O, Eq]),
            cell_tags("16 bar", &[O, Uom]),
            cell_tags("40 m3", &[O, Uom, Uom]),
            cell("spare", O),
        ],
        vec![
            cell("P-101B", Tag),
            cell_tags("Centrifugal Pump", &[O, Eq]),
            cell_tags("16 bar", &[O, Uom]),
            cell_tags("40 m3", &[O, Uom, Uom]),
            Cell::empty_tagged(),
        ],
        vec![
            cell("T-200", Tag),
            cell("Tank", Eq),
            cell_tags("2.5 bar", &[O, Uom]),
            cell_tags("900 l", &[O, Uom]),
            cell("new", O),
        ],
    ];
    Table::new("plant", header, body).unwrap()
}

const WORDS: &[&str] = &["pump", "tank", "bar", "12", "a", "x9", "valve", "psi", "-", "kw"];

/// Random rectangular table with up to `max_rows` body rows, `max_cols`
/// columns and `max_tok` tokens per cell; tagged at random when `tagged`.
pub fn random_table(rng: &mut Rng, id: &str, max_rows: usize, max_cols: usize, max_tok: usize, tagged: bool) -> Table {
    let rows = rng.random_range(1..=max_rows);
    let cols = rng.random_range(1..=max_cols);
    let cell = |rng: &mut Rng| {
        let n = rng.random_range(0..=max_tok);
        let tokens: Vec<Token> = (0..n)
            .map(|_| Token::new(WORDS[rng.random_range(0..WORDS.len())]).unwrap())
            .collect();
        if tagged {
            let tags = (0..n)
                .map(|_| NerTag::from_index(rng.random_range(0..NerTag::COUNT)).unwrap())
                .collect();
            Cell::new(tokens, Some(tags)).unwrap()
        } else {
            Cell::untagged(tokens)
        }
    };
    let header = (0..cols).map(|_| cell(rng)).collect();
    let body = (0..rows).map(|_| (0..cols).map(|_| cell(rng)).collect()).collect();
    Table::new(id, header, body).unwrap()
}

pub fn random_corpus(rng: &mut Rng, n: usize, tagged: bool) -> Corpus {
    Corpus::new(
        (0..n)
            .map(|i| random_table(rng, &format!("t{i:03}"), 4, 4, 3, tagged))
            .collect(),
    )
    .unwrap()
}

/// Per-tensor result of comparing analytic and central-difference gradients.
pub struct GradCheck {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    pub worst_abs: f64,
}

/// Central finite differences of the eval-mode loss for every parameter,
/// compared with `backward` at `rel` relative tolerance and `abs` floor.
pub fn grad_check(
    model: &tabner::neural::EncoderModel,
    input: &tabner::encoding::LinearizedInput,
    eps: f64,
    rel: f64,
    abs: f64,
) -> Vec<GradCheck> {
    use tabner::neural::{backward, cross_entropy, forward};
    let (_, grads) = backward(model, input).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grads
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.data.to_vec()))
        .collect();
    let loss = |m: &tabner::neural::EncoderModel| cross_entropy(&forward(m, input).unwrap(), &input.tags);
    let mut m = model.clone();
    let mut out = Vec::new();
    for (k, (name, a)) in analytic.iter().enumerate() {
        let mut res = GradCheck {
            name: name.clone(),
            checked: 0,
            failures: 0,
            worst_abs: 0.0,
        };
        for idx in 0..a.len() {
            let orig = m.params.tensors_mut()[k][idx];
            m.params.tensors_mut()[k][idx] = orig + eps;
            let up = loss(&m);
            m.params.tensors_mut()[k][idx] = orig - eps;
            let down = loss(&m);
            m.params.tensors_mut()[k][idx] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let diff = (numeric - a[idx]).abs();
            res.checked += 1;
            res.worst_abs = res.worst_abs.max(diff);
            if diff > abs && diff > rel * numeric.abs().max(a[idx].abs()) {
                res.failures += 1;
            }
        }
        out.push(res);
    }
    out
}

/// Space-joined normalized text of the tokens of `c` tagged `tag`.
pub fn text_of(c: &Cell, tag: NerTag) -> String {
    c.tokens()
        .iter()
        .zip(c.tags().unwrap())
        .filter(|(_, t)| **t == tag)
        .map(|(tok, _)| tok.normalized())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Graph name in the same tokenized, space-joined form as `text_of`.
pub fn canon(name: &str) -> String {
    tabner::text::tokenize(name)
        .iter()
        .map(|t| t.normalized())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn applicable(g: &tabner::rdl::RdlGraph, eq: &str, quant: &str, uom: Option<&str>) -> bool {
    g.e2q().iter().any(|(e, qs)| {
        canon(e) == eq
            && qs.iter().any(|q| {
                canon(q) == quant
                    && uom.is_none_or(|u| g.q2u().get(q).is_some_and(|us| us.iter().any(|x| canon(x) == u)))
            })
    })
}

/// One-cell table whose tokens carry `tags` (or no annotation for `None`).
pub fn tag_table(id: &str, tags: Option<&[NerTag]>, n: usize) -> Table {
    let tokens: Vec<Token> = (0..n).map(|i| Token::new(format!("w{i}")).unwrap()).collect();
    let c = Cell::new(tokens, tags.map(<[NerTag]>::to_vec)).unwrap();
    Table::new(id, vec![c], vec![vec![Cell::empty_tagged()]]).unwrap()
}

pub struct MetricCase {
    pub name: &'static str,
    pub gold: Corpus,
    pub pred: Corpus,
    /// Hand-counted micro precision, recall and F1.
    pub expected: (f64, f64, f64),
}

fn pair(gold: &[&[NerTag]], pred: &[&[NerTag]]) -> (Corpus, Corpus) {
    let build = |tags: &[&[NerTag]]| {
        Corpus::new(
            tags.iter()
                .enumerate()
                .map(|(i, t)| tag_table(&format!("c{i}"), Some(t), t.len()))
                .collect(),
        )
        .unwrap()
    };
    (build(gold), build(pred))
}

/// Five constructed evaluation cases with hand-counted scores.
pub fn metric_cases() -> Vec<MetricCase> {
    use NerTag::*;
    let mut out = Vec::new();

    // 4 gold EQ tokens; one missed, two O tokens predicted EQ: tp 3, fp 2, fn 1
    let (gold, pred) = pair(
        &[&[Eq, Eq, O, O, Eq, O, Eq, O, O, O]],
        &[&[Eq, Eq, Eq, O, O, O, Eq, Eq, O, O]],
    );
    out.push(MetricCase { name: "eq 2 fp 1 fn", gold, pred, expected: (3.0 / 5.0, 3.0 / 4.0, 6.0 / 9.0) });

    let gold = Corpus::new(vec![plant_table()]).unwrap();
    out.push(MetricCase { name: "identity", pred: gold.clone(), gold, expected: (1.0, 1.0, 1.0) });

    let gold = Corpus::new(vec![plant_table()]).unwrap();
    let mut all_o = plant_table();
    let n = all_o.n_rows();
    let cols = all_o.n_cols();
    let mut rows = vec![all_o.header().to_vec()];
    rows.extend(all_o.body().iter().cloned());
    let rows: Vec<Vec<Cell>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|c| Cell::uniform(c.tokens().to_vec(), O)).collect())
        .collect();
    all_o = Table::new("plant", rows[0].clone(), rows[1..=n].to_vec()).unwrap();
    assert_eq!(all_o.n_cols(), cols);
    // no predictions: precision is 0/0, taken as 1
    out.push(MetricCase { name: "all O", gold, pred: Corpus::new(vec![all_o]).unwrap(), expected: (1.0, 0.0, 0.0) });

    // QUANT token predicted as UoM: tp 2, fp 1, fn 1
    let (gold, pred) = pair(&[&[Quant, Quant, Uom, O]], &[&[Quant, Uom, Uom, O]]);
    out.push(MetricCase { name: "quant as uom", gold, pred, expected: (2.0 / 3.0, 2.0 / 3.0, 4.0 / 6.0) });

    // two tables; an unannotated gold cell is not scored: tp 1, fp 1, fn 1
    let gold = Corpus::new(vec![
        tag_table("a", Some(&[Tag, O]), 2),
        tag_table("b", None, 3),
        tag_table("c", Some(&[Eq]), 1),
    ])
    .unwrap();
    let pred = Corpus::new(vec![
        tag_table("a", Some(&[Tag, Tag]), 2),
        tag_table("b", Some(&[Eq, Eq, Eq]), 3),
        tag_table("c", Some(&[O]), 1),
    ])
    .unwrap();
    out.push(MetricCase { name: "multi table", gold, pred, expected: (0.5, 0.5, 0.5) });
    out
}

pub const TABNER: &str = env!("CARGO_BIN_EXE_tabner");

pub fn tabner(args: &[&str]) -> std::process::Output {
    std::process::Command::new(TABNER).args(args).output().expect("spawn tabner")
}

pub fn tabner_ok(args: &[&str]) -> std::process::Output {
    let out = tabner(args);
    assert!(
        out.status.success(),
        "tabner {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// File name to content, recursively.
pub fn dir_bytes(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(name, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Writes a graph and a synthetic corpus through the CLI; returns their paths.
pub fn cli_fixture(dir: &std::path::Path, tables: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let graph = dir.join("graph.tsv");
    let corpus = dir.join("corpus");
    tabner_ok(&["synth-graph", "--equipment", "20", "--seed", "4", graph.to_str().unwrap()]);
    tabner_ok(&[
        "synth",
        "--triples",
        graph.to_str().unwrap(),
        "--tables",
        &tables.to_string(),
        "--rows",
        "3",
        "--seed",
        "8",
        corpus.to_str().unwrap(),
    ]);
    (graph, corpus)
}

/// A small three-fold training config writing into `out`.
pub fn cli_train_config(dir: &std::path::Path, graph: &std::path::Path, corpus: &std::path::Path, out: &str, seed: u64) -> std::path::PathBuf {
    let cfg = tabner::harness::ExperimentConfig {
        folds: 3,
        aug_mode: tabner::harness::AugMode::Rdltab,
        grid_search: false,
        corpus: Some(corpus.to_owned()),
        triples: Some(graph.to_owned()),
        output_dir: Some(dir.join(out)),
        encoder: tabner::neural::EncoderConfig {
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            ..Default::default()
        },
        train: tabner::neural::TrainConfig {
            max_epochs: 3,
            optimizer: tabner::neural::OptimizerKind::Adam,
            ..Default::default()
        },
        seed,
        ..Default::default()
    };
    let path = dir.join(format!("{out}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}
