//! Equipment, quantity and unit dictionaries read from a triple file.
//!
//! The file is UTF-8 TSV with `subject<TAB>predicate<TAB>object` per line and
//! `#` comments. Predicates are `type` (object one of `EQ`, `QUANT`, `UoM`),
//! `label`, `hasQuantity` and `hasUoM`. A node's surface names are its labels,
//! or its id when it has none; surface names are lowercased with internal
//! whitespace collapsed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::neural::Rng;
use crate::text::normalize_surface;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Type,
    Label,
    HasQuantity,
    HasUom,
}

impl Predicate {
    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::Type => "type",
            Predicate::Label => "label",
            Predicate::HasQuantity => "hasQuantity",
            Predicate::HasUom => "hasUoM",
        }
    }
}

impl FromStr for Predicate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "type" => Ok(Predicate::Type),
            "label" => Ok(Predicate::Label),
            "hasQuantity" => Ok(Predicate::HasQuantity),
            "hasUoM" => Ok(Predicate::HasUom),
            other => Err(format!("unknown predicate {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeType {
    Eq,
    Quant,
    Uom,
}

impl NodeType {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Eq => "EQ",
            NodeType::Quant => "QUANT",
            NodeType::Uom => "UoM",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: Predicate, object: impl Into<String>) -> Self {
        Triple {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.subject, self.predicate.as_str(), self.object)
    }
}

/// Parses triple TSV. `source` names the input in error messages.
pub fn parse_triples(content: &str, source: &str) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (n, line) in content.lines().enumerate() {
        let loc = || format!("{source}:{}", n + 1);
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(loc(), format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(loc(), "empty field"));
        }
        let predicate: Predicate = fields[1].parse().map_err(|m: String| Error::parse(loc(), m))?;
        if predicate == Predicate::Type && !matches!(fields[2], "EQ" | "QUANT" | "UoM") {
            return Err(Error::parse(loc(), format!("unknown node type {:?}", fields[2])));
        }
        out.push(Triple::new(fields[0], predicate, fields[2]));
    }
    Ok(out)
}

pub fn write_triples(triples: &[Triple]) -> String {
    let mut s = String::new();
    for t in triples {
        s.push_str(&t.to_string());
        s.push('\n');
    }
    s
}

/// Surface-name sets per entity type plus the equipment→quantities and
/// quantity→units applicability dictionaries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RdlGraph {
    eq_names: BTreeSet<String>,
    quant_names: BTreeSet<String>,
    uom_names: BTreeSet<String>,
    e2q: BTreeMap<String, BTreeSet<String>>,
    q2u: BTreeMap<String, BTreeSet<String>>,
    /// Equipment names that have quantities, for sampling.
    eq_with_quant: Vec<String>,
}

impl RdlGraph {
    pub fn from_triples(triples: &[Triple]) -> Result<Self> {
        let mut types: BTreeMap<&str, BTreeSet<NodeType>> = BTreeMap::new();
        let mut labels: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for t in triples {
            match t.predicate {
                Predicate::Type => {
                    let ty = match t.object.as_str() {
                        "EQ" => NodeType::Eq,
                        "QUANT" => NodeType::Quant,
                        "UoM" => NodeType::Uom,
                        other => {
                            return Err(Error::parse("triples", format!("unknown node type {other:?}")))
                        }
                    };
                    types.entry(&t.subject).or_default().insert(ty);
                }
                Predicate::Label => {
                    let name = normalize_surface(&t.object);
                    if name.is_empty() {
                        return Err(Error::Consistency(format!("empty label on {:?}", t.subject)));
                    }
                    labels.entry(&t.subject).or_default().insert(name);
                }
                _ => {}
            }
        }
        let names_of = |node: &str| -> BTreeSet<String> {
            labels
                .get(node)
                .cloned()
                .unwrap_or_else(|| BTreeSet::from([normalize_surface(node)]))
        };
        let has_type = |node: &str, ty: NodeType| types.get(node).is_some_and(|s| s.contains(&ty));

        let mut g = RdlGraph::default();
        for (node, tys) in &types {
            for ty in tys {
                let set = match ty {
                    NodeType::Eq => &mut g.eq_names,
                    NodeType::Quant => &mut g.quant_names,
                    NodeType::Uom => &mut g.uom_names,
                };
                set.extend(names_of(node));
            }
        }
        for t in triples {
            let (from, to, map) = match t.predicate {
                Predicate::HasQuantity => (NodeType::Eq, NodeType::Quant, &mut g.e2q),
                Predicate::HasUom => (NodeType::Quant, NodeType::Uom, &mut g.q2u),
                _ => continue,
            };
            if !has_type(&t.subject, from) {
                return Err(Error::Consistency(format!(
                    "{} edge from {:?}, which is not typed {}",
                    t.predicate.as_str(),
                    t.subject,
                    from.as_str()
                )));
            }
            if !has_type(&t.object, to) {
                return Err(Error::Consistency(format!(
                    "{} edge to {:?}, which is not typed {}",
                    t.predicate.as_str(),
                    t.object,
                    to.as_str()
                )));
            }
            let targets = names_of(&t.object);
            for name in names_of(&t.subject) {
                map.entry(name).or_default().extend(targets.iter().cloned());
            }
        }
        g.eq_with_quant = g
            .eq_names
            .iter()
            .filter(|n| g.e2q.contains_key(*n))
            .cloned()
            .collect();
        for eq in g.equipment_without_quantities() {
            log::debug!("equipment {eq:?} has no quantities");
        }
        Ok(g)
    }

    pub fn parse(content: &str, source: &str) -> Result<Self> {
        RdlGraph::from_triples(&parse_triples(content, source)?)
    }

    pub fn eq_names(&self) -> &BTreeSet<String> {
        &self.eq_names
    }

    pub fn quant_names(&self) -> &BTreeSet<String> {
        &self.quant_names
    }

    pub fn uom_names(&self) -> &BTreeSet<String> {
        &self.uom_names
    }

    pub fn e2q(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.e2q
    }

    pub fn q2u(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.q2u
    }

    pub fn is_empty(&self) -> bool {
        self.eq_names.is_empty() && self.quant_names.is_empty() && self.uom_names.is_empty()
    }

    /// Equipment kept in `eq_names` but unusable for augmentation.
    pub fn equipment_without_quantities(&self) -> impl Iterator<Item = &str> {
        self.eq_names
            .iter()
            .filter(|n| !self.e2q.contains_key(*n))
            .map(String::as_str)
    }

    /// Equipment that has at least one applicable quantity.
    pub fn equipment_with_quantities(&self) -> &[String] {
        &self.eq_with_quant
    }

    pub fn is_applicable_quantity(&self, eq: &str, quant: &str) -> bool {
        self.e2q.get(eq).is_some_and(|s| s.contains(quant))
    }

    pub fn is_applicable_unit(&self, quant: &str, uom: &str) -> bool {
        self.q2u.get(quant).is_some_and(|s| s.contains(uom))
    }

    /// Uniform over all equipment surface names.
    pub fn sample_equipment(&self, rng: &mut Rng) -> Result<&str> {
        sample_set(&self.eq_names, rng)
            .ok_or_else(|| Error::Precondition("graph has no equipment".into()))
    }

    /// Uniform over equipment with at least one quantity.
    pub fn sample_equipment_with_quantity(&self, rng: &mut Rng) -> Result<&str> {
        if self.eq_with_quant.is_empty() {
            return Err(Error::Precondition("no equipment in the graph has quantities".into()));
        }
        Ok(&self.eq_with_quant[rng.random_range(0..self.eq_with_quant.len())])
    }

    /// Uniform over `e2q[eq]`.
    pub fn sample_quantity(&self, eq: &str, rng: &mut Rng) -> Result<&str> {
        self.e2q
            .get(eq)
            .and_then(|s| sample_set(s, rng))
            .ok_or_else(|| Error::NoQuantity(eq.to_owned()))
    }

    /// Uniform over `q2u[quant]`.
    pub fn sample_uom(&self, quant: &str, rng: &mut Rng) -> Result<&str> {
        self.q2u
            .get(quant)
            .and_then(|s| sample_set(s, rng))
            .ok_or_else(|| Error::NoUnit(quant.to_owned()))
    }

    /// Sub-graph keeping only the listed equipment; quantities and units are unchanged.
    pub fn restrict_equipment<'a>(&self, keep: impl IntoIterator<Item = &'a str>) -> RdlGraph {
        let keep: BTreeSet<&str> = keep.into_iter().collect();
        let mut g = self.clone();
        g.eq_names.retain(|n| keep.contains(n.as_str()));
        g.e2q.retain(|n, _| keep.contains(n.as_str()));
        g.eq_with_quant.retain(|n| keep.contains(n.as_str()));
        g
    }

    /// Every surface name of every type.
    pub fn surface_names(&self) -> impl Iterator<Item = &str> {
        self.eq_names
            .iter()
            .chain(&self.quant_names)
            .chain(&self.uom_names)
            .map(String::as_str)
    }
}

fn sample_set<'a>(set: &'a BTreeSet<String>, rng: &mut Rng) -> Option<&'a str> {
    if set.is_empty() {
        return None;
    }
    let i = rng.random_range(0..set.len());
    set.iter().nth(i).map(String::as_str)
}

/// Loads a triple file. An empty file yields an empty graph.
pub fn load_graph(path: impl AsRef<Path>) -> Result<RdlGraph> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RdlGraph::parse(&content, &path.display().to_string())
}
