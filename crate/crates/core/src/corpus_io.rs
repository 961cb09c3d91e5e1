//! Corpus directories: one `<id>.table.json` file per table.
//!
//! ```json
//! {"id": "t1",
//!  "header": [["Design", "pressure"]],
//!  "body": [[["10", "bar"]]],
//!  "tags": {"header": [["O", "I-QUANT"]], "body": [[["O", "I-UoM"]]]}}
//! ```
//!
//! A tag entry of `null` (or `[]` for a non-empty cell) leaves that cell
//! unannotated; a missing `tags.header` / `tags.body` leaves the whole part
//! unannotated. Tables are read back in file-name order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Cell, Corpus, NerTag, Table, Token};

pub const TABLE_SUFFIX: &str = ".table.json";

type TagCell = Option<Vec<String>>;

#[derive(Serialize, Deserialize)]
struct TableFile {
    id: String,
    header: Vec<Vec<String>>,
    body: Vec<Vec<Vec<String>>>,
    #[serde(default)]
    tags: TagsFile,
}

#[derive(Default, Serialize, Deserialize)]
struct TagsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    header: Option<Vec<TagCell>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<Vec<Vec<TagCell>>>,
}

fn cell_tokens(c: &Cell) -> Vec<String> {
    c.tokens().iter().map(|t| t.as_str().to_owned()).collect()
}

fn cell_tags(c: &Cell) -> TagCell {
    c.tags()
        .map(|tags| tags.iter().map(|t| t.as_str().to_owned()).collect())
}

/// Serializes one table to its JSON file content (LF terminated).
pub fn table_to_json(table: &Table) -> Result<String> {
    let header_tags: Vec<TagCell> = table.header().iter().map(cell_tags).collect();
    let body_tags: Vec<Vec<TagCell>> = table
        .body()
        .iter()
        .map(|r| r.iter().map(cell_tags).collect())
        .collect();
    let file = TableFile {
        id: table.id().to_owned(),
        header: table.header().iter().map(cell_tokens).collect(),
        body: table
            .body()
            .iter()
            .map(|r| r.iter().map(cell_tokens).collect())
            .collect(),
        tags: TagsFile {
            header: header_tags
                .iter()
                .any(Option::is_some)
                .then_some(header_tags),
            body: body_tags
                .iter()
                .flatten()
                .any(Option::is_some)
                .then_some(body_tags),
        },
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

fn build_cell(
    source: &str,
    row: usize,
    col: usize,
    tokens: Vec<String>,
    tags: Option<&TagCell>,
) -> Result<Cell> {
    let loc = || format!("{source}: row {row}, column {col}");
    let tokens = tokens
        .into_iter()
        .map(Token::new)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::parse(loc(), e.to_string()))?;
    let tags = match tags {
        None | Some(None) => None,
        Some(Some(t)) if t.is_empty() && !tokens.is_empty() => None,
        Some(Some(t)) => {
            if t.len() != tokens.len() {
                return Err(Error::parse(
                    loc(),
                    format!("{} tags for {} tokens", t.len(), tokens.len()),
                ));
            }
            Some(
                t.iter()
                    .map(|s| s.parse::<NerTag>())
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::parse(loc(), e.to_string()))?,
            )
        }
    };
    Cell::new(tokens, tags).map_err(|e| Error::parse(loc(), e.to_string()))
}

/// Parses one table file. `source` names the file in error messages.
pub fn table_from_json(content: &str, source: &str) -> Result<Table> {
    let file: TableFile = serde_json::from_str(content).map_err(|e| {
        Error::parse(
            format!("{source}:{}:{}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let TableFile {
        id,
        header,
        body,
        tags,
    } = file;

    if let Some(h) = &tags.header {
        if h.len() != header.len() {
            return Err(Error::parse(
                format!("{source}: row 0"),
                format!("{} header tag cells for {} header cells", h.len(), header.len()),
            ));
        }
    }
    if let Some(b) = &tags.body {
        if b.len() != body.len() {
            return Err(Error::parse(
                source,
                format!("{} body tag rows for {} body rows", b.len(), body.len()),
            ));
        }
    }

    let header_cells = header
        .into_iter()
        .enumerate()
        .map(|(j, toks)| build_cell(source, 0, j, toks, tags.header.as_ref().map(|h| &h[j])))
        .collect::<Result<Vec<_>>>()?;
    let mut body_cells = Vec::with_capacity(body.len());
    for (i, row) in body.into_iter().enumerate() {
        let tag_row = tags.body.as_ref().map(|b| &b[i]);
        if let Some(tr) = tag_row {
            if tr.len() != row.len() {
                return Err(Error::parse(
                    format!("{source}: row {}", i + 1),
                    format!("{} tag cells for {} cells", tr.len(), row.len()),
                ));
            }
        }
        let cells = row
            .into_iter()
            .enumerate()
            .map(|(j, toks)| build_cell(source, i + 1, j, toks, tag_row.map(|r| &r[j])))
            .collect::<Result<Vec<_>>>()?;
        body_cells.push(cells);
    }
    Table::new(id, header_cells, body_cells).map_err(|e| Error::parse(source, e.to_string()))
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\']) {
        return Err(Error::Config(format!(
            "table id {id:?} cannot be used as a file name"
        )));
    }
    Ok(())
}

/// Writes every table of `corpus` into directory `dir`, creating it if needed.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for table in corpus.tables() {
        check_id(table.id())?;
        let path = dir.join(format!("{}{TABLE_SUFFIX}", table.id()));
        fs::write(&path, table_to_json(table)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads all `*.table.json` files of `dir`, sorted by file name.
pub fn read_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(TABLE_SUFFIX) {
            files.push((stem.to_owned(), entry.path()));
        }
    }
    files.sort();
    let mut tables = Vec::with_capacity(files.len());
    for (stem, path) in files {
        let content = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let source = path.display().to_string();
        let table = table_from_json(&content, &source)?;
        if table.id() != stem {
            return Err(Error::parse(
                source,
                format!("id {:?} does not match file name", table.id()),
            ));
        }
        tables.push(table);
    }
    Corpus::new(tables)
}
