//! Text and JSON formats for interaction matrices and graphs.
//!
//! `.sym`: header `N nnz`, then `nnz` lines `i j w` with `0 <= i <= j < N`.
//! `.graph`: header `n m`, then `m` lines `u v`. Blank lines and lines starting
//! with `#` are ignored. The JSON mirror of `.sym` is
//! `{"dimension": N, "entries": [{"i": .., "j": .., "w": ..}, ..]}`; it may list
//! both `(i, j)` and `(j, i)` as long as the two weights agree.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::parse_rational;
use crate::graph::Graph;
use crate::model::{Entry, SymmetricInteraction};

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

/// `(line, i, j, weight text)` per stored entry.
type SymRecord<'a> = (usize, usize, usize, &'a str);
/// Upper-triangle entries with exact weights.
pub type RationalEntries = Vec<(usize, usize, BigRational)>;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header(path: &Path, line: Option<(usize, &str)>) -> Result<(usize, usize, usize)> {
    let (no, text) = line.ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(path, no, "header must be two integers"));
    }
    let a = fields[0]
        .parse()
        .map_err(|_| parse_err(path, no, format!("bad integer `{}`", fields[0])))?;
    let b = fields[1]
        .parse()
        .map_err(|_| parse_err(path, no, format!("bad integer `{}`", fields[1])))?;
    Ok((no, a, b))
}

fn index(path: &Path, no: usize, s: &str, dim: usize) -> Result<usize> {
    let v: usize = s
        .parse()
        .map_err(|_| parse_err(path, no, format!("bad index `{s}`")))?;
    if v >= dim {
        return Err(parse_err(
            path,
            no,
            format!("index {v} out of range for {dim}"),
        ));
    }
    Ok(v)
}

/// Raw `(line, i, j, weight text)` records of a `.sym` file.
fn sym_records<'a>(path: &Path, text: &'a str) -> Result<(usize, Vec<SymRecord<'a>>)> {
    let mut lines = content_lines(text);
    let (hline, dim, nnz) = header(path, lines.next())?;
    if dim == 0 {
        return Err(parse_err(path, hline, "dimension must be positive"));
    }
    let mut seen = BTreeMap::new();
    let mut out = Vec::with_capacity(nnz);
    for (no, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(path, no, "expected `i j w`"));
        }
        let i = index(path, no, f[0], dim)?;
        let j = index(path, no, f[1], dim)?;
        if i > j {
            return Err(parse_err(
                path,
                no,
                format!("entry ({i}, {j}) below the diagonal"),
            ));
        }
        if let Some(first) = seen.insert((i, j), no) {
            return Err(parse_err(
                path,
                no,
                format!("duplicate entry ({i}, {j}), first given on line {first}"),
            ));
        }
        out.push((no, i, j, f[2]));
    }
    if out.len() != nnz {
        return Err(parse_err(
            path,
            hline,
            format!("header declares {nnz} entries, found {}", out.len()),
        ));
    }
    Ok((dim, out))
}

pub fn parse_sym_str(path: &Path, text: &str) -> Result<SymmetricInteraction> {
    let (dim, records) = sym_records(path, text)?;
    let mut entries = Vec::with_capacity(records.len());
    for (no, i, j, w) in records {
        let w: f64 = w
            .parse()
            .map_err(|_| parse_err(path, no, format!("bad weight `{w}`")))?;
        if !w.is_finite() {
            return Err(parse_err(path, no, "weight must be finite"));
        }
        entries.push((i, j, w));
    }
    SymmetricInteraction::new(dim, entries)
}

/// Exact rational entries of a `.sym` file, decimals read without rounding.
pub fn parse_sym_exact(path: &Path) -> Result<(usize, RationalEntries)> {
    let text = read(path)?;
    let (dim, records) = sym_records(path, &text)?;
    let entries = records
        .into_iter()
        .map(|(no, i, j, w)| {
            parse_rational(w)
                .map(|r| (i, j, r))
                .map_err(|e| parse_err(path, no, e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok((dim, entries))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    dimension: usize,
    entries: Vec<Entry>,
}

pub fn parse_matrix_json_str(path: &Path, text: &str) -> Result<SymmetricInteraction> {
    let raw: MatrixJson =
        serde_json::from_str(text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    let mut merged: BTreeMap<(usize, usize), (f64, bool)> = BTreeMap::new();
    for (k, e) in raw.entries.iter().enumerate() {
        let key = (e.i.min(e.j), e.i.max(e.j));
        let lower = e.i > e.j;
        match merged.get(&key) {
            None => {
                merged.insert(key, (e.w, lower));
            }
            Some(&(w, was_lower)) if was_lower != lower => {
                if w != e.w {
                    return Err(Error::NonSymmetric {
                        i: e.i,
                        j: e.j,
                        a: w,
                        b: e.w,
                    });
                }
            }
            Some(_) => {
                return Err(parse_err(
                    path,
                    0,
                    format!("entry #{k}: duplicate entry ({}, {})", e.i, e.j),
                ));
            }
        }
    }
    SymmetricInteraction::new(
        raw.dimension,
        merged.into_iter().map(|((i, j), (w, _))| (i, j, w)),
    )
}

fn is_json(path: &Path, text: &str) -> bool {
    path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{')
}

/// Reads a matrix from `.sym` text or its JSON mirror.
pub fn parse_matrix(path: &Path) -> Result<SymmetricInteraction> {
    let text = read(path)?;
    if is_json(path, &text) {
        parse_matrix_json_str(path, &text)
    } else {
        parse_sym_str(path, &text)
    }
}

pub fn format_sym(j: &SymmetricInteraction) -> String {
    let mut s = format!("{} {}\n", j.dimension(), j.entries().len());
    for e in j.entries() {
        // `Display` for f64 is the shortest string that parses back exactly.
        let _ = writeln!(s, "{} {} {}", e.i, e.j, e.w);
    }
    s
}

pub fn write_sym(path: &Path, j: &SymmetricInteraction) -> Result<()> {
    fs::write(path, format_sym(j))?;
    Ok(())
}

pub fn write_matrix_json(path: &Path, j: &SymmetricInteraction) -> Result<()> {
    let doc = MatrixJson {
        dimension: j.dimension(),
        entries: j.entries().to_vec(),
    };
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn parse_graph_str(path: &Path, text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (hline, n, m) = header(path, lines.next())?;
    let mut seen = BTreeMap::new();
    let mut edges = Vec::with_capacity(m);
    for (no, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 2 {
            return Err(parse_err(path, no, "expected `u v`"));
        }
        let u = index(path, no, f[0], n)?;
        let v = index(path, no, f[1], n)?;
        if u == v {
            return Err(parse_err(path, no, format!("self-loop at {u}")));
        }
        if let Some(first) = seen.insert((u.min(v), u.max(v)), no) {
            return Err(parse_err(
                path,
                no,
                format!("repeated edge ({u}, {v}), first given on line {first}"),
            ));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(parse_err(
            path,
            hline,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    Graph::new(n, edges)
}

pub fn parse_graph(path: &Path) -> Result<Graph> {
    parse_graph_str(path, &read(path)?)
}

pub fn format_graph(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.vertex_count(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(s, "{u} {v}");
    }
    s
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    fs::write(path, format_graph(g))?;
    Ok(())
}

/// A named host graph: `k4`, `k33`, `prism`, `petersen`.
pub fn named_graph(name: &str) -> Result<Graph> {
    match name {
        "k4" => Ok(Graph::complete(4)),
        "k33" => Ok(Graph::complete_bipartite(3, 3)),
        "prism" => Ok(Graph::prism(3)),
        "petersen" => Ok(Graph::petersen()),
        other => Err(Error::InvalidParameter(format!("unknown graph `{other}`"))),
    }
}
