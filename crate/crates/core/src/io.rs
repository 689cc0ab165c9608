//! Whitespace-separated edge lists, as distributed by KONECT and SNAP.
//!
//! Each non-comment line holds `u v` or `u v w`; further columns (such as
//! timestamps) are ignored. Lines starting with a comment prefix are
//! skipped. Vertex ids are integers, or arbitrary tokens, in which case they
//! are numbered in order of first appearance and kept in a label dictionary.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph_with, DuplicatePolicy, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indexing {
    Zero,
    One,
    /// One-based iff the smallest id seen is 1 (so 0 never appears).
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeListFormat {
    pub comment_prefixes: Vec<char>,
    pub indexing: Indexing,
    /// Read a third column as the edge weight; otherwise every weight is 1.
    pub weighted: bool,
    pub duplicates: DuplicatePolicy,
}

impl Default for EdgeListFormat {
    fn default() -> Self {
        Self {
            comment_prefixes: vec!['%', '#'],
            indexing: Indexing::Auto,
            weighted: false,
            duplicates: DuplicatePolicy::Reject,
        }
    }
}

/// How internal vertex ids map back to the ids in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexLabels {
    Numeric { one_based: bool },
    Named(Vec<String>),
}

impl VertexLabels {
    pub fn label(&self, v: usize) -> String {
        match self {
            VertexLabels::Numeric { one_based } => (v + usize::from(*one_based)).to_string(),
            VertexLabels::Named(names) => names[v].clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedEdgeList {
    pub graph: WeightedGraph,
    pub labels: VertexLabels,
}

pub fn parse_edge_list(path: &Path, fmt: &EdgeListFormat) -> Result<ParsedEdgeList> {
    parse_edge_list_from(File::open(path)?, fmt)
}

pub fn parse_edge_list_str(text: &str, fmt: &EdgeListFormat) -> Result<ParsedEdgeList> {
    parse_edge_list_from(text.as_bytes(), fmt)
}

struct RawEdge<'a> {
    line: usize,
    u: &'a str,
    v: &'a str,
    w: f64,
}

pub fn parse_edge_list_from<R: Read>(reader: R, fmt: &EdgeListFormat) -> Result<ParsedEdgeList> {
    let lines: Vec<String> = BufReader::new(reader).lines().collect::<std::io::Result<_>>()?;
    let header_n = lines.first().and_then(|l| parse_header(l));
    let mut raw = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(fmt.comment_prefixes.as_slice()) {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(u), Some(v)) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two vertex ids, got '{trimmed}'"),
            });
        };
        let w = if fmt.weighted {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "missing weight column".into(),
            })?;
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid weight '{tok}'"),
            })?
        } else {
            1.0
        };
        raw.push(RawEdge { line: line_no, u, v, w });
    }

    let numeric: Option<Vec<(u64, u64)>> = raw
        .iter()
        .map(|e| Some((e.u.parse::<u64>().ok()?, e.v.parse::<u64>().ok()?)))
        .collect();

    let (edges, n, labels) = match numeric {
        Some(ids) => {
            let min = ids.iter().map(|&(a, b)| a.min(b)).min();
            let one_based = match fmt.indexing {
                Indexing::Zero => false,
                Indexing::One => true,
                Indexing::Auto => header_n.is_none() && min == Some(1),
            };
            let shift = u64::from(one_based);
            let mut edges = Vec::with_capacity(ids.len());
            let mut n = if one_based { 0 } else { header_n.unwrap_or(0) };
            for (e, &(a, b)) in raw.iter().zip(&ids) {
                if a < shift || b < shift {
                    return Err(Error::Parse {
                        line: e.line,
                        message: "vertex id 0 in a one-based file".into(),
                    });
                }
                let (a, b) = ((a - shift) as usize, (b - shift) as usize);
                n = n.max(a + 1).max(b + 1);
                edges.push((a, b, e.w));
            }
            (edges, n, VertexLabels::Numeric { one_based })
        }
        None => {
            let mut index: HashMap<&str, usize> = HashMap::new();
            let mut names: Vec<String> = Vec::new();
            let mut edges = Vec::with_capacity(raw.len());
            for e in &raw {
                let mut ends = [0usize; 2];
                for (slot, tok) in ends.iter_mut().zip([e.u, e.v]) {
                    *slot = *index.entry(tok).or_insert_with(|| {
                        names.push(tok.to_string());
                        names.len() - 1
                    });
                }
                edges.push((ends[0], ends[1], e.w));
            }
            let n = names.len();
            (edges, n, VertexLabels::Named(names))
        }
    };
    let graph = build_graph_with(&edges, n, fmt.duplicates)?;
    Ok(ParsedEdgeList { graph, labels })
}

const HEADER_TAG: &str = "% walkcent edge list:";

/// Vertex count recorded by [`write_edge_list`], so that isolated trailing
/// vertices survive a round trip. The header also pins zero-based ids.
fn parse_header(line: &str) -> Option<usize> {
    let rest = line.trim().strip_prefix(HEADER_TAG)?;
    let mut tokens = rest.split_whitespace();
    let n = tokens.next()?.parse().ok()?;
    (tokens.next()? == "vertices").then_some(n)
}

/// Write the canonical edge list, zero-based, preceded by a comment header
/// recording the vertex count. Weights are written only when some weight
/// differs from 1.
pub fn write_edge_list<W: Write>(graph: &WeightedGraph, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let weighted = graph.edges().iter().any(|e| e.2 != 1.0);
    writeln!(
        out,
        "{HEADER_TAG} {} vertices {} edges {}",
        graph.n(),
        graph.m(),
        if weighted { "weighted" } else { "unweighted" }
    )?;
    for &(u, v, w) in graph.edges() {
        if weighted {
            writeln!(out, "{u} {v} {w}")?;
        } else {
            writeln!(out, "{u} {v}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_edge_list_file(graph: &WeightedGraph, path: &Path) -> Result<()> {
    write_edge_list(graph, File::create(path)?)
}
