//! Edge-list format: one `i j` line per undirected edge with 0-based node
//! indices and `i < j`. Blank lines and lines starting with `#` are ignored.
//! A leading `# nodes N` comment fixes the node count, so isolated trailing
//! nodes survive a round trip.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{Graph, GraphError};

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn write_edges<W: Write>(out: W, graph: &Graph) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# nodes {}", graph.n())?;
    for (a, b) in graph.edges() {
        writeln!(out, "{a} {b}")?;
    }
    out.flush()
}

/// Reads an edge list. Without a `# nodes` header (or `n` override) the node
/// count is one more than the largest index.
pub fn read_edges<R: BufRead>(input: R, n: Option<usize>) -> Result<Graph, EdgeListError> {
    let mut declared = None;
    let mut edges = Vec::new();
    let mut max_node = None;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("nodes") {
                let value = parts.next().and_then(|v| v.parse().ok()).ok_or(EdgeListError::Parse {
                    line: lineno,
                    message: "malformed node count".into(),
                })?;
                declared = Some(value);
            }
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let mut node = || -> Result<usize, EdgeListError> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| EdgeListError::Parse {
                    line: lineno,
                    message: format!("expected two node indices, got {trimmed:?}"),
                })
        };
        let (a, b) = (node()?, node()?);
        if parts.next().is_some() {
            return Err(EdgeListError::Parse {
                line: lineno,
                message: "trailing fields".into(),
            });
        }
        max_node = max_node.max(Some(a.max(b)));
        edges.push((a, b));
    }
    let n = n.or(declared).unwrap_or(max_node.map_or(0, |m| m + 1));
    Ok(Graph::from_edges(n, &edges)?)
}

pub fn save_edges(path: &Path, graph: &Graph) -> io::Result<()> {
    write_edges(File::create(path)?, graph)
}

pub fn load_edges(path: &Path, n: Option<usize>) -> Result<Graph, EdgeListError> {
    read_edges(BufReader::new(File::open(path)?), n)
}
