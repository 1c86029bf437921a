//! Causal graph types and their on-disk edge-list format.
//!
//! A graph over `n` variables is stored as a list of directed edges, each
//! optionally annotated with a lag and a weight (ground-truth graphs carry
//! both; predicted graphs may omit them). The file format is line-based:
//! a `# n=<N> d=<D>` header followed by one `cause,effect,lag,weight` line
//! per edge, with `-` marking an absent lag or weight.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic_write;

/// One directed edge `cause → effect`, optionally lagged and weighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalEdge {
    pub cause: usize,
    pub effect: usize,
    /// Time lag in steps; `None` when the producer does not estimate lags.
    pub lag: Option<usize>,
    /// Linear weight or score; `None` when unavailable.
    pub weight: Option<f64>,
}

impl CausalEdge {
    /// Unannotated edge `cause → effect`.
    pub fn bare(cause: usize, effect: usize) -> Self {
        CausalEdge {
            cause,
            effect,
            lag: None,
            weight: None,
        }
    }
}

/// A directed graph over `n` variables, stored as an edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGraph {
    n: usize,
    edges: Vec<CausalEdge>,
}

impl CausalGraph {
    /// Builds a graph, validating indices and rejecting duplicate pairs.
    pub fn new(n: usize, edges: Vec<CausalEdge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs n >= 1".into()));
        }
        let mut seen = HashSet::new();
        for e in &edges {
            if e.cause >= n || e.effect >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge {}->{} out of range for n={}",
                    e.cause, e.effect, n
                )));
            }
            if !seen.insert((e.cause, e.effect)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge {}->{}",
                    e.cause, e.effect
                )));
            }
        }
        Ok(CausalGraph { n, edges })
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn d(&self) -> usize {
        self.edges.len()
    }

    /// Edge list in insertion order.
    pub fn edges(&self) -> &[CausalEdge] {
        &self.edges
    }

    /// Boolean adjacency view: entry `(cause, effect)` is true per edge.
    pub fn adjacency(&self) -> AdjacencyMatrix {
        let mut adj = AdjacencyMatrix::new(self.n);
        for e in &self.edges {
            adj.set(e.cause, e.effect, true);
        }
        adj
    }

    /// Renders the graph in the edge-list file format.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("# n={} d={}\n", self.n, self.edges.len());
        for e in &self.edges {
            let lag = e.lag.map_or("-".to_string(), |l| l.to_string());
            let weight = e.weight.map_or("-".to_string(), |w| format!("{w}"));
            out.push_str(&format!("{},{},{},{}\n", e.cause, e.effect, lag, weight));
        }
        out
    }

    /// Parses the edge-list format. `path` labels errors only.
    pub fn from_file_str(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(idx, l)| (idx + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (header_no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let (n, d) = parse_header(header)
            .ok_or_else(|| Error::parse(path, header_no, "expected header '# n=<N> d=<D>'"))?;
        if n == 0 {
            return Err(Error::parse(path, header_no, "header requires n >= 1"));
        }

        let mut edges = Vec::with_capacity(d);
        for (line_no, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected 'cause,effect,lag,weight', found {:?}", line),
                ));
            }
            let cause: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad cause index {:?}", fields[0])))?;
            let effect: usize = fields[1]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad effect index {:?}", fields[1])))?;
            let lag = if fields[2] == "-" {
                None
            } else {
                Some(fields[2].parse().map_err(|_| {
                    Error::parse(path, line_no, format!("bad lag {:?}", fields[2]))
                })?)
            };
            let weight = if fields[3] == "-" {
                None
            } else {
                Some(fields[3].parse().map_err(|_| {
                    Error::parse(path, line_no, format!("bad weight {:?}", fields[3]))
                })?)
            };
            edges.push(CausalEdge {
                cause,
                effect,
                lag,
                weight,
            });
        }
        if edges.len() != d {
            return Err(Error::parse(
                path,
                header_no,
                format!("header claims d={} but {} edges follow", d, edges.len()),
            ));
        }
        CausalGraph::new(n, edges).map_err(|e| Error::parse(path, header_no, e.to_string()))
    }

    /// Reads a graph file.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_str(&text, path)
    }

    /// Writes the graph file atomically.
    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_file_string().as_bytes())
    }
}

/// Parses `# n=<N> d=<D>`, tolerating extra whitespace.
fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix('#')?.trim();
    let mut n = None;
    let mut d = None;
    for token in rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("n=") {
            n = v.parse().ok();
        } else if let Some(v) = token.strip_prefix("d=") {
            d = v.parse().ok();
        }
    }
    Some((n?, d?))
}

/// Dense boolean adjacency matrix; `get(i, j)` means an edge `i → j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    data: Vec<bool>,
}

impl AdjacencyMatrix {
    /// All-false matrix of side `n`.
    pub fn new(n: usize) -> Self {
        AdjacencyMatrix {
            n,
            data: vec![false; n * n],
        }
    }

    /// Matrix side length.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.n + j] = v;
    }

    /// Number of true entries.
    pub fn edge_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Iterates present edges as `(cause, effect)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(idx, _)| (idx / n, idx % n))
    }
}
