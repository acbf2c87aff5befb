//! Plain-text graph format.
//!
//! ```text
//! # comment
//! p 3
//! 1 -> 2 0.5     directed, weight 0.5 (defaults to 1.0)
//! 2 -- 3         undirected
//! errors:        optional block, read by the SEM parser
//! 1 gaussian 1.0
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Pdag, WeightedDag};
use crate::error::{Error, Result};

/// A parsed graph document.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDocument {
    pub num_nodes: usize,
    pub directed: Vec<(usize, usize, f64)>,
    pub undirected: Vec<(usize, usize)>,
    /// Lines of the `errors:` block with their 1-based line numbers.
    pub error_lines: Vec<(usize, String)>,
}

impl GraphDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut num_nodes = None;
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        let mut error_lines = Vec::new();
        let mut in_errors = false;
        let mut seen_pairs = BTreeSet::new();

        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let Some(p) = num_nodes else {
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks.as_slice() {
                    ["p", n] => {
                        let n: usize = n.parse().map_err(|_| err(format!("bad node count `{n}`")))?;
                        if n == 0 {
                            return Err(err("node count must be positive".into()));
                        }
                        num_nodes = Some(n);
                        continue;
                    }
                    _ => return Err(err("expected `p <num_nodes>` header".into())),
                }
            };
            if line == "errors:" {
                in_errors = true;
                continue;
            }
            if in_errors {
                error_lines.push((line_no, line.to_string()));
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let node = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| err(format!("bad node `{s}`")))?;
                if v == 0 || v > p {
                    return Err(err(format!("node {v} outside 1..={p}")));
                }
                Ok(v)
            };
            let (a, b, kind, weight) = match toks.as_slice() {
                [a, "->", b] => (node(a)?, node(b)?, "->", 1.0),
                [a, "->", b, w] => {
                    let w: f64 = w.parse().map_err(|_| err(format!("bad weight `{w}`")))?;
                    (node(a)?, node(b)?, "->", w)
                }
                [a, "--", b] => (node(a)?, node(b)?, "--", 1.0),
                _ => return Err(err(format!("cannot parse edge `{line}`"))),
            };
            if a == b {
                return Err(err(format!("self-loop at {a}")));
            }
            if !seen_pairs.insert((a.min(b), a.max(b))) {
                return Err(err(format!("second edge between {a} and {b}")));
            }
            if kind == "->" {
                directed.push((a, b, weight));
            } else {
                undirected.push((a.min(b), a.max(b)));
            }
        }
        let num_nodes = num_nodes.ok_or(Error::Parse { line: 0, msg: "missing `p <num_nodes>` header".into() })?;
        Ok(Self { num_nodes, directed, undirected, error_lines })
    }

    pub fn to_pdag(&self) -> Result<Pdag> {
        Pdag::new(
            self.num_nodes,
            self.directed.iter().map(|&(a, b, _)| (a, b)),
            self.undirected.iter().copied(),
        )
    }

    pub fn to_weighted_dag(&self) -> Result<WeightedDag> {
        if let Some((a, b)) = self.undirected.first() {
            return Err(Error::InvalidGraph(format!("undirected edge {a} -- {b} in a weighted DAG")));
        }
        WeightedDag::new(self.num_nodes, &self.directed)
    }
}

pub fn write_pdag(g: &Pdag) -> String {
    let mut s = format!("p {}\n", g.num_nodes());
    for (a, b) in g.directed_edges() {
        let _ = writeln!(s, "{a} -> {b}");
    }
    for (a, b) in g.undirected_edges() {
        let _ = writeln!(s, "{a} -- {b}");
    }
    s
}

pub fn write_weighted_dag(g: &WeightedDag) -> String {
    let mut s = format!("p {}\n", g.num_nodes());
    for (a, b, w) in g.weighted_edges() {
        let _ = writeln!(s, "{a} -> {b} {w}");
    }
    s
}
