//! Graphs over nodes `1..=p`: DAGs, weighted DAGs, partially directed graphs
//! and the Markov-equivalence machinery built on them.
//!
//! Internally every graph is an adjacency bitmap indexed from zero; all public
//! methods take and return 1-based node labels.

mod chordal;
mod enumerate;
mod local;
mod meek;
pub mod text;

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use chordal::{is_chordal, undirected_components, UndirectedGraph};
pub use enumerate::{enumerate_equivalence_class, enumerate_equivalence_class_capped, DEFAULT_ENUMERATION_CAP};
pub use local::{locally_valid_parent_sets, locally_valid_undirected_subsets};
pub use meek::{dag_to_cpdag, is_meek_closed, meek_closure};

/// An unshielded collider `a → c ← b` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VStructure {
    pub a: usize,
    pub c: usize,
    pub b: usize,
}

fn check_node(v: usize, p: usize) -> Result<()> {
    if v == 0 || v > p {
        Err(Error::NodeOutOfRange { node: v, p })
    } else {
        Ok(())
    }
}

/// A directed acyclic graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    p: usize,
    adj: Vec<bool>,
}

impl Dag {
    /// Builds a DAG from 1-based directed edges. Rejects self-loops, repeated
    /// or antiparallel edges, and directed cycles.
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut adj = vec![false; p * p];
        for (a, b) in edges {
            check_node(a, p)?;
            check_node(b, p)?;
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
            let (i, j) = (a - 1, b - 1);
            if adj[i * p + j] || adj[j * p + i] {
                return Err(Error::InvalidGraph(format!("more than one edge between {a} and {b}")));
            }
            adj[i * p + j] = true;
        }
        let dag = Dag { p, adj };
        dag.try_topological_order()?;
        Ok(dag)
    }

    /// Graph with `p` nodes and no edges.
    pub fn empty(p: usize) -> Self {
        Dag { p, adj: vec![false; p * p] }
    }

    pub fn num_nodes(&self) -> usize {
        self.p
    }

    pub(crate) fn has(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.p + j]
    }

    /// Whether `a → b` is an edge.
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a >= 1 && b >= 1 && a <= self.p && b <= self.p && self.has(a - 1, b - 1)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// All edges `(a, b)` meaning `a → b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let p = self.p;
        let mut out = Vec::new();
        for i in 0..p {
            for j in 0..p {
                if self.has(i, j) {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    pub fn parents(&self, v: usize) -> Result<BTreeSet<usize>> {
        check_node(v, self.p)?;
        Ok((0..self.p).filter(|&u| self.has(u, v - 1)).map(|u| u + 1).collect())
    }

    pub fn children(&self, v: usize) -> Result<BTreeSet<usize>> {
        check_node(v, self.p)?;
        Ok((0..self.p).filter(|&u| self.has(v - 1, u)).map(|u| u + 1).collect())
    }

    /// Nodes reachable from `v` by a directed path, including `v` itself.
    pub fn descendants(&self, v: usize) -> Result<BTreeSet<usize>> {
        check_node(v, self.p)?;
        let mut seen = vec![false; self.p];
        let mut queue = VecDeque::from([v - 1]);
        seen[v - 1] = true;
        while let Some(u) = queue.pop_front() {
            for w in 0..self.p {
                if self.has(u, w) && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok((0..self.p).filter(|&u| seen[u]).map(|u| u + 1).collect())
    }

    /// Nodes with no directed path from `v`. `v` is its own descendant and is
    /// therefore excluded.
    pub fn non_descendants(&self, v: usize) -> Result<BTreeSet<usize>> {
        let desc = self.descendants(v)?;
        Ok((1..=self.p).filter(|u| !desc.contains(u)).collect())
    }

    fn try_topological_order(&self) -> Result<Vec<usize>> {
        let p = self.p;
        let mut indeg: Vec<usize> = (0..p).map(|j| (0..p).filter(|&i| self.has(i, j)).count()).collect();
        let mut ready: BTreeSet<usize> = (0..p).filter(|&j| indeg[j] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(&u) = ready.iter().next() {
            ready.remove(&u);
            order.push(u + 1);
            for w in 0..p {
                if self.has(u, w) {
                    indeg[w] -= 1;
                    if indeg[w] == 0 {
                        ready.insert(w);
                    }
                }
            }
        }
        if order.len() < p {
            let node = (0..p).find(|&j| indeg[j] > 0).map_or(1, |j| j + 1);
            return Err(Error::Cycle { node });
        }
        Ok(order)
    }

    /// A causal ordering: every edge points forward. Ties are broken by taking
    /// the lowest available index first.
    pub fn topological_order(&self) -> Vec<usize> {
        self.try_topological_order()
            .expect("Dag invariant: acyclic")
    }

    pub fn v_structures(&self) -> BTreeSet<VStructure> {
        let p = self.p;
        let mut out = BTreeSet::new();
        for c in 0..p {
            let pa: Vec<usize> = (0..p).filter(|&u| self.has(u, c)).collect();
            for (x, &a) in pa.iter().enumerate() {
                for &b in &pa[x + 1..] {
                    if !self.has(a, b) && !self.has(b, a) {
                        out.insert(VStructure { a: a + 1, c: c + 1, b: b + 1 });
                    }
                }
            }
        }
        out
    }

    /// Unordered adjacent pairs `(a, b)` with `a < b`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect()
    }
}

/// A DAG with a nonzero real weight on every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDag {
    dag: Dag,
    weights: DMatrix<f64>,
}

impl WeightedDag {
    /// Builds a weighted DAG from `(from, to, weight)` triples.
    pub fn new(p: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let dag = Dag::new(p, edges.iter().map(|&(a, b, _)| (a, b)))?;
        let mut weights = DMatrix::<f64>::zeros(p, p);
        for &(a, b, w) in edges {
            if !w.is_finite() || w == 0.0 {
                return Err(Error::InvalidGraph(format!("edge {a} -> {b} has weight {w}; weights must be finite and nonzero")));
            }
            weights[(a - 1, b - 1)] = w;
        }
        Ok(Self { dag, weights })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn num_nodes(&self) -> usize {
        self.dag.p
    }

    /// Weight of `a → b`, zero when the edge is absent.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        if self.dag.has_edge(a, b) {
            self.weights[(a - 1, b - 1)]
        } else {
            0.0
        }
    }

    /// The `p × p` weight matrix `B` (0-based), `B[(i, j)]` for `i+1 → j+1`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Edges with weights, sorted by `(from, to)`.
    pub fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        self.dag
            .edges()
            .into_iter()
            .map(|(a, b)| (a, b, self.weights[(a - 1, b - 1)]))
            .collect()
    }

    /// Copy with new weights on the edges into `node`. Keys must be current parents;
    /// parents missing from `weights` lose their edge.
    pub fn with_incoming_weights(&self, node: usize, weights: &[(usize, f64)]) -> Result<Self> {
        let parents = self.dag.parents(node)?;
        for &(u, _) in weights {
            if !parents.contains(&u) {
                return Err(Error::InvalidArgument(format!("{u} is not a parent of {node}")));
            }
        }
        let edges: Vec<(usize, usize, f64)> = self
            .weighted_edges()
            .into_iter()
            .filter_map(|(a, b, w)| {
                if b != node {
                    return Some((a, b, w));
                }
                weights
                    .iter()
                    .find(|(u, _)| *u == a)
                    .filter(|(_, nw)| *nw != 0.0)
                    .map(|&(_, nw)| (a, b, nw))
            })
            .collect();
        WeightedDag::new(self.num_nodes(), &edges)
    }
}

/// A partially directed graph: each adjacent pair is joined either by one
/// directed edge or by one undirected edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pdag {
    p: usize,
    dir: Vec<bool>,
    und: Vec<bool>,
}

impl Pdag {
    pub fn new(
        p: usize,
        directed: impl IntoIterator<Item = (usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut g = Pdag::empty(p);
        for (a, b) in directed {
            g.check_new_pair(a, b)?;
            g.dir[(a - 1) * p + (b - 1)] = true;
        }
        for (a, b) in undirected {
            g.check_new_pair(a, b)?;
            g.set_undirected(a - 1, b - 1);
        }
        Ok(g)
    }

    fn check_new_pair(&self, a: usize, b: usize) -> Result<()> {
        check_node(a, self.p)?;
        check_node(b, self.p)?;
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop at {a}")));
        }
        if self.adj(a - 1, b - 1) {
            return Err(Error::InvalidGraph(format!("more than one edge between {a} and {b}")));
        }
        Ok(())
    }

    pub fn empty(p: usize) -> Self {
        Pdag { p, dir: vec![false; p * p], und: vec![false; p * p] }
    }

    /// The fully directed graph with the same edges as `dag`.
    pub fn from_dag(dag: &Dag) -> Self {
        Pdag { p: dag.p, dir: dag.adj.clone(), und: vec![false; dag.p * dag.p] }
    }

    pub fn num_nodes(&self) -> usize {
        self.p
    }

    // 0-based primitives used by the graph algorithms
    pub(crate) fn d(&self, i: usize, j: usize) -> bool {
        self.dir[i * self.p + j]
    }
    pub(crate) fn u(&self, i: usize, j: usize) -> bool {
        self.und[i * self.p + j]
    }
    pub(crate) fn adj(&self, i: usize, j: usize) -> bool {
        self.d(i, j) || self.d(j, i) || self.u(i, j)
    }
    pub(crate) fn set_undirected(&mut self, i: usize, j: usize) {
        self.und[i * self.p + j] = true;
        self.und[j * self.p + i] = true;
    }
    pub(crate) fn orient(&mut self, i: usize, j: usize) {
        self.und[i * self.p + j] = false;
        self.und[j * self.p + i] = false;
        self.dir[j * self.p + i] = false;
        self.dir[i * self.p + j] = true;
    }

    /// Whether a directed path leads from `from` to `to` (0-based).
    pub(crate) fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.p];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            for y in 0..self.p {
                if self.d(x, y) && !seen[y] {
                    if y == to {
                        return true;
                    }
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    pub fn has_directed(&self, a: usize, b: usize) -> bool {
        a >= 1 && b >= 1 && a <= self.p && b <= self.p && self.d(a - 1, b - 1)
    }

    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        a >= 1 && b >= 1 && a <= self.p && b <= self.p && self.u(a - 1, b - 1)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a >= 1 && b >= 1 && a <= self.p && b <= self.p && self.adj(a - 1, b - 1)
    }

    /// Directed parents of `v`; undirected neighbours are not included.
    pub fn parents(&self, v: usize) -> Result<BTreeSet<usize>> {
        check_node(v, self.p)?;
        Ok((0..self.p).filter(|&u| self.d(u, v - 1)).map(|u| u + 1).collect())
    }

    pub fn children(&self, v: usize) -> Result<BTreeSet<usize>> {
        check_node(v, self.p)?;
        Ok((0..self.p).filter(|&u| self.d(v - 1, u)).map(|u| u + 1).collect())
    }

    pub fn undirected_neighbors(&self, v: usize) -> Result<BTreeSet<usize>> {
        check_node(v, self.p)?;
        Ok((0..self.p).filter(|&u| self.u(v - 1, u)).map(|u| u + 1).collect())
    }

    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let p = self.p;
        let mut out = Vec::new();
        for i in 0..p {
            for j in 0..p {
                if self.d(i, j) {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    /// Undirected edges as `(a, b)` with `a < b`, sorted.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let p = self.p;
        let mut out = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if self.u(i, j) {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    /// Unordered adjacent pairs `(a, b)` with `a < b`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        let p = self.p;
        let mut out = BTreeSet::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if self.adj(i, j) {
                    out.insert((i + 1, j + 1));
                }
            }
        }
        out
    }

    /// The subgraph of directed edges only.
    pub fn directed_part(&self) -> Pdag {
        Pdag { p: self.p, dir: self.dir.clone(), und: vec![false; self.p * self.p] }
    }

    /// The subgraph of undirected edges only.
    pub fn undirected_part(&self) -> Pdag {
        Pdag { p: self.p, dir: vec![false; self.p * self.p], und: self.und.clone() }
    }

    pub fn is_fully_directed(&self) -> bool {
        !self.und.iter().any(|&e| e)
    }

    pub fn has_directed_cycle(&self) -> bool {
        (0..self.p).any(|i| (0..self.p).any(|j| self.d(i, j) && self.reaches(j, i)))
    }

    /// V-structures formed by directed edges.
    pub fn v_structures(&self) -> BTreeSet<VStructure> {
        let p = self.p;
        let mut out = BTreeSet::new();
        for c in 0..p {
            let pa: Vec<usize> = (0..p).filter(|&u| self.d(u, c)).collect();
            for (x, &a) in pa.iter().enumerate() {
                for &b in &pa[x + 1..] {
                    if !self.adj(a, b) {
                        out.insert(VStructure { a: a + 1, c: c + 1, b: b + 1 });
                    }
                }
            }
        }
        out
    }

    /// Converts a fully directed, acyclic graph into a [`Dag`].
    pub fn to_dag(&self) -> Result<Dag> {
        if let Some((a, b)) = self.undirected_edges().first() {
            return Err(Error::InvalidGraph(format!("undirected edge {a} -- {b} remains")));
        }
        Dag::new(self.p, self.directed_edges())
    }

    /// Structural Hamming distance: adjacent pairs whose edge type differs
    /// (missing, extra, or differently marked).
    pub fn structural_hamming_distance(&self, other: &Pdag) -> usize {
        assert_eq!(self.p, other.p, "graphs must have the same node count");
        let p = self.p;
        let mut count = 0;
        for i in 0..p {
            for j in (i + 1)..p {
                let a = (self.d(i, j), self.d(j, i), self.u(i, j));
                let b = (other.d(i, j), other.d(j, i), other.u(i, j));
                if a != b {
                    count += 1;
                }
            }
        }
        count
    }
}
