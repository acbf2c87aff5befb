use std::collections::{BTreeMap, BTreeSet};

use super::Pdag;
use crate::error::{Error, Result};

/// An undirected graph over a subset of the original node labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: BTreeMap<usize, BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(nodes: impl IntoIterator<Item = usize>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = nodes.into_iter().map(|v| (v, BTreeSet::new())).collect();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
            if !adj.contains_key(&a) || !adj.contains_key(&b) {
                return Err(Error::InvalidGraph(format!("edge {a} -- {b} leaves the node set")));
            }
            adj.get_mut(&a).unwrap().insert(b);
            adj.get_mut(&b).unwrap().insert(a);
        }
        Ok(Self { adj })
    }

    pub fn nodes(&self) -> Vec<usize> {
        self.adj.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn neighbors(&self, v: usize) -> Option<&BTreeSet<usize>> {
        self.adj.get(&v)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .flat_map(|(&a, nb)| nb.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    /// This component as a [`Pdag`] on `p` nodes with only its undirected edges.
    pub fn to_pdag(&self, p: usize) -> Result<Pdag> {
        Pdag::new(p, [], self.edges())
    }
}

/// Connected components of the undirected part of `c`, ordered by smallest
/// node. Nodes without undirected edges form singleton components.
pub fn undirected_components(c: &Pdag) -> Vec<UndirectedGraph> {
    let p = c.num_nodes();
    let mut comp = vec![usize::MAX; p];
    let mut out = Vec::new();
    for start in 0..p {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut k = 0;
        while k < members.len() {
            let x = members[k];
            for y in 0..p {
                if c.u(x, y) && comp[y] == usize::MAX {
                    comp[y] = id;
                    members.push(y);
                }
            }
            k += 1;
        }
        let nodes: Vec<usize> = members.iter().map(|&x| x + 1).collect();
        let edges: Vec<(usize, usize)> = members
            .iter()
            .flat_map(|&x| members.iter().filter(move |&&y| x < y && c.u(x, y)).map(move |&y| (x + 1, y + 1)))
            .collect();
        out.push(UndirectedGraph::new(nodes, edges).expect("component edges stay inside the component"));
    }
    out
}

/// Chordality via maximum cardinality search followed by a zero fill-in check.
pub fn is_chordal(ug: &UndirectedGraph) -> bool {
    let nodes = ug.nodes();
    let n = nodes.len();
    if n <= 3 {
        // every cycle of length >= 4 needs at least four nodes
        return true;
    }
    let pos_of: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let nb: Vec<Vec<usize>> = nodes
        .iter()
        .map(|v| ug.neighbors(*v).unwrap().iter().map(|u| pos_of[u]).collect())
        .collect();

    // order[k] = k-th visited vertex; number[v] = visit index
    let mut weight = vec![0usize; n];
    let mut number = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    for k in 0..n {
        let v = (0..n)
            .filter(|&v| number[v] == usize::MAX)
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .unwrap();
        number[v] = k;
        order.push(v);
        for &u in &nb[v] {
            if number[u] == usize::MAX {
                weight[u] += 1;
            }
        }
    }

    // For each vertex, its earlier-numbered neighbours must form a clique; it
    // suffices to check they are all adjacent to the latest of them.
    for &v in &order {
        let earlier: Vec<usize> = nb[v].iter().copied().filter(|&u| number[u] < number[v]).collect();
        if let Some(&last) = earlier.iter().max_by_key(|&&u| number[u]) {
            for &u in &earlier {
                if u != last && !nb[last].contains(&u) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ug(n: usize, edges: &[(usize, usize)]) -> UndirectedGraph {
        UndirectedGraph::new(1..=n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn chordality_examples() {
        assert!(!is_chordal(&ug(4, &[(1, 2), (2, 3), (3, 4), (4, 1)])));
        assert!(is_chordal(&ug(3, &[(1, 2), (2, 3), (1, 3)])));
        assert!(is_chordal(&ug(6, &[(1, 2), (1, 3), (3, 4), (3, 5), (5, 6)])));
        assert!(is_chordal(&ug(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)])));
        assert!(!is_chordal(&ug(5, &[(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])));
        // 5-cycle with only one chord still has a chordless 4-cycle
        assert!(!is_chordal(&ug(5, &[(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (1, 3)])));
    }

    #[test]
    fn components_of_eight_node_cpdag() {
        let c = fixtures::eight_node_cpdag();
        let comps = undirected_components(&c);
        let nontrivial: Vec<Vec<usize>> = comps.iter().filter(|g| g.len() > 1).map(|g| g.nodes()).collect();
        assert_eq!(nontrivial, vec![vec![1, 3, 4], vec![2, 6], vec![5, 8]]);
        assert_eq!(comps.len(), 4);
        assert_eq!(comps[0].edges(), vec![(1, 4), (3, 4)]);
    }

    #[test]
    fn fully_directed_gives_singletons() {
        let c = Pdag::new(3, [(1, 2), (2, 3)], []).unwrap();
        let comps = undirected_components(&c);
        assert_eq!(comps.len(), 3);
        assert!(comps.iter().all(|g| g.len() == 1));
    }

    #[test]
    fn triangle_is_one_component() {
        let c = Pdag::new(3, [], [(1, 2), (2, 3), (1, 3)]).unwrap();
        let comps = undirected_components(&c);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 3);
    }
}
