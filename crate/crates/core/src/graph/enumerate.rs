//! Listing every DAG in the Markov equivalence class of a CPDAG.

use std::collections::BTreeSet;

use super::{meek::meek_closure, Dag, Pdag, VStructure};
use crate::error::{Error, Result};

/// Default ceiling on the number of DAGs [`enumerate_equivalence_class`] returns.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// All DAGs sharing `c`'s skeleton and v-structures, each exactly once.
///
/// Works by recursive edge orientation: pick the first undirected edge, try
/// both directions, propagate with the orientation rules, and prune branches
/// that close a cycle or create a v-structure absent from `c`. Output is
/// sorted by the orientation pattern of `c`'s undirected edges (bit set when
/// an edge `a – b`, `a < b`, is oriented `b → a`).
pub fn enumerate_equivalence_class(c: &Pdag) -> Result<Vec<Dag>> {
    enumerate_equivalence_class_capped(c, DEFAULT_ENUMERATION_CAP)
}

/// As [`enumerate_equivalence_class`], failing once more than `cap` DAGs are found.
pub fn enumerate_equivalence_class_capped(c: &Pdag, cap: usize) -> Result<Vec<Dag>> {
    if c.has_directed_cycle() {
        return Err(Error::NoExtension("directed part contains a cycle".into()));
    }
    let reference = c.v_structures();
    let mut start = c.clone();
    meek_closure(&mut start);
    let mut out = Vec::new();
    if consistent(&start, &reference) {
        extend(start, &reference, cap, &mut out)?;
    }
    if out.is_empty() {
        return Err(Error::NoExtension(
            "the graph admits no acyclic orientation without new v-structures".into(),
        ));
    }
    let undirected = c.undirected_edges();
    let key = |d: &Dag| -> Vec<bool> { undirected.iter().map(|&(a, b)| d.has_edge(b, a)).collect() };
    out.sort_by_cached_key(key);
    Ok(out)
}

fn consistent(g: &Pdag, reference: &BTreeSet<VStructure>) -> bool {
    !g.has_directed_cycle() && g.v_structures().is_subset(reference)
}

fn extend(g: Pdag, reference: &BTreeSet<VStructure>, cap: usize, out: &mut Vec<Dag>) -> Result<()> {
    let Some(&(a, b)) = g.undirected_edges().first() else {
        out.push(g.to_dag()?);
        if out.len() > cap {
            return Err(Error::EnumerationTooLarge { cap });
        }
        return Ok(());
    };
    for (x, y) in [(a - 1, b - 1), (b - 1, a - 1)] {
        if g.reaches(y, x) {
            continue;
        }
        let mut h = g.clone();
        h.orient(x, y);
        meek_closure(&mut h);
        if consistent(&h, reference) {
            extend(h, reference, cap, out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::dag_to_cpdag;

    #[test]
    fn three_node_chain_has_three_members() {
        let c = fixtures::three_node_chain_cpdag();
        let dags = enumerate_equivalence_class(&c).unwrap();
        let edges: Vec<_> = dags.iter().map(|d| d.edges()).collect();
        assert_eq!(
            edges,
            vec![vec![(1, 3), (3, 2)], vec![(2, 3), (3, 1)], vec![(3, 1), (3, 2)]]
        );
    }

    #[test]
    fn single_undirected_edge() {
        let c = Pdag::new(2, [], [(1, 2)]).unwrap();
        let dags = enumerate_equivalence_class(&c).unwrap();
        assert_eq!(dags.len(), 2);
        assert_eq!(dags[0].edges(), vec![(1, 2)]);
        assert_eq!(dags[1].edges(), vec![(2, 1)]);
    }

    #[test]
    fn eight_node_cpdag_has_twelve_members() {
        let c = fixtures::eight_node_cpdag();
        assert_eq!(enumerate_equivalence_class(&c).unwrap().len(), 12);
    }

    #[test]
    fn complete_graph_on_four_nodes_has_all_orders() {
        let edges: Vec<_> = (1..=4).flat_map(|a| ((a + 1)..=4).map(move |b| (a, b))).collect();
        let c = Pdag::new(4, [], edges).unwrap();
        assert_eq!(enumerate_equivalence_class(&c).unwrap().len(), 24);
    }

    #[test]
    fn non_chordal_cycle_has_no_extension() {
        let c = Pdag::new(4, [], [(1, 2), (2, 3), (3, 4), (1, 4)]).unwrap();
        assert!(matches!(enumerate_equivalence_class(&c), Err(Error::NoExtension(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let edges: Vec<_> = (1..=4).flat_map(|a| ((a + 1)..=4).map(move |b| (a, b))).collect();
        let c = Pdag::new(4, [], edges).unwrap();
        assert!(matches!(
            enumerate_equivalence_class_capped(&c, 10),
            Err(Error::EnumerationTooLarge { cap: 10 })
        ));
    }

    #[test]
    fn fully_directed_input_returns_itself() {
        let d = Dag::new(3, [(1, 3), (2, 3)]).unwrap();
        let c = dag_to_cpdag(&d);
        assert_eq!(enumerate_equivalence_class(&c).unwrap(), vec![d]);
    }
}
