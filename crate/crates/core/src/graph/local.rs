use std::collections::BTreeSet;

use super::Pdag;
use crate::error::Result;

/// Subsets `S` of `v`'s undirected neighbours that can be oriented into `v`
/// without creating a new collider at `v`: members of `S` must be pairwise
/// adjacent and adjacent to every directed parent of `v`.
pub fn locally_valid_undirected_subsets(c: &Pdag, v: usize) -> Result<Vec<BTreeSet<usize>>> {
    let directed = c.parents(v)?;
    let nb: Vec<usize> = c.undirected_neighbors(v)?.into_iter().collect();
    let mut out = Vec::new();
    'subsets: for mask in 0u64..(1u64 << nb.len()) {
        let s: Vec<usize> = (0..nb.len()).filter(|&k| mask >> k & 1 == 1).map(|k| nb[k]).collect();
        for (k, &a) in s.iter().enumerate() {
            if s[k + 1..].iter().any(|&b| !c.adjacent(a, b)) {
                continue 'subsets;
            }
            if directed.iter().any(|&d| !c.adjacent(a, d)) {
                continue 'subsets;
            }
        }
        out.push(s.into_iter().collect());
    }
    out.sort();
    Ok(out)
}

/// Locally valid parent sets of `v`: each locally valid undirected subset
/// united with the directed parents of `v`.
pub fn locally_valid_parent_sets(c: &Pdag, v: usize) -> Result<BTreeSet<BTreeSet<usize>>> {
    let directed = c.parents(v)?;
    Ok(locally_valid_undirected_subsets(c, v)?
        .into_iter()
        .map(|s| s.union(&directed).copied().collect())
        .collect())
}
