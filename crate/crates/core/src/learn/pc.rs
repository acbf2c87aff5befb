//! Order-independent PC: level-wise skeleton search over adjacency
//! snapshots, majority-rule collider detection, then orientation closure.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::ci::fisher_z_ci;
use super::CiTestConfig;
use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::graph::{meek_closure, Pdag};

/// Learned CPDAG with the separating sets found during the skeleton phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PcOutput {
    pub cpdag: Pdag,
    /// First separating set found for each removed pair `(a, b)`, `a < b`.
    pub sepsets: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

/// Estimated CPDAG from a covariance or correlation matrix over nodes `1..=p`
/// computed from `n` observations.
pub fn pc_cpdag(cov: &CovMatrix, n: usize, cfg: &CiTestConfig) -> Result<Pdag> {
    Ok(pc_cpdag_with_sepsets(cov, n, cfg)?.cpdag)
}

pub fn pc_cpdag_with_sepsets(cov: &CovMatrix, n: usize, cfg: &CiTestConfig) -> Result<PcOutput> {
    let p = cov.dim();
    if cov.labels().iter().copied().ne(1..=p) {
        return Err(Error::InvalidArgument("PC needs a matrix labelled 1..=p in order".into()));
    }
    CiTestConfig::new(cfg.alpha)?;
    let max_size = cfg.max_condition_size.unwrap_or(p.saturating_sub(2)).min(n.saturating_sub(4));
    let tester = Tester { cov, n, alpha: cfg.alpha, max_size };

    let mut adj: Vec<BTreeSet<usize>> = (1..=p).map(|v| (1..=p).filter(|&u| u != v).collect()).collect();
    let mut sepsets = BTreeMap::new();
    for level in 0..=max_size {
        let snapshot = adj.clone();
        let edges: Vec<(usize, usize)> = (1..=p)
            .flat_map(|a| snapshot[a - 1].iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .filter(|&(a, b)| snapshot[a - 1].len() > level || snapshot[b - 1].len() > level)
            .collect();
        if edges.is_empty() {
            break;
        }
        let found: Vec<((usize, usize), Option<BTreeSet<usize>>)> = edges
            .par_iter()
            .map(|&(a, b)| -> Result<_> {
                for (x, y) in [(a, b), (b, a)] {
                    let pool: Vec<usize> = snapshot[x - 1].iter().copied().filter(|&v| v != y).collect();
                    if let Some(s) = tester.first_separator(x, y, &pool, level)? {
                        return Ok(((a, b), Some(s)));
                    }
                }
                Ok(((a, b), None))
            })
            .collect::<Result<_>>()?;
        for ((a, b), s) in found {
            if let Some(s) = s {
                adj[a - 1].remove(&b);
                adj[b - 1].remove(&a);
                sepsets.insert((a, b), s);
            }
        }
    }

    let mut g = Pdag::empty(p);
    for a in 1..=p {
        for &b in &adj[a - 1] {
            if a < b {
                g.set_undirected(a - 1, b - 1);
            }
        }
    }

    // unshielded triples a – c – b, a < b, in sorted order
    let mut colliders = Vec::new();
    for c in 1..=p {
        let nb: Vec<usize> = adj[c - 1].iter().copied().collect();
        for (k, &a) in nb.iter().enumerate() {
            for &b in &nb[k + 1..] {
                if adj[a - 1].contains(&b) {
                    continue;
                }
                if tester.is_collider(a, c, b, &adj, &sepsets)? {
                    colliders.push((a, c, b));
                }
            }
        }
    }
    colliders.sort_unstable();
    for (a, c, b) in colliders {
        for x in [a, b] {
            let (x0, c0) = (x - 1, c - 1);
            if g.u(x0, c0) && !g.reaches(c0, x0) {
                g.orient(x0, c0);
            }
        }
    }
    meek_closure(&mut g);
    Ok(PcOutput { cpdag: g, sepsets })
}

struct Tester<'a> {
    cov: &'a CovMatrix,
    n: usize,
    alpha: f64,
    max_size: usize,
}

impl Tester<'_> {
    fn independent(&self, x: usize, y: usize, s: &BTreeSet<usize>) -> Result<bool> {
        fisher_z_ci(self.cov, self.n, x, y, s, self.alpha)
    }

    /// First subset of `pool` of size `size` (lexicographic) separating `x` and `y`.
    fn first_separator(&self, x: usize, y: usize, pool: &[usize], size: usize) -> Result<Option<BTreeSet<usize>>> {
        for s in subsets(pool, size) {
            if self.independent(x, y, &s)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    /// Majority rule over every separating set drawn from the final
    /// neighbourhoods of `a` or `b`: a collider when `c` is in fewer than
    /// half of them, not when in more, undecided on a tie. Without any
    /// separating set the recorded one decides.
    fn is_collider(
        &self,
        a: usize,
        c: usize,
        b: usize,
        adj: &[BTreeSet<usize>],
        sepsets: &BTreeMap<(usize, usize), BTreeSet<usize>>,
    ) -> Result<bool> {
        let mut candidates: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        for x in [a, b] {
            let pool: Vec<usize> = adj[x - 1].iter().copied().filter(|&v| v != a && v != b).collect();
            for size in 0..=self.max_size.min(pool.len()) {
                candidates.extend(subsets(&pool, size));
            }
        }
        let mut with_c = 0usize;
        let mut total = 0usize;
        for s in &candidates {
            if self.independent(a, b, s)? {
                total += 1;
                if s.contains(&c) {
                    with_c += 1;
                }
            }
        }
        if total == 0 {
            return Ok(sepsets.get(&(a, b)).is_some_and(|s| !s.contains(&c)));
        }
        Ok(2 * with_c < total)
    }
}

/// All `size`-subsets of `pool` in lexicographic order of positions.
fn subsets(pool: &[usize], size: usize) -> Vec<BTreeSet<usize>> {
    let n = pool.len();
    if size > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().map(|&i| pool[i]).collect());
        let Some(pos) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
            break;
        };
        idx[pos] += 1;
        for k in pos + 1..size {
            idx[k] = idx[k - 1] + 1;
        }
    }
    out
}
