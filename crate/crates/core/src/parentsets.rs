//! Jointly valid parent sets of intervention nodes, read off a CPDAG.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    enumerate_equivalence_class, is_chordal, locally_valid_parent_sets, locally_valid_undirected_subsets,
    undirected_components, Pdag,
};
use crate::opin::ParentAssignment;

/// Components with more nodes than this are not enumerated.
pub const DEFAULT_MAX_ENUM: usize = 12;

/// One parent set per target.
pub type ParentTuple = Vec<BTreeSet<usize>>;

/// A multiset of parent tuples for a fixed list of targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentMultiset {
    targets: Vec<usize>,
    entries: BTreeMap<ParentTuple, u64>,
    superset: bool,
}

impl ParentMultiset {
    pub fn new(targets: Vec<usize>, entries: BTreeMap<ParentTuple, u64>, superset: bool) -> Result<Self> {
        for (tuple, &m) in &entries {
            if m == 0 {
                return Err(Error::InvalidArgument("multiplicities must be positive".into()));
            }
            if tuple.len() != targets.len() {
                return Err(Error::InvalidArgument(format!(
                    "tuple of arity {} for {} targets",
                    tuple.len(),
                    targets.len()
                )));
            }
        }
        Ok(Self { targets, entries, superset })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Distinct tuples with multiplicities, in sorted order.
    pub fn entries(&self) -> &BTreeMap<ParentTuple, u64> {
        &self.entries
    }

    /// Whether the multiset may contain tuples no DAG in the class realizes.
    pub fn superset(&self) -> bool {
        self.superset
    }

    /// Total size, counting multiplicity.
    pub fn size(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    /// Distinct tuples as assignments, with multiplicities.
    pub fn assignments(&self) -> impl Iterator<Item = (ParentAssignment, u64)> + '_ {
        self.entries.iter().map(|(tuple, &m)| {
            (ParentAssignment::new(self.targets.clone(), tuple.clone()).expect("validated on construction"), m)
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ParentMultisetJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let doc: ParentMultisetJson =
            serde_json::from_value(value.clone()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for e in doc.entries {
            let tuple: ParentTuple = e.parent_sets.into_iter().map(|s| s.into_iter().collect()).collect();
            *entries.entry(tuple).or_insert(0) += e.multiplicity;
        }
        Self::new(doc.targets, entries, doc.superset)
    }
}

#[derive(Serialize, Deserialize)]
struct ParentMultisetJson {
    targets: Vec<usize>,
    entries: Vec<EntryJson>,
    superset: bool,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    parent_sets: Vec<Vec<usize>>,
    multiplicity: u64,
}

impl From<&ParentMultiset> for ParentMultisetJson {
    fn from(m: &ParentMultiset) -> Self {
        Self {
            targets: m.targets.clone(),
            entries: m
                .entries
                .iter()
                .map(|(t, &multiplicity)| EntryJson {
                    parent_sets: t.iter().map(|s| s.iter().copied().collect()).collect(),
                    multiplicity,
                })
                .collect(),
            superset: m.superset,
        }
    }
}

/// Anything that can be viewed as distinct elements with multiplicities.
pub trait Multiset {
    type Item: PartialEq;
    /// Distinct elements, each listed once.
    fn counts(&self) -> Vec<(Self::Item, u64)>;
}

impl Multiset for ParentMultiset {
    type Item = ParentTuple;
    fn counts(&self) -> Vec<(ParentTuple, u64)> {
        self.entries.iter().map(|(t, &m)| (t.clone(), m)).collect()
    }
}

/// Same distinct elements, multiplicities proportional.
pub fn multisets_equivalent<M: Multiset>(a: &M, b: &M) -> bool {
    let ca = a.counts();
    let cb = b.counts();
    if ca.len() != cb.len() {
        return false;
    }
    let Some((first, ma0)) = ca.first() else {
        return true;
    };
    let Some(mb0) = cb.iter().find(|(x, _)| x == first).map(|(_, m)| *m) else {
        return false;
    };
    ca.iter().all(|(x, ma)| {
        cb.iter()
            .find(|(y, _)| y == x)
            .is_some_and(|(_, mb)| *ma as u128 * mb0 as u128 == *mb as u128 * *ma0 as u128)
    })
}

fn check_targets(c: &Pdag, targets: &[usize]) -> Result<()> {
    let p = c.num_nodes();
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no intervention targets".into()));
    }
    for (k, &t) in targets.iter().enumerate() {
        if t == 0 || t > p {
            return Err(Error::NodeOutOfRange { node: t, p });
        }
        if targets[..k].contains(&t) {
            return Err(Error::InvalidArgument(format!("target {t} listed twice")));
        }
    }
    Ok(())
}

/// Every DAG in the class contributes its parent tuple once.
pub fn global_parent_sets(c: &Pdag, targets: &[usize]) -> Result<ParentMultiset> {
    check_targets(c, targets)?;
    let mut entries = BTreeMap::new();
    for dag in enumerate_equivalence_class(c)? {
        let tuple = targets.iter().map(|&t| dag.parents(t)).collect::<Result<ParentTuple>>()?;
        *entries.entry(tuple).or_insert(0) += 1;
    }
    ParentMultiset::new(targets.to_vec(), entries, false)
}

/// Every combination of per-target locally valid parent sets, once each.
/// May contain tuples that no single DAG realizes.
pub fn local_combination_parent_sets(c: &Pdag, targets: &[usize]) -> Result<ParentMultiset> {
    check_targets(c, targets)?;
    let per_target = targets
        .iter()
        .map(|&t| Ok(locally_valid_parent_sets(c, t)?.into_iter().collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let superset = per_target.iter().any(|sets| sets.len() > 1);
    let entries = cartesian(&per_target).into_iter().map(|t| (t, 1)).collect();
    ParentMultiset::new(targets.to_vec(), entries, superset)
}

fn cartesian(options: &[Vec<BTreeSet<usize>>]) -> Vec<ParentTuple> {
    options.iter().fold(vec![Vec::new()], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut t = prefix.clone();
                    t.push(o.clone());
                    t
                })
            })
            .collect()
    })
}

/// Jointly valid parent tuples, enumerating only the undirected components
/// that contain a target.
///
/// Each such component is oriented in every consistent way and the parents
/// of its targets inside the component are tallied. Tallies of different
/// components are multiplied out, and every target's directed parents are
/// added. A component with more than `max_enum` nodes, or one that is not
/// chordal, instead contributes all combinations of locally valid subsets;
/// the result is then flagged as a possible superset.
pub fn jointly_valid_parent_sets(c: &Pdag, targets: &[usize], max_enum: usize) -> Result<ParentMultiset> {
    check_targets(c, targets)?;
    let k = targets.len();
    let mut superset = false;
    // partial tuples over all targets; untouched coordinates stay empty
    let mut combined: BTreeMap<ParentTuple, u64> = BTreeMap::from([(vec![BTreeSet::new(); k], 1)]);

    for comp in undirected_components(c) {
        let inside: Vec<usize> = (0..k).filter(|&i| comp.contains(targets[i])).collect();
        if inside.is_empty() || comp.len() == 1 {
            continue;
        }
        let tallies: BTreeMap<Vec<BTreeSet<usize>>, u64> = if comp.len() > max_enum || !is_chordal(&comp) {
            superset = true;
            let options = inside
                .iter()
                .map(|&i| locally_valid_undirected_subsets(c, targets[i]))
                .collect::<Result<Vec<_>>>()?;
            cartesian(&options).into_iter().map(|t| (t, 1)).collect()
        } else {
            let mut tallies = BTreeMap::new();
            for dag in enumerate_equivalence_class(&comp.to_pdag(c.num_nodes())?)? {
                let tuple = inside.iter().map(|&i| dag.parents(targets[i])).collect::<Result<Vec<_>>>()?;
                *tallies.entry(tuple).or_insert(0u64) += 1;
            }
            tallies
        };
        let mut next = BTreeMap::new();
        for (partial, m) in &combined {
            for (local, lm) in &tallies {
                let mut t = partial.clone();
                for (slot, set) in inside.iter().zip(local) {
                    t[*slot] = set.clone();
                }
                *next.entry(t).or_insert(0) += m * lm;
            }
        }
        combined = next;
    }

    let directed = targets.iter().map(|&t| c.parents(t)).collect::<Result<Vec<_>>>()?;
    let entries = combined
        .into_iter()
        .map(|(mut t, m)| {
            for (slot, d) in t.iter_mut().zip(&directed) {
                slot.extend(d);
            }
            (t, m)
        })
        .collect();
    ParentMultiset::new(targets.to_vec(), entries, superset)
}
