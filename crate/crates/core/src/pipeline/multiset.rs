use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parentsets::Multiset;

/// One distinct parent tuple's estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEntry {
    pub values: Vec<f64>,
    pub multiplicity: u64,
    pub parent_sets: Vec<Vec<usize>>,
}

/// Multiset of possible effect vectors, one entry per parent tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectMultiset {
    pub targets: Vec<usize>,
    pub response: usize,
    pub entries: Vec<EffectEntry>,
    /// Set when the parent tuples may include ones no DAG realizes.
    pub superset: bool,
}

impl EffectMultiset {
    pub fn new(targets: Vec<usize>, response: usize, entries: Vec<EffectEntry>, superset: bool) -> Result<Self> {
        if let Some(first) = entries.first() {
            let k = first.values.len();
            if entries.iter().any(|e| e.values.len() != k) {
                return Err(Error::InvalidArgument("effect vectors differ in dimension".into()));
            }
        }
        if entries.iter().any(|e| e.multiplicity == 0) {
            return Err(Error::InvalidArgument("multiplicities must be positive".into()));
        }
        Ok(Self { targets, response, entries, superset })
    }

    /// Plain multiset of vectors with multiplicities, no provenance.
    pub fn from_values(targets: Vec<usize>, response: usize, values: Vec<(Vec<f64>, u64)>) -> Result<Self> {
        let entries = values
            .into_iter()
            .map(|(values, multiplicity)| EffectEntry { values, multiplicity, parent_sets: Vec::new() })
            .collect();
        Self::new(targets, response, entries, false)
    }

    /// Dimension of the effect vectors (0 when empty).
    pub fn dim(&self) -> usize {
        self.entries.first().map_or(0, |e| e.values.len())
    }

    /// Total size, counting multiplicity.
    pub fn size(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Coordinate `i` of every element, repeated by multiplicity.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.values[i], e.multiplicity as usize))
            .collect()
    }
}

impl Multiset for EffectMultiset {
    type Item = Vec<f64>;

    fn counts(&self) -> Vec<(Vec<f64>, u64)> {
        let mut out: Vec<(Vec<f64>, u64)> = Vec::new();
        for e in &self.entries {
            match out.iter_mut().find(|(v, _)| *v == e.values) {
                Some((_, m)) => *m += e.multiplicity,
                None => out.push((e.values.clone(), e.multiplicity)),
            }
        }
        out
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Largest gap between order statistics, maximized over coordinates;
/// infinite when the sizes or dimensions differ.
pub fn multiset_distance(a: &EffectMultiset, b: &EffectMultiset) -> f64 {
    if a.size() != b.size() || a.dim() != b.dim() {
        return f64::INFINITY;
    }
    (0..a.dim())
        .map(|i| {
            sorted(a.coordinate(i))
                .iter()
                .zip(sorted(b.coordinate(i)))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summary {
    /// Smallest absolute value.
    Minabs,
    /// Mean, weighted by multiplicity.
    Aver,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Summary::Minabs => "minabs",
            Summary::Aver => "aver",
        })
    }
}

impl FromStr for Summary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minabs" => Ok(Summary::Minabs),
            "aver" => Ok(Summary::Aver),
            _ => Err(Error::InvalidArgument(format!("unknown summary `{s}`"))),
        }
    }
}

/// `stat` over coordinate `index` of `m`.
pub fn summarize(m: &EffectMultiset, index: usize, stat: Summary) -> Result<f64> {
    if index >= m.dim() {
        return Err(Error::InvalidArgument(format!("coordinate {index} of a {}-dimensional multiset", m.dim())));
    }
    Ok(match stat {
        Summary::Minabs => m.entries.iter().map(|e| e.values[index].abs()).fold(f64::INFINITY, f64::min),
        Summary::Aver => {
            let total: f64 = m.entries.iter().map(|e| e.values[index] * e.multiplicity as f64).sum();
            total / m.size() as f64
        }
    })
}
