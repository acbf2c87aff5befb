//! Linear structural equation models `X ← BᵀX + ε`: exact covariances,
//! sampling, the path-product effect oracle, and nonparanormal transforms.

mod npn;
mod random;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT, Uniform};
use serde::{Deserialize, Serialize};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::graph::text::GraphDocument;
use crate::graph::WeightedDag;

pub use npn::{npn_sample, NpnModel, Transform};
pub use random::{random_sem, random_weighted_dag};

/// Mean-zero error law of a single node, parameterized by its variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ErrorDist {
    Gaussian { variance: f64 },
    /// Uniform on `(-a, a)` with `a = √(3·variance)`.
    Uniform { variance: f64 },
    /// Student t with `df > 4` degrees of freedom, rescaled to `variance`.
    #[serde(rename = "t")]
    StudentT { variance: f64, df: f64 },
}

impl ErrorDist {
    pub const STANDARD_GAUSSIAN: ErrorDist = ErrorDist::Gaussian { variance: 1.0 };

    pub fn variance(&self) -> f64 {
        match *self {
            ErrorDist::Gaussian { variance } | ErrorDist::Uniform { variance } | ErrorDist::StudentT { variance, .. } => {
                variance
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let v = self.variance();
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("error variance must be positive, got {v}")));
        }
        if let ErrorDist::StudentT { df, .. } = *self {
            if !(df > 4.0 && df.is_finite()) {
                return Err(Error::InvalidArgument(format!("t errors need df > 4, got {df}")));
            }
        }
        Ok(())
    }

    fn with_variance(&self, variance: f64) -> Self {
        match *self {
            ErrorDist::Gaussian { .. } => ErrorDist::Gaussian { variance },
            ErrorDist::Uniform { .. } => ErrorDist::Uniform { variance },
            ErrorDist::StudentT { df, .. } => ErrorDist::StudentT { variance, df },
        }
    }

    fn sampler(&self) -> ErrorSampler {
        match *self {
            ErrorDist::Gaussian { variance } => ErrorSampler::Gaussian(Normal::new(0.0, variance.sqrt()).unwrap()),
            ErrorDist::Uniform { variance } => {
                let a = (3.0 * variance).sqrt();
                ErrorSampler::Uniform(Uniform::new(-a, a).unwrap())
            }
            ErrorDist::StudentT { variance, df } => {
                ErrorSampler::StudentT(StudentT::new(df).unwrap(), (variance * (df - 2.0) / df).sqrt())
            }
        }
    }

    fn to_text(self) -> String {
        match self {
            ErrorDist::Gaussian { variance } => format!("gaussian {variance}"),
            ErrorDist::Uniform { variance } => format!("uniform {variance}"),
            ErrorDist::StudentT { variance, df } => format!("t {variance} {df}"),
        }
    }

    fn parse(tokens: &[&str], line: usize) -> Result<Self> {
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad number `{s}`") })
        };
        let dist = match tokens {
            ["gaussian", v] => ErrorDist::Gaussian { variance: num(v)? },
            ["uniform", v] => ErrorDist::Uniform { variance: num(v)? },
            ["t", v, df] => ErrorDist::StudentT { variance: num(v)?, df: num(df)? },
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `gaussian v`, `uniform v` or `t v df`, got `{}`", tokens.join(" ")),
                })
            }
        };
        dist.validate().map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        Ok(dist)
    }
}

enum ErrorSampler {
    Gaussian(Normal<f64>),
    Uniform(Uniform<f64>),
    StudentT(StudentT<f64>, f64),
}

impl ErrorSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorSampler::Gaussian(d) => d.sample(rng),
            ErrorSampler::Uniform(d) => d.sample(rng),
            ErrorSampler::StudentT(d, scale) => scale * d.sample(rng),
        }
    }
}

/// A weighted DAG together with independent error laws, one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSem {
    graph: WeightedDag,
    errors: Vec<ErrorDist>,
}

impl LinearSem {
    pub fn new(graph: WeightedDag, errors: Vec<ErrorDist>) -> Result<Self> {
        if errors.len() != graph.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} error laws for {} nodes",
                errors.len(),
                graph.num_nodes()
            )));
        }
        for e in &errors {
            e.validate()?;
        }
        Ok(Self { graph, errors })
    }

    /// Standard Gaussian errors on every node.
    pub fn gaussian(graph: WeightedDag) -> Self {
        let p = graph.num_nodes();
        Self { graph, errors: vec![ErrorDist::STANDARD_GAUSSIAN; p] }
    }

    pub fn graph(&self) -> &WeightedDag {
        &self.graph
    }

    pub fn errors(&self) -> &[ErrorDist] {
        &self.errors
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// `Cov(ε)` as a diagonal vector (0-based).
    pub fn error_variances(&self) -> DVector<f64> {
        DVector::from_iterator(self.errors.len(), self.errors.iter().map(ErrorDist::variance))
    }

    /// The equivalent SEM on rescaled variables `X_j / sd(X_j)`: its
    /// covariance is the correlation matrix of this one.
    pub fn standardized(&self) -> Self {
        let sigma = true_covariance(self);
        let sd: Vec<f64> = (0..self.num_nodes()).map(|i| sigma.values()[(i, i)].sqrt()).collect();
        let edges: Vec<(usize, usize, f64)> = self
            .graph
            .weighted_edges()
            .into_iter()
            .map(|(a, b, w)| (a, b, w * sd[a - 1] / sd[b - 1]))
            .collect();
        let graph = WeightedDag::new(self.num_nodes(), &edges).expect("rescaling keeps weights nonzero");
        let errors = self
            .errors
            .iter()
            .zip(&sd)
            .map(|(e, s)| e.with_variance(e.variance() / (s * s)))
            .collect();
        Self { graph, errors }
    }

    /// Same errors, new weights on the edges into `node`.
    pub fn with_incoming_weights(&self, node: usize, weights: &[(usize, f64)]) -> Result<Self> {
        Ok(Self { graph: self.graph.with_incoming_weights(node, weights)?, errors: self.errors.clone() })
    }

    /// Parses the graph text format with an optional `errors:` block.
    /// Nodes without an error line get standard Gaussian errors.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = GraphDocument::parse(text)?;
        let graph = doc.to_weighted_dag()?;
        let mut errors = vec![None; graph.num_nodes()];
        for (line, body) in &doc.error_lines {
            let toks: Vec<&str> = body.split_whitespace().collect();
            let node: usize = toks[0]
                .parse()
                .ok()
                .filter(|&v| v >= 1 && v <= graph.num_nodes())
                .ok_or_else(|| Error::Parse { line: *line, msg: format!("bad node `{}`", toks[0]) })?;
            if errors[node - 1].is_some() {
                return Err(Error::Parse { line: *line, msg: format!("second error line for node {node}") });
            }
            errors[node - 1] = Some(ErrorDist::parse(&toks[1..], *line)?);
        }
        let errors = errors.into_iter().map(|e| e.unwrap_or(ErrorDist::STANDARD_GAUSSIAN)).collect();
        Self::new(graph, errors)
    }

    pub fn to_text(&self) -> String {
        let mut s = crate::graph::text::write_weighted_dag(&self.graph);
        s.push_str("errors:\n");
        for (i, e) in self.errors.iter().enumerate() {
            let _ = writeln!(s, "{} {}", i + 1, e.to_text());
        }
        s
    }
}

/// `(I − Bᵀ)⁻¹` with target columns of `B` zeroed, built row by row in causal order.
fn total_effect_matrix(g: &WeightedDag, cut: &[usize]) -> DMatrix<f64> {
    let p = g.num_nodes();
    let b = g.matrix();
    let mut a = DMatrix::<f64>::zeros(p, p);
    for v in g.dag().topological_order() {
        let j = v - 1;
        a[(j, j)] = 1.0;
        if cut.contains(&v) {
            continue;
        }
        for i in 0..p {
            let w = b[(i, j)];
            if w != 0.0 {
                let row = a.row(i).clone_owned() * w;
                let mut target = a.row_mut(j);
                target += row;
            }
        }
    }
    a
}

fn covariance_from(a: &DMatrix<f64>, omega: &DVector<f64>) -> CovMatrix {
    let scaled = a * DMatrix::from_diagonal(omega);
    CovMatrix::from_matrix(&scaled * a.transpose()).expect("A Ω Aᵀ is symmetric")
}

/// `Σ = (I − Bᵀ)⁻¹ Cov(ε) (I − Bᵀ)⁻ᵀ`.
pub fn true_covariance(sem: &LinearSem) -> CovMatrix {
    covariance_from(&total_effect_matrix(&sem.graph, &[]), &sem.error_variances())
}

/// Covariance after a point intervention on `targets`: their incoming edges are removed.
pub fn intervened_covariance(sem: &LinearSem, targets: &[usize]) -> Result<CovMatrix> {
    let p = sem.num_nodes();
    check_distinct(targets, p)?;
    Ok(covariance_from(&total_effect_matrix(&sem.graph, targets), &sem.error_variances()))
}

fn check_distinct(nodes: &[usize], p: usize) -> Result<()> {
    for (k, &v) in nodes.iter().enumerate() {
        if v == 0 || v > p {
            return Err(Error::NodeOutOfRange { node: v, p });
        }
        if nodes[..k].contains(&v) {
            return Err(Error::InvalidArgument(format!("node {v} listed twice")));
        }
    }
    Ok(())
}

/// `n × p` matrix of i.i.d. draws, reproducible for a given seed.
pub fn sample(sem: &LinearSem, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(sem, n, &mut rng)
}

pub(crate) fn sample_with<R: Rng + ?Sized>(sem: &LinearSem, n: usize, rng: &mut R) -> DMatrix<f64> {
    let p = sem.num_nodes();
    let order = sem.graph.dag().topological_order();
    let samplers: Vec<ErrorSampler> = sem.errors.iter().map(ErrorDist::sampler).collect();
    let parents: Vec<Vec<(usize, f64)>> = (1..=p)
        .map(|v| {
            sem.graph
                .dag()
                .parents(v)
                .unwrap()
                .into_iter()
                .map(|u| (u - 1, sem.graph.weight(u, v)))
                .collect()
        })
        .collect();
    let mut data = DMatrix::<f64>::zeros(n, p);
    let mut row = vec![0.0; p];
    for r in 0..n {
        for &v in &order {
            let j = v - 1;
            let mut x = samplers[j].draw(rng);
            for &(u, w) in &parents[j] {
                x += w * row[u];
            }
            row[j] = x;
        }
        for j in 0..p {
            data[(r, j)] = row[j];
        }
    }
    data
}

/// Total joint effect of `targets` on `response` by summing weight products
/// over directed paths; paths through another target contribute nothing.
pub fn path_effect(g: &WeightedDag, targets: &[usize], response: usize) -> Result<Vec<f64>> {
    let p = g.num_nodes();
    check_distinct(targets, p)?;
    if response == 0 || response > p {
        return Err(Error::NodeOutOfRange { node: response, p });
    }
    if targets.contains(&response) {
        return Err(Error::InvalidArgument(format!("response {response} is also a target")));
    }
    let order = g.dag().topological_order();
    let b = g.matrix();
    Ok(targets
        .iter()
        .map(|&t| {
            // reach[v] = summed path weight from t to v avoiding other targets
            let mut reach = vec![0.0; p];
            reach[t - 1] = 1.0;
            let start = order.iter().position(|&v| v == t).unwrap();
            for &v in &order[start + 1..] {
                if targets.contains(&v) {
                    continue;
                }
                let j = v - 1;
                reach[j] = (0..p).filter(|&i| b[(i, j)] != 0.0).map(|i| reach[i] * b[(i, j)]).sum();
            }
            reach[response - 1]
        })
        .collect())
}
