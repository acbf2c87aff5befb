//! Total joint intervention effects in linear structural equation models.
//!
//! The crate covers the whole estimation chain:
//!
//! * [`graph`]: DAGs, partially directed graphs, Markov equivalence classes.
//! * [`sem`]: linear SEMs, exact covariances, the path-product oracle and
//!   nonparanormal transforms.
//! * [`opin`]: estimators that only need the parent sets of the intervention
//!   nodes (recursive regressions and modified Cholesky decompositions), plus
//!   their delta-method limit covariances.
//! * [`parentsets`]: jointly valid parent sets extracted from a CPDAG.
//! * [`learn`]: sample and rank-based correlation estimates, Fisher-z tests and
//!   a stable PC learner.
//! * [`pipeline`]: the end-to-end joint-IDA estimator and its summaries.
//!
//! Node indices are 1-based throughout the public API.

pub mod cov;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod learn;
pub(crate) mod linalg;
pub mod opin;
pub mod parentsets;
pub mod pipeline;
pub mod sem;
pub mod validate;

pub use cov::CovMatrix;
pub use error::{Error, Result};
pub use graph::{Dag, Pdag, UndirectedGraph, WeightedDag};
pub use opin::{EffectVector, Method, ParentAssignment};
pub use parentsets::ParentMultiset;
pub use pipeline::EffectMultiset;
pub use sem::LinearSem;
