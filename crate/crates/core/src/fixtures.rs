//! Small reference graphs with hand-checkable answers, shared by tests,
//! benchmarks and the `validate` command.

use crate::graph::{Pdag, WeightedDag};
use crate::sem::LinearSem;

/// Six-node weighted DAG with causal order (5, 1, 3, 4, 2, 6).
///
/// Total effect of 1 on 6 is 1.49; holding 2 fixed, the joint effect of
/// (1, 2) on 6 is (0.99, 0.4).
pub fn six_node_weighted_dag() -> WeightedDag {
    WeightedDag::new(
        6,
        &[
            (5, 1, 0.2),
            (1, 3, 1.1),
            (1, 4, 0.3),
            (3, 4, 0.8),
            (5, 4, 0.7),
            (3, 2, 0.6),
            (4, 2, 0.5),
            (2, 6, 0.4),
            (3, 6, 0.9),
        ],
    )
    .expect("fixture is a valid weighted DAG")
}

/// [`six_node_weighted_dag`] with independent standard Gaussian errors.
pub fn six_node_sem() -> LinearSem {
    LinearSem::gaussian(six_node_weighted_dag())
}

/// The CPDAG `1 – 3 – 2`.
pub fn three_node_chain_cpdag() -> Pdag {
    Pdag::new(3, [], [(1, 3), (2, 3)]).expect("fixture is a valid PDAG")
}

/// Eight-node CPDAG with twelve member DAGs: the collider `1 → 7 ← 3`
/// feeding `7 → 2`, `7 → 6`, and undirected components `1 – 4 – 3`,
/// `2 – 6`, `5 – 8`.
pub fn eight_node_cpdag() -> Pdag {
    Pdag::new(8, [(1, 7), (3, 7), (7, 2), (7, 6)], [(1, 4), (3, 4), (2, 6), (5, 8)])
        .expect("fixture is a valid PDAG")
}
