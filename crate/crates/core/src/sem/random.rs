use rand::seq::SliceRandom;
use rand::Rng;

use super::LinearSem;
use crate::graph::WeightedDag;

/// Erdős–Rényi DAG over a random causal order. Each of the `p(p−1)/2`
/// forward pairs is an edge with probability `expected_degree / (p − 1)`;
/// weights are uniform on `[−1, −0.1] ∪ [0.1, 1]`.
pub fn random_weighted_dag<R: Rng + ?Sized>(p: usize, expected_degree: f64, rng: &mut R) -> WeightedDag {
    let mut order: Vec<usize> = (1..=p).collect();
    order.shuffle(rng);
    let prob = if p > 1 { (expected_degree / (p - 1) as f64).clamp(0.0, 1.0) } else { 0.0 };
    let mut edges = Vec::new();
    for a in 0..p {
        for b in (a + 1)..p {
            if rng.random_bool(prob) {
                let magnitude = rng.random_range(0.1..=1.0);
                let w = if rng.random_bool(0.5) { magnitude } else { -magnitude };
                edges.push((order[a], order[b], w));
            }
        }
    }
    WeightedDag::new(p, &edges).expect("edges follow a fixed order")
}

/// [`random_weighted_dag`] with standard Gaussian errors.
pub fn random_sem<R: Rng + ?Sized>(p: usize, expected_degree: f64, rng: &mut R) -> LinearSem {
    LinearSem::gaussian(random_weighted_dag(p, expected_degree, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weights_avoid_small_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = random_weighted_dag(10, 3.0, &mut rng);
            for (_, _, w) in g.weighted_edges() {
                assert!((0.1..=1.0).contains(&w.abs()));
            }
        }
    }

    #[test]
    fn average_degree_matches_parameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = 20;
        let reps = 400;
        let total: usize = (0..reps).map(|_| random_weighted_dag(p, 2.0, &mut rng).dag().num_edges()).sum();
        let degree = 2.0 * total as f64 / (reps * p) as f64;
        assert!((degree - 2.0).abs() < 0.1, "mean degree {degree}");
    }

    #[test]
    fn degenerate_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(random_weighted_dag(1, 2.0, &mut rng).dag().num_edges(), 0);
        assert_eq!(random_weighted_dag(5, 10.0, &mut rng).dag().num_edges(), 10);
    }
}
