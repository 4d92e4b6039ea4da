//! Seeded random graph generators used by tests, the CLI and the demo.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::Graph;

/// G(n, p): every pair is an edge independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("indices in range")
}

/// Random spanning tree (each node attaches to a uniformly chosen earlier
/// node, then labels are shuffled) plus G(n, p) edges on top. Always connected.
pub fn random_connected(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let labels = random_permutation(n, rng);
    let mut edges: Vec<(usize, usize)> = (1..n)
        .map(|v| (labels[rng.gen_range(0..v)], labels[v]))
        .collect();
    edges.extend(erdos_renyi(n, p, rng).edges());
    Graph::from_edges(n, &edges).expect("indices in range")
}

pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::connected_components;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn connected_generator_is_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..30 {
            let g = random_connected(n, 0.05, &mut rng);
            assert_eq!(connected_components(&g).count(), 1);
        }
    }

    #[test]
    fn density_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(erdos_renyi(6, 0.0, &mut rng).edge_count(), 0);
        assert_eq!(erdos_renyi(6, 1.0, &mut rng), Graph::complete(6));
    }
}
