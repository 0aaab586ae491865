//! Seeded workloads for the benchmarks.

use pam_core::{PathDict, PrimeStream, RelGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `edges` distinct uniform triples over `nodes` nodes and `relations` relations.
pub fn random_graph(nodes: usize, edges: usize, relations: usize, seed: u64) -> RelGraph {
    assert!(edges <= nodes * nodes * relations);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(edges);
    let mut triples = Vec::with_capacity(edges);
    while triples.len() < edges {
        let t = (rng.gen_range(0..nodes), rng.gen_range(0..relations as u32), rng.gen_range(0..nodes));
        if seen.insert(t) {
            triples.push(t);
        }
    }
    RelGraph::from_indices(nodes, relations, &triples)
}

/// Relation dictionary of `g` and the stream that issued it.
pub fn relation_primes(g: &RelGraph) -> (PathDict, PrimeStream) {
    let mut stream = PrimeStream::for_relations();
    let dict = PathDict::for_relations(g.num_relations(), &mut stream).expect("relation primes");
    (dict, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_seeded_and_exact() {
        let a = random_graph(100, 300, 4, 1);
        assert_eq!(a.num_edges(), 300);
        assert_eq!(a, random_graph(100, 300, 4, 1));
        assert_ne!(a, random_graph(100, 300, 4, 2));
    }
}
