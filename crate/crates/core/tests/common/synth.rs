//! Synthetic graphs with a known answer for every downstream task.

use pam_core::{RelGraph, Triple};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Labeled nodes `0..n`; class `pos` iff the node has an outgoing `r1` edge.
/// Positives point to hub `n` by `r1`, negatives to hub `n + 1` by `r2`; both
/// hubs point to hub `n + 2` by `r3`.
pub fn separable_nodes(n: usize, seed: u64) -> (RelGraph, Vec<(usize, String)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = vec![(n, 2, n + 2), (n + 1, 2, n + 2)];
    let mut labels = Vec::new();
    for i in 0..n {
        if rng.gen_bool(0.5) || i == 0 {
            triples.push((i, 0, n));
            labels.push((i, "pos".to_string()));
        } else {
            triples.push((i, 1, n + 1));
            labels.push((i, "neg".to_string()));
        }
    }
    labels.shuffle(&mut rng);
    (RelGraph::from_indices(n + 3, 3, &triples), labels)
}

/// `m` disjoint triangles `a -r1-> b -r2-> c` closed by `a -r3-> c`.
pub fn closed_triangles(m: usize) -> RelGraph {
    let mut triples = Vec::new();
    for t in 0..m {
        let (a, b, c) = (3 * t, 3 * t + 1, 3 * t + 2);
        triples.extend([(a, 0, b), (b, 1, c), (a, 2, c)]);
    }
    RelGraph::from_indices(3 * m, 3, &triples)
}

/// Moves a seeded `fraction` of the `r3` edges of `g` into a query set.
/// Returns (training edges, queries).
pub fn hold_out_r3(g: &RelGraph, fraction: f64, seed: u64) -> (Vec<Triple>, Vec<Triple>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r3: Vec<Triple> = g.edges.iter().copied().filter(|e| e.r == 2).collect();
    r3.shuffle(&mut rng);
    let held = ((r3.len() as f64) * fraction).round().max(1.0) as usize;
    let queries: Vec<Triple> = r3[..held].to_vec();
    let train: Vec<Triple> = g.edges.iter().copied().filter(|e| !queries.contains(e)).collect();
    (train, queries)
}

pub type Bonds = Vec<(usize, &'static str, usize)>;

/// Random chains of `C`/`N` atoms with single/double bonds; the target is the
/// number of `C-Single-C` bonds. Returns (bonds, atom types, target).
pub fn molecule(rng: &mut impl Rng) -> (Bonds, Vec<&'static str>, f64) {
    let atoms = rng.gen_range(3..9);
    let types: Vec<&str> = (0..atoms).map(|_| if rng.gen_bool(0.7) { "C" } else { "N" }).collect();
    let mut edges = Vec::new();
    let mut target = 0.0;
    for i in 1..atoms {
        let bond = if rng.gen_bool(0.6) { "Single" } else { "Double" };
        edges.push((i - 1, bond, i));
        if bond == "Single" && types[i - 1] == "C" && types[i] == "C" {
            target += 1.0;
        }
    }
    (edges, types, target)
}
