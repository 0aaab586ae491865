#![allow(dead_code)]

pub mod synth;

use std::path::Path;

use num_bigint::BigUint;
use pam_core::ingest::parse_triples;
use pam_core::{PathDict, PrimeStream, RelGraph};
use rand::Rng;

/// Five nodes A..E and relations r1, r2, r3 (primes 3, 5, 7).
pub const FIG1_TSV: &str = "A\tr1\tB\nA\tr2\tC\nD\tr1\tA\nB\tr2\tE\nC\tr3\tB\nD\tr3\tB\nD\tr1\tC\nE\tr3\tD\n";

/// Three nodes; 0→1 carries both relations, 1→2 carries the first.
pub const FIG2_TSV: &str = "0\tg\t1\n0\tb\t1\n1\tg\t2\n";

pub const FIG1_P: [[u64; 5]; 5] = [[0, 3, 5, 0, 0], [0, 0, 0, 0, 5], [0, 7, 0, 0, 0], [3, 7, 3, 0, 0], [0, 0, 0, 7, 0]];

pub const FIG1_P2: [[u64; 5]; 5] =
    [[0, 35, 0, 0, 15], [0, 0, 0, 35, 0], [0, 0, 0, 0, 35], [0, 30, 15, 0, 35], [21, 49, 21, 0, 0]];

pub fn parse(text: &str) -> RelGraph {
    parse_triples(text.as_bytes(), Path::new("inline.tsv")).unwrap().graph
}

pub fn relation_dict(g: &RelGraph) -> (PathDict, PrimeStream) {
    let mut stream = PrimeStream::for_relations();
    let dict = PathDict::for_relations(g.num_relations(), &mut stream).unwrap();
    (dict, stream)
}

pub fn dense_u64(rows: &[[u64; 5]; 5]) -> Vec<Vec<u64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

/// Random graph; `multi` allows several relations on one ordered pair.
pub fn random_graph(rng: &mut impl Rng, n: usize, r: usize, density: f64, multi: bool) -> RelGraph {
    let mut triples = Vec::new();
    for s in 0..n {
        for o in 0..n {
            if multi {
                for rel in 0..r {
                    if rng.gen_bool(density / r as f64) {
                        triples.push((s, rel as u32, o));
                    }
                }
            } else if rng.gen_bool(density) {
                triples.push((s, rng.gen_range(0..r) as u32, o));
            }
        }
    }
    if triples.is_empty() {
        triples.push((0, 0, n - 1));
    }
    RelGraph::from_indices(n, r, &triples)
}

/// All k-hop walks `i → j` as relation chains, enumerated layer by layer.
pub fn oracle_walks(g: &RelGraph, i: usize, j: usize, k: usize) -> Vec<Vec<u32>> {
    let mut frontier: Vec<(usize, Vec<u32>)> = vec![(i, Vec::new())];
    for _ in 0..k {
        let mut next = Vec::new();
        for (at, chain) in &frontier {
            for e in g.edges.iter().filter(|e| e.s == *at) {
                let mut c = chain.clone();
                c.push(e.r);
                next.push((e.o, c));
            }
        }
        frontier = next;
    }
    let mut out: Vec<Vec<u32>> = frontier.into_iter().filter(|(at, _)| *at == j).map(|(_, c)| c).collect();
    out.sort();
    out
}

/// Σ over k-hop edge walks `i → j` of the product of the edge relation primes.
pub fn oracle_walk_sum(g: &RelGraph, primes: &[u64], i: usize, j: usize, k: usize) -> BigUint {
    fn go(g: &RelGraph, primes: &[u64], at: usize, j: usize, left: usize, acc: BigUint, total: &mut BigUint) {
        if left == 0 {
            if at == j {
                *total += acc;
            }
            return;
        }
        for e in g.edges.iter().filter(|e| e.s == at) {
            go(g, primes, e.o, j, left - 1, &acc * primes[e.r as usize], total);
        }
    }
    let mut total = BigUint::from(0u32);
    go(g, primes, i, j, k, BigUint::from(1u32), &mut total);
    total
}
