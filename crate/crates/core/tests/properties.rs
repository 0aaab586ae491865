mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::*;
use num_bigint::BigUint;
use pam_core::bop::{bop_nodes, fit_tfidf};
use pam_core::ingest::parse_triples;
use pam_core::lossless::{aggregate, decompose_cell, lossless_power};
use pam_core::pam::{build_pam, power};
use pam_core::tasks::{mrr_hits3, pearson, rank_of, rank_relations};
use pam_core::{
    BopVector, LosslessOptions, LosslessPam, Pam, PamMode, PathDict, PrimeAllocation, PrimeStream, RelGraph,
    TfIdfParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_strategy(max_n: usize, max_r: usize, multi: bool) -> impl Strategy<Value = RelGraph> {
    (2..=max_n, 1..=max_r, 0.05f64..0.3, any::<u64>()).prop_map(move |(n, r, d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_graph(&mut rng, n, r, d, multi)
    })
}

fn primes_for(g: &RelGraph) -> (PathDict, PrimeStream, Vec<u64>) {
    let (dict, stream) = relation_dict(g);
    let primes = dict.relation_primes();
    (dict, stream, primes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_dict_is_a_bijection(paths in prop::collection::vec(prop::collection::vec(0u32..4, 3), 1..40)) {
        let mut stream = PrimeStream::new();
        let mut dict = PathDict::new(3);
        for p in &paths {
            let prime = dict.assign_path(p, &mut stream).unwrap();
            prop_assert_eq!(dict.path_of(prime), Some(p.as_slice()));
        }
        let mut seen: Vec<u64> = dict.iter().map(|(p, _)| p).collect();
        seen.dedup();
        prop_assert_eq!(seen.len(), dict.len());
    }

    #[test]
    fn decode_inverts_aggregate(paths in prop::collection::vec(prop::collection::vec(0u32..3, 2), 1..12)) {
        let mut stream = PrimeStream::new();
        let mut dict = PathDict::new(2);
        let value = aggregate(&paths, &mut dict, &mut stream).unwrap().unwrap();
        let mut expected = paths.clone();
        expected.sort();
        let mut got = dict.decode(&value).unwrap();
        got.sort();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn tsv_round_trip(g in graph_strategy(10, 3, true)) {
        let mut buf = Vec::new();
        g.write_tsv(&mut buf).unwrap();
        let back = parse_triples(buf.as_slice(), Path::new("rt.tsv")).unwrap().graph;
        prop_assert_eq!(back.num_edges(), g.num_edges());
        let relabel = |h: &RelGraph| {
            let mut v: Vec<(String, String, String)> = h
                .edges
                .iter()
                .map(|e| (h.entity_label(e.s).to_string(), h.relation_label(e.r).to_string(), h.entity_label(e.o).to_string()))
                .collect();
            v.sort();
            v
        };
        prop_assert_eq!(relabel(&back), relabel(&g));
    }

    #[test]
    fn product_equals_sum_without_multi_edges(g in graph_strategy(15, 4, false)) {
        let (_, _, primes) = primes_for(&g);
        let p: Pam = build_pam(&g, &primes, PamMode::Product).unwrap();
        let s: Pam = build_pam(&g, &primes, PamMode::Sum).unwrap();
        prop_assert_eq!(p.to_dense(), s.to_dense());
    }

    #[test]
    fn zero_pattern_is_reachability(g in graph_strategy(12, 3, true), k in 1usize..4) {
        let (_, _, primes) = primes_for(&g);
        let s: Pam = build_pam(&g, &primes, PamMode::Sum).unwrap();
        let pk = &power(&s, k).unwrap()[k - 1];
        let n = g.num_nodes();
        let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        for _ in 0..k {
            let mut next = vec![vec![false; n]; n];
            for (i, row) in reach.iter().enumerate() {
                for (c, &on) in row.iter().enumerate() {
                    if on {
                        for e in g.edges.iter().filter(|e| e.s == c) {
                            next[i][e.o] = true;
                        }
                    }
                }
            }
            reach = next;
        }
        for (i, row) in reach.iter().enumerate() {
            for (j, &on) in row.iter().enumerate() {
                prop_assert_eq!(pk.get(i, j).is_some(), on);
            }
        }
    }

    #[test]
    fn lossy_cells_match_walk_sums(g in graph_strategy(8, 3, true), k in 1usize..4) {
        let (_, _, primes) = primes_for(&g);
        let s = build_pam::<BigUint>(&g, &primes, PamMode::Sum).unwrap();
        let pk = &power(&s, k).unwrap()[k - 1];
        for i in 0..g.num_nodes() {
            for j in 0..g.num_nodes() {
                let want = oracle_walk_sum(&g, &primes, i, j, k);
                let got = pk.get(i, j).cloned().unwrap_or_default();
                prop_assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn lossless_cells_match_walks(g in graph_strategy(7, 3, true), k in 1usize..4, lex in any::<bool>()) {
        let (dict, mut stream, _) = primes_for(&g);
        let p1 = LosslessPam::from_graph(&g, &dict).unwrap();
        let allocation = if lex { PrimeAllocation::Lexicographic } else { PrimeAllocation::Sequential };
        let opts = LosslessOptions { allocation, ..Default::default() };
        let levels = lossless_power(&p1, &dict, k, &mut stream, &opts).unwrap();
        for i in 0..g.num_nodes() {
            for j in 0..g.num_nodes() {
                let mut got = decompose_cell(&levels[k - 1], i, j).unwrap();
                got.sort();
                prop_assert_eq!(got, oracle_walks(&g, i, j, k));
            }
        }
    }

    #[test]
    fn node_bags_count_every_cell_twice(g in graph_strategy(12, 3, true), k in 1usize..4) {
        let (_, _, primes) = primes_for(&g);
        let s: Pam = build_pam(&g, &primes, PamMode::Sum).unwrap();
        let ps = power(&s, k).unwrap();
        let total: u64 = bop_nodes(&ps).iter().map(BopVector::total).sum();
        let nnz: usize = ps.iter().map(Pam::nnz).sum();
        prop_assert_eq!(total, 2 * nnz as u64);
    }

    #[test]
    fn tfidf_is_order_invariant(
        bags in prop::collection::vec(prop::collection::vec(2u64..12, 0..8), 3..20),
        seed in any::<u64>(),
    ) {
        let bags: Vec<BopVector> = bags.into_iter().map(|b| b.into_iter().collect()).collect();
        let params = TfIdfParams { max_df_ratio: 1.0, ..Default::default() };
        let Ok(a) = fit_tfidf(&bags, params) else { return Ok(()) };
        let mut order: Vec<usize> = (0..bags.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let shuffled: Vec<BopVector> = order.iter().map(|&i| bags[i].clone()).collect();
        let b = fit_tfidf(&shuffled, params).unwrap();
        prop_assert_eq!(&a.vocabulary, &b.vocabulary);
        for (pos, &i) in order.iter().enumerate() {
            prop_assert_eq!(&a.rows[i], &b.rows[pos]);
        }
        for row in &a.rows {
            let norm: f64 = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            prop_assert!(row.is_empty() || (norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pearson_matches_two_pass(xs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..50)) {
        let (x, y): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        match pearson(&x, &y) {
            Some(r) => prop_assert!((r - sxy / (sxx * syy).sqrt()).abs() < 1e-9),
            None => prop_assert!(sxx == 0.0 || syy == 0.0),
        }
    }

    #[test]
    fn mrr_matches_slow_definition(tables in prop::collection::vec((prop::collection::vec(0u8..5, 4), 0u32..4), 1..30)) {
        let mut ranks = Vec::new();
        let mut slow_rr = 0.0;
        let mut slow_h3 = 0.0;
        for (scores, truth) in &tables {
            let s: Vec<f64> = scores.iter().map(|&v| f64::from(v)).collect();
            let r = rank_of(&rank_relations(&s), *truth);
            // rank = 1 + #(strictly better) + #(tied with smaller index)
            let t = *truth as usize;
            let slow = 1 + (0..4).filter(|&o| s[o] > s[t] || (s[o] == s[t] && o < t)).count();
            prop_assert_eq!(r, slow);
            slow_rr += 1.0 / slow as f64;
            slow_h3 += f64::from(u8::from(slow <= 3));
            ranks.push(r);
        }
        let (mrr, h3) = mrr_hits3(&ranks);
        prop_assert!((mrr - slow_rr / tables.len() as f64).abs() < 1e-12);
        prop_assert!((h3 - slow_h3 / tables.len() as f64).abs() < 1e-12);
    }
}

#[test]
fn bag_counts_agree_with_dense_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_graph(&mut rng, 20, 3, 0.2, true);
    let (_, _, primes) = primes_for(&g);
    let s: Pam = build_pam(&g, &primes, PamMode::Sum).unwrap();
    let ps = power(&s, 3).unwrap();
    let bags = bop_nodes(&ps);
    for (node, bag) in bags.iter().enumerate() {
        let mut want: BTreeMap<u64, u32> = BTreeMap::new();
        for p in &ps {
            let d = p.to_dense();
            for (x, row) in d.iter().enumerate() {
                for (y, &v) in row.iter().enumerate() {
                    if v != 0 {
                        *want.entry(v).or_default() += u32::from(x == node) + u32::from(y == node);
                    }
                }
            }
        }
        want.retain(|_, c| *c > 0);
        assert_eq!(bag.0, want);
    }
}
