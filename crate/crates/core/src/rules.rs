//! Horn rules `Path^k(X, Y) → r_H(X, Y)` mined from PAM lookups.
//!
//! Every pair with a nonzero k-hop cell is a body instance; the head relations
//! it supports are the relation primes dividing the one-hop product cell of the
//! same pair. Counting both over all pairs gives exact support and confidence.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::lossless::LosslessLevel;
use crate::pam::{CellValue, Pam, PamMode};
use crate::primes::Chain;

/// Body of a rule: a raw k-hop value (lossy) or one decoded chain (lossless).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleBody {
    Value(String),
    Chain { prime: u64, chain: Chain },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub body: RuleBody,
    pub head_prime: u64,
    pub support: usize,
    pub body_count: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    pub k: usize,
    /// Lossy bodies may stand for several chains that share one value.
    pub lossy: bool,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, Copy)]
pub struct RuleThresholds {
    pub min_support: usize,
    pub min_confidence: f64,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        Self { min_support: 1, min_confidence: 0.0 }
    }
}

fn check(p1: &Pam<u64>, n: usize, k: usize) -> Result<()> {
    if p1.k() != 1 || p1.mode() != PamMode::Product {
        return Err(Error::Invalid("rule heads need the one-hop product matrix".into()));
    }
    if p1.n() != n {
        return Err(Error::Invalid(format!("dimension mismatch: {} vs {n}", p1.n())));
    }
    if k == 0 {
        return Err(Error::Invalid("body hop order must be positive".into()));
    }
    Ok(())
}

fn mine<B: Ord + Clone>(
    p1: &Pam<u64>,
    head_primes: &[u64],
    bodies: impl Iterator<Item = (usize, usize, Vec<B>)>,
    thresholds: RuleThresholds,
) -> Vec<(B, u64, usize, usize)> {
    let mut body_count: BTreeMap<B, usize> = BTreeMap::new();
    let mut support: BTreeMap<(B, u64), usize> = BTreeMap::new();
    for (x, y, keys) in bodies {
        let heads: Vec<u64> = match p1.get(x, y) {
            Some(&cell) => head_primes.iter().copied().filter(|&h| cell % h == 0).collect(),
            None => Vec::new(),
        };
        for b in keys {
            *body_count.entry(b.clone()).or_insert(0) += 1;
            for &h in &heads {
                *support.entry((b.clone(), h)).or_insert(0) += 1;
            }
        }
    }
    support
        .into_iter()
        .filter_map(|((b, h), s)| {
            let bc = body_count[&b];
            let conf = s as f64 / bc as f64;
            (s >= thresholds.min_support && conf >= thresholds.min_confidence).then_some((b, h, s, bc))
        })
        .collect()
}

fn finish(k: usize, lossy: bool, mut rules: Vec<Rule>) -> RuleSet {
    rules.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(b.support.cmp(&a.support))
            .then(a.body.cmp(&b.body))
            .then(a.head_prime.cmp(&b.head_prime))
    });
    RuleSet { k, lossy, rules }
}

/// Rules with raw k-hop values as bodies. `head_primes` are the relation primes.
pub fn mine_rules<V: CellValue>(
    p1: &Pam<u64>,
    pk: &Pam<V>,
    head_primes: &[u64],
    thresholds: RuleThresholds,
) -> Result<RuleSet> {
    check(p1, pk.n(), pk.k())?;
    let bodies = pk.iter().map(|(i, j, v)| (i, j, vec![v.clone()]));
    let rules = mine(p1, head_primes, bodies, thresholds)
        .into_iter()
        .map(|(b, h, s, bc)| Rule {
            body: RuleBody::Value(b.to_string()),
            head_prime: h,
            support: s,
            body_count: bc,
            confidence: s as f64 / bc as f64,
        })
        .collect();
    Ok(finish(pk.k(), pk.mode() != PamMode::Lossless, rules))
}

/// Rules with single chains as bodies, read from a lossless level. A pair
/// counts once per distinct chain it realizes.
pub fn mine_rules_lossless(
    p1: &Pam<u64>,
    level: &LosslessLevel,
    head_primes: &[u64],
    thresholds: RuleThresholds,
) -> Result<RuleSet> {
    check(p1, level.pam.n(), level.k())?;
    let bodies = level.pam.iter().map(|(i, j, f)| {
        let mut distinct = f.to_vec();
        distinct.dedup();
        (i, j, distinct)
    });
    let rules = mine(p1, head_primes, bodies, thresholds)
        .into_iter()
        .map(|(prime, h, s, bc)| Rule {
            body: RuleBody::Chain { prime, chain: level.dict.path_of(prime).unwrap().to_vec() },
            head_prime: h,
            support: s,
            body_count: bc,
            confidence: s as f64 / bc as f64,
        })
        .collect();
    Ok(finish(level.k(), false, rules))
}

impl RuleSet {
    /// `body_value body_chain_or_UNKNOWN head_relation support body_count confidence`
    /// rows. `rel_label` maps a head prime to its relation label and `chain_label`
    /// renders a chain.
    pub fn write_tsv<W: Write>(
        &self,
        mut w: W,
        rel_label: impl Fn(u64) -> String,
        chain_label: impl Fn(&Chain) -> String,
    ) -> Result<()> {
        writeln!(w, "body_value\tbody_chain\thead_relation\tsupport\tbody_count\tconfidence")?;
        for r in &self.rules {
            let (value, chain) = match &r.body {
                RuleBody::Value(v) => (v.clone(), "UNKNOWN".to_string()),
                RuleBody::Chain { prime, chain } => (prime.to_string(), chain_label(chain)),
            };
            writeln!(
                w,
                "{value}\t{chain}\t{}\t{}\t{}\t{}",
                rel_label(r.head_prime),
                r.support,
                r.body_count,
                r.confidence
            )?;
        }
        Ok(())
    }

    pub fn find(&self, body_value: &BigUint, head_prime: u64) -> Option<&Rule> {
        let key = body_value.to_string();
        self.rules.iter().find(|r| {
            r.head_prime == head_prime
                && match &r.body {
                    RuleBody::Value(v) => *v == key,
                    RuleBody::Chain { prime, .. } => prime.to_string() == key,
                }
        })
    }
}
