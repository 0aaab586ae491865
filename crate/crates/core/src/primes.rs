//! Prime generation and the prime ↔ relation-chain dictionaries.
//!
//! Every relation, and every k-hop relation chain in lossless mode, is named by
//! a distinct prime. [`PrimeStream`] hands out primes in increasing order and
//! [`PathDict`] keeps the bijection between chains and the primes bound to them.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Identifier of a relation inside a [`crate::RelGraph`].
pub type RelId = u32;

/// A relation chain: the sequence of relations traversed by a walk.
pub type Chain = Vec<RelId>;

/// Incremental prime generator.
///
/// `generated` holds every prime found so far, in order; `cursor` is the index
/// of the next prime to issue. Primes below the cursor are never issued again.
#[derive(Debug, Clone, Default)]
pub struct PrimeStream {
    generated: Vec<u64>,
    cursor: usize,
}

impl PrimeStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// A stream whose first issued prime is the smallest prime `>= min`.
    pub fn starting_at(min: u64) -> Result<Self> {
        let mut stream = Self::new();
        loop {
            stream.ensure(stream.cursor + 1)?;
            if stream.generated[stream.cursor] >= min {
                return Ok(stream);
            }
            stream.cursor += 1;
        }
    }

    /// The stream used for relation primes: 2 is left unused, so the first
    /// relation is bound to 3.
    pub fn for_relations() -> Self {
        Self::starting_at(3).expect("small primes are always available")
    }

    pub fn next_prime(&mut self) -> Result<u64> {
        self.ensure(self.cursor + 1)?;
        let p = self.generated[self.cursor];
        self.cursor += 1;
        Ok(p)
    }

    /// Primes issued so far (skipped primes excluded).
    pub fn issued_count(&self) -> usize {
        self.cursor
    }

    /// The `n`-th prime, 0-based (`nth(0) == 2`), without issuing anything.
    pub fn nth(&mut self, n: usize) -> Result<u64> {
        self.ensure(n + 1)?;
        Ok(self.generated[n])
    }

    fn ensure(&mut self, len: usize) -> Result<()> {
        while self.generated.len() < len {
            let mut candidate = match self.generated.last() {
                None => 2,
                Some(2) => 3,
                Some(&p) => p
                    .checked_add(2)
                    .ok_or_else(|| Error::PrimeCapacity(format!("no prime above {p} fits in 64 bits")))?,
            };
            while !self.is_prime_known(candidate) {
                candidate = candidate
                    .checked_add(2)
                    .ok_or_else(|| Error::PrimeCapacity(format!("no prime above {candidate} fits in 64 bits")))?;
            }
            self.generated.push(candidate);
        }
        Ok(())
    }

    // Trial division by the primes found so far; they cover every divisor up
    // to sqrt(candidate) because candidates are tried in increasing order.
    fn is_prime_known(&self, candidate: u64) -> bool {
        for &p in &self.generated {
            if (p as u128) * (p as u128) > candidate as u128 {
                break;
            }
            if candidate.is_multiple_of(p) {
                return false;
            }
        }
        true
    }
}

/// Bijection between k-hop relation chains and primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDict {
    k: usize,
    forward: HashMap<Chain, u64>,
    inverse: BTreeMap<u64, Chain>,
}

impl PathDict {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "hop order must be positive");
        Self { k, forward: HashMap::new(), inverse: BTreeMap::new() }
    }

    /// φ₁ for `num_relations` relations, allocated in relation-index order.
    pub fn for_relations(num_relations: usize, stream: &mut PrimeStream) -> Result<Self> {
        let mut dict = Self::new(1);
        for r in 0..num_relations {
            dict.assign_path(&[r as RelId], stream)?;
        }
        Ok(dict)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.inverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inverse.is_empty()
    }

    pub fn prime_of(&self, path: &[RelId]) -> Option<u64> {
        self.forward.get(path).copied()
    }

    pub fn path_of(&self, prime: u64) -> Option<&[RelId]> {
        self.inverse.get(&prime).map(Vec::as_slice)
    }

    /// `(prime, chain)` pairs in ascending prime order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &[RelId])> + '_ {
        self.inverse.iter().map(|(&p, c)| (p, c.as_slice()))
    }

    /// Primes of a relation dictionary, indexed by relation id.
    pub fn relation_primes(&self) -> Vec<u64> {
        assert_eq!(self.k, 1, "relation primes come from a one-hop dictionary");
        let mut out = vec![0; self.len()];
        for (&p, chain) in &self.inverse {
            let r = chain[0] as usize;
            if r >= out.len() {
                out.resize(r + 1, 0);
            }
            out[r] = p;
        }
        out
    }

    /// Returns the prime bound to `path`, binding the next prime of `stream`
    /// if the path is new.
    pub fn assign_path(&mut self, path: &[RelId], stream: &mut PrimeStream) -> Result<u64> {
        self.check_len(path)?;
        if let Some(&p) = self.forward.get(path) {
            return Ok(p);
        }
        let p = stream.next_prime()?;
        self.bind(path.to_vec(), p)?;
        Ok(p)
    }

    /// Binds `path` to an explicit prime. Rebinding the same pair is a no-op.
    pub fn insert(&mut self, path: &[RelId], prime: u64) -> Result<()> {
        self.check_len(path)?;
        match self.forward.get(path) {
            Some(&p) if p == prime => Ok(()),
            Some(_) => Err(Error::Invalid(format!("path {path:?} is already bound"))),
            None => self.bind(path.to_vec(), prime),
        }
    }

    fn bind(&mut self, path: Chain, prime: u64) -> Result<()> {
        if self.inverse.contains_key(&prime) {
            return Err(Error::PrimeConflict { prime });
        }
        self.inverse.insert(prime, path.clone());
        self.forward.insert(path, prime);
        Ok(())
    }

    fn check_len(&self, path: &[RelId]) -> Result<()> {
        if path.len() != self.k {
            return Err(Error::PathLength { expected: self.k, got: path.len() });
        }
        Ok(())
    }

    /// Prime factors of `value` over this dictionary's primes, ascending, with
    /// multiplicity. Only the known primes are tried.
    pub fn factorize(&self, value: &BigUint) -> Result<Vec<u64>> {
        if *value < BigUint::from(2u32) {
            return Err(Error::NotDecodable(value.clone()));
        }
        let mut rest = value.clone();
        let mut factors = Vec::new();
        for &p in self.inverse.keys() {
            if rest.is_one() {
                break;
            }
            loop {
                let (q, r) = (&rest / p, &rest % p);
                if !r.is_zero() {
                    break;
                }
                factors.push(p);
                rest = q;
            }
        }
        if !rest.is_one() {
            return Err(Error::UnknownFactor { value: value.clone(), factor: smallest_factor(&rest) });
        }
        Ok(factors)
    }

    /// The multiset of chains encoded by `value`, ordered by their primes.
    pub fn decode(&self, value: &BigUint) -> Result<Vec<Chain>> {
        Ok(self.factorize(value)?.into_iter().map(|p| self.inverse[&p].clone()).collect())
    }

    pub fn decode_u64(&self, value: u64) -> Result<Vec<Chain>> {
        self.decode(&BigUint::from(value))
    }

    /// Writes `<prime>\t<rel_1>,…,<rel_k>` lines in ascending prime order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (p, chain) in &self.inverse {
            let rels: Vec<String> = chain.iter().map(|r| r.to_string()).collect();
            writeln!(w, "{p}\t{}", rels.join(","))?;
        }
        Ok(())
    }

    /// Parses the format produced by [`PathDict::write_to`]. The hop order is
    /// taken from `k`; every line must match it.
    pub fn read_from<R: BufRead>(r: R, k: usize) -> Result<Self> {
        let mut dict = Self::new(k);
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err =
                |msg: &str| Error::Parse { path: "<path dictionary>".into(), line: idx + 1, msg: msg.to_string() };
            let (prime, rels) = line.split_once('\t').ok_or_else(|| parse_err("missing tab"))?;
            let prime: u64 = prime.parse().map_err(|_| parse_err("bad prime"))?;
            let chain = rels
                .split(',')
                .map(|s| s.parse::<RelId>())
                .collect::<std::result::Result<Chain, _>>()
                .map_err(|_| parse_err("bad relation id"))?;
            dict.insert(&chain, prime)?;
        }
        Ok(dict)
    }
}

// Smallest prime factor of an undecodable remainder, for error messages only.
fn smallest_factor(n: &BigUint) -> BigUint {
    if let Some(small) = n.to_u64() {
        let mut d = 2u64;
        while d.saturating_mul(d) <= small && d < 1_000_000 {
            if small % d == 0 {
                return BigUint::from(d);
            }
            d += 1;
        }
        return BigUint::from(small);
    }
    for d in 2u64..1_000_000 {
        if (n % d).is_zero() {
            return BigUint::from(d);
        }
    }
    n.clone()
}
