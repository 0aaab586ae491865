//! Lossless k-hop PAMs.
//!
//! Every realized k-hop relation chain is bound to its own prime in a
//! [`PathDict`] for that hop order, and a cell stores the product of the primes
//! of all k-hop walks between its endpoints (with multiplicity). Because of
//! unique factorization the cell decodes back to the exact walk multiset.
//!
//! Powers are built one hop at a time: for every pair `(i, j)` and every
//! intermediate node `c` with `P^k[i,c] ≠ 0` and `P[c,j] ≠ 0`, the chains of
//! `P^k[i,c]` are extended by each relation of `P[c,j]` (chaining) and the
//! extended chains are mapped to primes and multiplied together (aggregation).
//!
//! Cells are kept as sorted prime lists; [`LosslessPam::value`] materializes
//! the integer on demand.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::ingest::RelGraph;
use crate::pam::{BigPam, PamMode};
use crate::primes::{Chain, PathDict, PrimeStream, RelId};

/// How primes are bound to newly realized chains of hop order ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrimeAllocation {
    /// Draw the next prime of the caller's stream on first encounter during the
    /// row-major sweep. Sharing one stream with the relation primes makes every
    /// prime distinct across hop orders.
    #[default]
    Sequential,
    /// Bind each chain to the prime whose 0-based index is the chain's
    /// lexicographic rank among all `|R|^k` chains (`(r0,…,r0) → 2`). Each hop
    /// order starts again from 2, so values of different hop orders can coincide.
    Lexicographic,
}

impl fmt::Display for PrimeAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrimeAllocation::Sequential => "sequential",
            PrimeAllocation::Lexicographic => "lexicographic",
        })
    }
}

impl FromStr for PrimeAllocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(PrimeAllocation::Sequential),
            "lexicographic" => Ok(PrimeAllocation::Lexicographic),
            other => Err(Error::Invalid(format!("unknown prime allocation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LosslessOptions {
    pub allocation: PrimeAllocation,
    /// Upper bound on the number of stored prime factors per hop order.
    pub max_factors: usize,
    /// Upper bound on the lexicographic rank accepted by
    /// [`PrimeAllocation::Lexicographic`].
    pub max_rank: usize,
}

impl Default for LosslessOptions {
    fn default() -> Self {
        Self { allocation: PrimeAllocation::Sequential, max_factors: 10_000_000, max_rank: 10_000_000 }
    }
}

/// Sparse matrix whose cells are sorted multisets of primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LosslessPam {
    n: usize,
    k: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    cells: Vec<Vec<u64>>,
}

impl LosslessPam {
    /// The one-hop product matrix of `g`, with relation primes from `rel_dict`.
    pub fn from_graph(g: &RelGraph, rel_dict: &PathDict) -> Result<Self> {
        let mut cells: BTreeMap<(usize, usize), Vec<u64>> = BTreeMap::new();
        for t in &g.edges {
            let p =
                rel_dict.prime_of(&[t.r]).ok_or_else(|| Error::Invalid(format!("relation {} has no prime", t.r)))?;
            cells.entry((t.s, t.o)).or_default().push(p);
        }
        let mut rows: Vec<Vec<(usize, Vec<u64>)>> = vec![Vec::new(); g.num_nodes()];
        for ((i, j), mut f) in cells {
            f.sort_unstable();
            rows[i].push((j, f));
        }
        Ok(Self::from_rows(g.num_nodes(), 1, rows))
    }

    fn from_rows(n: usize, k: usize, rows: Vec<Vec<(usize, Vec<u64>)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut cells = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, f) in row {
                cols.push(j);
                cells.push(f);
            }
            row_ptr.push(cols.len());
        }
        Self { n, k, row_ptr, cols, cells }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nnz(&self) -> usize {
        self.cells.len()
    }

    pub fn total_factors(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[Vec<u64>]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.cells[a..b])
    }

    pub fn factors(&self, i: usize, j: usize) -> Option<&[u64]> {
        if i >= self.n {
            return None;
        }
        let (cols, cells) = self.row(i);
        cols.binary_search(&j).ok().map(|pos| cells[pos].as_slice())
    }

    pub fn value(&self, i: usize, j: usize) -> Option<BigUint> {
        self.factors(i, j).map(product)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &[u64])> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, cells) = self.row(i);
            cols.iter().zip(cells).map(move |(&j, f)| (i, j, f.as_slice()))
        })
    }

    /// Materializes every cell as an integer.
    pub fn to_pam(&self) -> BigPam {
        let entries = self.iter().map(|(i, j, f)| (i, j, product(f))).collect();
        BigPam::from_entries(self.n, self.k, PamMode::Lossless, entries).expect("cells are unique and in range")
    }

    /// Writes `%pam k=<k> mode=lossless n=<N>` then `row col f1,f2,…` lines.
    pub fn write_factors<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%pam k={} mode=lossless n={}", self.k, self.n)?;
        for (i, j, f) in self.iter() {
            let fs: Vec<String> = f.iter().map(u64::to_string).collect();
            writeln!(w, "{i} {j} {}", fs.join(","))?;
        }
        Ok(())
    }
}

fn product(factors: &[u64]) -> BigUint {
    factors.iter().fold(BigUint::one(), |acc, &p| acc * p)
}

/// A lossless matrix together with the chain dictionary of its hop order.
#[derive(Debug, Clone)]
pub struct LosslessLevel {
    pub pam: LosslessPam,
    pub dict: PathDict,
}

impl LosslessLevel {
    pub fn k(&self) -> usize {
        self.pam.k
    }
}

/// Encodes a multiset of chains as the product of their primes, binding new
/// primes from `stream` as needed. `None` stands for the empty multiset.
pub fn aggregate(paths: &[Chain], dict: &mut PathDict, stream: &mut PrimeStream) -> Result<Option<BigUint>> {
    if paths.is_empty() {
        return Ok(None);
    }
    let mut value = BigUint::one();
    for path in paths {
        value *= dict.assign_path(path, stream)?;
    }
    Ok(Some(value))
}

/// Extends every chain encoded in `k_value` by every relation encoded in
/// `one_hop_value`.
pub fn chain(k_value: &BigUint, one_hop_value: &BigUint, dict_k: &PathDict, dict_1: &PathDict) -> Result<Vec<Chain>> {
    let heads = dict_k.decode(k_value)?;
    let hops = dict_1.decode(one_hop_value)?;
    let mut out = Vec::with_capacity(heads.len() * hops.len());
    for head in &heads {
        for hop in &hops {
            let mut c = head.clone();
            c.extend_from_slice(hop);
            out.push(c);
        }
    }
    Ok(out)
}

struct Allocator<'a> {
    mode: PrimeAllocation,
    stream: &'a mut PrimeStream,
    lexicon: PrimeStream,
    num_relations: usize,
    max_rank: usize,
}

impl Allocator<'_> {
    fn prime_for(&mut self, dict: &mut PathDict, path: &[RelId]) -> Result<u64> {
        if let Some(p) = dict.prime_of(path) {
            return Ok(p);
        }
        match self.mode {
            PrimeAllocation::Sequential => dict.assign_path(path, self.stream),
            PrimeAllocation::Lexicographic => {
                let mut rank: usize = 0;
                for &r in path {
                    rank = rank
                        .checked_mul(self.num_relations)
                        .and_then(|x| x.checked_add(r as usize))
                        .filter(|&x| x <= self.max_rank)
                        .ok_or_else(|| Error::Resource {
                            k: path.len(),
                            msg: format!("lexicographic rank exceeds {}", self.max_rank),
                        })?;
                }
                let p = self.lexicon.nth(rank)?;
                dict.insert(path, p)?;
                Ok(p)
            }
        }
    }
}

/// Computes lossless `P¹ … P^k_target`.
///
/// `p1` is the one-hop product matrix and `dict_1` its relation dictionary.
/// With [`PrimeAllocation::Sequential`], `stream` must be the stream that
/// issued the relation primes so that new primes never collide with them.
pub fn lossless_power(
    p1: &LosslessPam,
    dict_1: &PathDict,
    k_target: usize,
    stream: &mut PrimeStream,
    opts: &LosslessOptions,
) -> Result<Vec<LosslessLevel>> {
    if k_target == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if p1.k != 1 || dict_1.k() != 1 {
        return Err(Error::Invalid("lossless powers start from a one-hop matrix".into()));
    }
    let mut alloc = Allocator {
        mode: opts.allocation,
        stream,
        lexicon: PrimeStream::new(),
        num_relations: dict_1.len(),
        max_rank: opts.max_rank,
    };
    let mut levels = vec![LosslessLevel { pam: p1.clone(), dict: dict_1.clone() }];
    for k in 1..k_target {
        let prev = levels.last().unwrap();
        let next = extend(prev, p1, dict_1, &mut alloc, opts.max_factors)?;
        log::debug!("lossless k={}: {} cells, {} chains", k + 1, next.pam.nnz(), next.dict.len());
        levels.push(next);
    }
    Ok(levels)
}

fn extend(
    prev: &LosslessLevel,
    p1: &LosslessPam,
    dict_1: &PathDict,
    alloc: &mut Allocator<'_>,
    max_factors: usize,
) -> Result<LosslessLevel> {
    let k = prev.pam.k + 1;
    let n = p1.n;
    let mut dict = PathDict::new(k);
    let mut rows = Vec::with_capacity(n);
    let mut total = 0usize;
    let mut path = Vec::with_capacity(k);
    for i in 0..n {
        // j -> intermediates, ascending because prev rows are sorted
        let mut via: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let (mids, _) = prev.pam.row(i);
        for &c in mids {
            for &j in p1.row(c).0 {
                via.entry(j).or_default().push(c);
            }
        }
        let mut row = Vec::with_capacity(via.len());
        for (j, mids) in via {
            let mut cell = Vec::new();
            for c in mids {
                let heads = prev.pam.factors(i, c).unwrap();
                let hops = p1.factors(c, j).unwrap();
                for &hp in heads {
                    let head = prev
                        .dict
                        .path_of(hp)
                        .ok_or_else(|| Error::UnknownFactor { value: hp.into(), factor: hp.into() })?;
                    for &rp in hops {
                        let rel = dict_1
                            .path_of(rp)
                            .ok_or_else(|| Error::UnknownFactor { value: rp.into(), factor: rp.into() })?;
                        path.clear();
                        path.extend_from_slice(head);
                        path.extend_from_slice(rel);
                        cell.push(alloc.prime_for(&mut dict, &path)?);
                    }
                }
            }
            total += cell.len();
            if total > max_factors {
                return Err(Error::Resource { k, msg: format!("more than {max_factors} path factors") });
            }
            cell.sort_unstable();
            row.push((j, cell));
        }
        rows.push(row);
    }
    Ok(LosslessLevel { pam: LosslessPam::from_rows(n, k, rows), dict })
}

/// The k-hop chains between `i` and `j` encoded in `level`; empty when the cell is absent.
pub fn decompose_cell(level: &LosslessLevel, i: usize, j: usize) -> Result<Vec<Chain>> {
    match level.pam.factors(i, j) {
        None => Ok(Vec::new()),
        Some(f) => f
            .iter()
            .map(|&p| {
                level
                    .dict
                    .path_of(p)
                    .map(<[RelId]>::to_vec)
                    .ok_or_else(|| Error::UnknownFactor { value: product(f), factor: p.into() })
            })
            .collect(),
    }
}

/// All directed k-hop walks from `i` to `j`, as relation chains, sorted.
pub fn extract_paths_for_pair(g: &RelGraph, i: usize, j: usize, k: usize) -> Vec<Chain> {
    let mut adj: Vec<Vec<(RelId, usize)>> = vec![Vec::new(); g.num_nodes()];
    for t in &g.edges {
        adj[t.s].push((t.r, t.o));
    }
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(k);
    walk(&adj, i, j, k, &mut stack, &mut out);
    out.sort();
    out
}

fn walk(adj: &[Vec<(RelId, usize)>], at: usize, target: usize, left: usize, stack: &mut Chain, out: &mut Vec<Chain>) {
    if left == 0 {
        if at == target {
            out.push(stack.clone());
        }
        return;
    }
    for &(r, next) in &adj[at] {
        stack.push(r);
        walk(adj, next, target, left - 1, stack, out);
        stack.pop();
    }
}
