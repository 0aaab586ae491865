//! Prime adjacency matrices and their plus-times powers.
//!
//! A one-hop PAM stores, for every connected pair `(i, j)`, either the product
//! ([`PamMode::Product`]) or the sum ([`PamMode::Sum`]) of the primes of all
//! relations from `i` to `j`. Powers are taken one hop at a time,
//! `P^(n+1) = P^n × P`, multiplying along walks and summing over parallel walks.

use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{CheckedAdd, CheckedMul, One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::RelGraph;

/// Integer type stored in PAM cells. Arithmetic is always checked.
pub trait CellValue:
    Clone + Eq + Ord + Hash + Display + Debug + Send + Sync + Zero + One + CheckedAdd + CheckedMul + From<u64> + FromStr
{
}

impl<T> CellValue for T where
    T: Clone
        + Eq
        + Ord
        + Hash
        + Display
        + Debug
        + Send
        + Sync
        + Zero
        + One
        + CheckedAdd
        + CheckedMul
        + From<u64>
        + FromStr
{
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PamMode {
    /// Product of relation primes per pair (lossless at one hop).
    Product,
    /// Sum of relation primes per pair; the default base for powers.
    Sum,
    /// Lossless k-hop encoding; see [`crate::lossless`].
    Lossless,
}

impl Display for PamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PamMode::Product => "product",
            PamMode::Sum => "sum",
            PamMode::Lossless => "lossless",
        })
    }
}

impl FromStr for PamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(PamMode::Product),
            "sum" => Ok(PamMode::Sum),
            "lossless" => Ok(PamMode::Lossless),
            other => Err(Error::Invalid(format!("unknown mode `{other}`"))),
        }
    }
}

/// Square sparse matrix in compressed sparse row layout. Zeros are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pam<V = u64> {
    n: usize,
    k: usize,
    mode: PamMode,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<V>,
}

/// Arbitrary-precision PAM.
pub type BigPam = Pam<BigUint>;

impl<V: CellValue> Pam<V> {
    /// Builds a matrix from `(row, col, value)` entries. Zero values are
    /// skipped; a repeated coordinate is an error.
    pub fn from_entries(n: usize, k: usize, mode: PamMode, mut entries: Vec<(usize, usize, V)>) -> Result<Self> {
        entries.retain(|e| !e.2.is_zero());
        entries.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        let mut prev: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), size: n });
            }
            if prev == Some((i, j)) {
                return Err(Error::Invalid(format!("duplicate entry ({i}, {j})")));
            }
            prev = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, k, mode, row_ptr, cols, vals })
    }

    fn from_rows(n: usize, k: usize, mode: PamMode, rows: Vec<Vec<(usize, V)>>) -> Self {
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, k, mode, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Hop order.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> PamMode {
        self.mode
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[V]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&V> {
        if i >= self.n {
            return None;
        }
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|pos| &vals[pos])
    }

    /// Nonzero cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &V)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, V)>> = vec![Vec::new(); self.n];
        for (i, j, v) in self.iter() {
            rows[j].push((i, v.clone()));
        }
        Self::from_rows(self.n, self.k, self.mode, rows)
    }

    /// Dense row-major copy; for tests and small displays.
    pub fn to_dense(&self) -> Vec<Vec<V>> {
        let mut out = vec![vec![V::zero(); self.n]; self.n];
        for (i, j, v) in self.iter() {
            out[i][j] = v.clone();
        }
        out
    }

    pub fn map_values<W: CellValue>(&self, f: impl Fn(&V) -> W) -> Pam<W> {
        Pam {
            n: self.n,
            k: self.k,
            mode: self.mode,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(f).collect(),
        }
    }

    /// Plus-times product `self × rhs`. The result has hop order
    /// `self.k + rhs.k` and keeps `self`'s mode. Rows are computed in parallel.
    pub fn multiply(&self, rhs: &Pam<V>) -> Result<Pam<V>> {
        if self.n != rhs.n {
            return Err(Error::Invalid(format!("dimension mismatch: {} vs {}", self.n, rhs.n)));
        }
        let n = self.n;
        let k = self.k + rhs.k;
        let rows: Vec<Result<Vec<(usize, V)>>> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![V::zero(); n], vec![false; n], Vec::<usize>::new()),
                |(acc, used, touched), i| {
                    let (a_cols, a_vals) = self.row(i);
                    for (&mid, a) in a_cols.iter().zip(a_vals) {
                        let (b_cols, b_vals) = rhs.row(mid);
                        for (&j, b) in b_cols.iter().zip(b_vals) {
                            let overflow = || Error::Overflow { k, row: i, col: j };
                            let term = a.checked_mul(b).ok_or_else(overflow)?;
                            if used[j] {
                                acc[j] = acc[j].checked_add(&term).ok_or_else(overflow)?;
                            } else {
                                used[j] = true;
                                touched.push(j);
                                acc[j] = term;
                            }
                        }
                    }
                    touched.sort_unstable();
                    let mut row = Vec::with_capacity(touched.len());
                    for &j in touched.iter() {
                        used[j] = false;
                        row.push((j, std::mem::replace(&mut acc[j], V::zero())));
                    }
                    touched.clear();
                    Ok(row)
                },
            )
            .collect();
        // first error in row order keeps failures deterministic
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows(n, k, self.mode, rows))
    }

    /// Writes `%pam k=<k> mode=<mode> n=<N>` followed by `row col value` lines.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%pam k={} mode={} n={}", self.k, self.mode, self.n)?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {v}")?;
        }
        Ok(())
    }

    pub fn read_coo<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let bad = |line: usize, msg: &str| Error::Parse { path: "<pam>".into(), line, msg: msg.into() };
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))??;
        let mut k = None;
        let mut mode = None;
        let mut n = None;
        for field in header.strip_prefix("%pam").ok_or_else(|| bad(1, "bad header"))?.split_whitespace() {
            match field.split_once('=') {
                Some(("k", v)) => k = v.parse().ok(),
                Some(("mode", v)) => mode = v.parse().ok(),
                Some(("n", v)) => n = v.parse().ok(),
                _ => return Err(bad(1, "bad header field")),
            }
        }
        let (k, mode, n) = match (k, mode, n) {
            (Some(k), Some(m), Some(n)) => (k, m, n),
            _ => return Err(bad(1, "incomplete header")),
        };
        let mut entries = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let parsed = (|| {
                let i = parts.next()?.parse().ok()?;
                let j = parts.next()?.parse().ok()?;
                let v = parts.next()?.parse::<V>().ok()?;
                Some((i, j, v))
            })();
            entries.push(parsed.ok_or_else(|| bad(idx + 2, "expected `row col value`"))?);
        }
        Self::from_entries(n, k, mode, entries)
    }
}

impl Pam<u64> {
    pub fn to_big(&self) -> BigPam {
        self.map_values(|&v| BigUint::from(v))
    }
}

/// Builds the one-hop PAM of `g`. `rel_primes[r]` is the prime of relation `r`.
/// `mode` must be [`PamMode::Product`] or [`PamMode::Sum`].
pub fn build_pam<V: CellValue>(g: &RelGraph, rel_primes: &[u64], mode: PamMode) -> Result<Pam<V>> {
    if g.edges.is_empty() {
        return Err(Error::Invalid("cannot build a PAM for a graph without edges".into()));
    }
    if mode == PamMode::Lossless {
        return Err(Error::Invalid("lossless matrices are built by the lossless module".into()));
    }
    let mut cells: BTreeMap<(usize, usize), V> = BTreeMap::new();
    for t in &g.edges {
        let p = V::from(rel_primes[t.r as usize]);
        let overflow = || Error::Overflow { k: 1, row: t.s, col: t.o };
        match cells.get_mut(&(t.s, t.o)) {
            None => {
                cells.insert((t.s, t.o), p);
            }
            Some(v) => {
                *v = match mode {
                    PamMode::Product => v.checked_mul(&p),
                    _ => v.checked_add(&p),
                }
                .ok_or_else(overflow)?;
            }
        }
    }
    let entries = cells.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    Pam::from_entries(g.num_nodes(), 1, mode, entries)
}

/// Returns `[P, P², …, P^k_target]`, each computed as the previous power times `p1`.
pub fn power<V: CellValue>(p1: &Pam<V>, k_target: usize) -> Result<Vec<Pam<V>>> {
    if k_target == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    if p1.k != 1 {
        return Err(Error::Invalid("power expects a one-hop matrix".into()));
    }
    let mut out = vec![p1.clone()];
    for _ in 1..k_target {
        let next = out.last().unwrap().multiply(p1)?;
        out.push(next);
    }
    Ok(out)
}

/// Value → number of nonzero cells holding it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueHistogram<V = u64>(pub BTreeMap<V, usize>);

impl<V: CellValue> ValueHistogram<V> {
    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn get(&self, v: &V) -> usize {
        self.0.get(v).copied().unwrap_or(0)
    }

    /// `value<TAB>count` lines in ascending value order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (v, c) in &self.0 {
            writeln!(w, "{v}\t{c}")?;
        }
        Ok(())
    }
}

pub fn histogram<V: CellValue>(p: &Pam<V>) -> ValueHistogram<V> {
    let mut out = BTreeMap::new();
    for v in &p.vals {
        *out.entry(v.clone()).or_insert(0) += 1;
    }
    ValueHistogram(out)
}

/// Nonzero entries of row `node` (keyed by column) and column `node` (keyed by row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSlices<V> {
    pub outgoing: BTreeMap<usize, V>,
    pub incoming: BTreeMap<usize, V>,
}

pub fn node_slices<V: CellValue>(p: &Pam<V>, node: usize) -> Result<NodeSlices<V>> {
    if node >= p.n {
        return Err(Error::IndexOutOfRange { index: node, size: p.n });
    }
    let (cols, vals) = p.row(node);
    let outgoing = cols.iter().copied().zip(vals.iter().cloned()).collect();
    let incoming = p.iter().filter(|&(_, j, _)| j == node).map(|(i, _, v)| (i, v.clone())).collect();
    Ok(NodeSlices { outgoing, incoming })
}
