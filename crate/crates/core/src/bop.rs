//! Bag-of-Paths features.
//!
//! A bag is the multiset of nonzero PAM values tied to an entity across hop
//! orders `1..=k`: the row and column of a node, the two cells of a node pair,
//! or every cell of a graph. Collections of bags are turned into weighted
//! feature rows with a document-frequency filtered tf-idf.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Display};
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::RelGraph;
use crate::pam::{CellValue, Pam};

/// Path value → occurrence count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BopVector<V = u64>(pub BTreeMap<V, u32>);

impl<V: CellValue> Default for BopVector<V> {
    fn default() -> Self {
        Self(BTreeMap::new())
    }
}

impl<V: CellValue> BopVector<V> {
    pub fn add(&mut self, value: V) {
        *self.0.entry(value).or_insert(0) += 1;
    }

    pub fn count(&self, value: &V) -> u32 {
        self.0.get(value).copied().unwrap_or(0)
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn merge(&mut self, other: &BopVector<V>) {
        for (v, &c) in &other.0 {
            *self.0.entry(v.clone()).or_insert(0) += c;
        }
    }

    /// The bag expanded to a sorted list of values.
    pub fn to_sorted_values(&self) -> Vec<V> {
        self.0.iter().flat_map(|(v, &c)| std::iter::repeat_n(v.clone(), c as usize)).collect()
    }
}

impl<V: CellValue> FromIterator<V> for BopVector<V> {
    fn from_iter<I: IntoIterator<Item = V>>(iter: I) -> Self {
        let mut bag = Self::default();
        for v in iter {
            bag.add(v);
        }
        bag
    }
}

fn check_node<V: CellValue>(pams: &[Pam<V>], node: usize) -> Result<()> {
    let n = pams.first().map_or(0, |p| p.n());
    if node >= n {
        return Err(Error::IndexOutOfRange { index: node, size: n });
    }
    Ok(())
}

/// Values of row `node` and column `node` of every matrix in `pams`.
pub fn bop_node<V: CellValue>(pams: &[Pam<V>], node: usize) -> Result<BopVector<V>> {
    check_node(pams, node)?;
    let mut bag = BopVector::default();
    for p in pams {
        for v in p.row(node).1 {
            bag.add(v.clone());
        }
        for (_, j, v) in p.iter() {
            if j == node {
                bag.add(v.clone());
            }
        }
    }
    Ok(bag)
}

/// [`bop_node`] for every node at once, in one pass per matrix.
pub fn bop_nodes<V: CellValue>(pams: &[Pam<V>]) -> Vec<BopVector<V>> {
    let n = pams.first().map_or(0, |p| p.n());
    let mut bags = vec![BopVector::default(); n];
    for p in pams {
        for (i, j, v) in p.iter() {
            bags[i].add(v.clone());
            bags[j].add(v.clone());
        }
    }
    bags
}

/// Forward (`head → tail`) and backward (`tail → head`) cell values across hops.
pub fn bop_pair<V: CellValue>(pams: &[Pam<V>], head: usize, tail: usize) -> Result<(BopVector<V>, BopVector<V>)> {
    check_node(pams, head)?;
    check_node(pams, tail)?;
    let mut fwd = BopVector::default();
    let mut bwd = BopVector::default();
    for p in pams {
        if let Some(v) = p.get(head, tail) {
            fwd.add(v.clone());
        }
        if let Some(v) = p.get(tail, head) {
            bwd.add(v.clone());
        }
    }
    Ok((fwd, bwd))
}

/// Every nonzero value of every matrix.
pub fn bop_graph<V: CellValue>(pams: &[Pam<V>]) -> BopVector<V> {
    pams.iter().flat_map(|p| p.iter().map(|(_, _, v)| v.clone())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `count · (1 + ln((1 + n) / (1 + df)))`, rows L2-normalized.
    TfIdf,
    /// Plain counts over the filtered vocabulary.
    RawCount,
}

impl Weighting {
    pub fn name(&self) -> &'static str {
        match self {
            Weighting::TfIdf => "tf*(1+ln((1+n)/(1+df)))+l2",
            Weighting::RawCount => "raw-count",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::TfIdf => "tfidf",
            Weighting::RawCount => "raw",
        })
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(Weighting::TfIdf),
            "raw" => Ok(Weighting::RawCount),
            other => Err(Error::Invalid(format!("unknown weighting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TfIdfParams {
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub vocab_cap: usize,
    pub weighting: Weighting,
}

impl Default for TfIdfParams {
    fn default() -> Self {
        Self { min_df: 2, max_df_ratio: 0.99, vocab_cap: 10_000, weighting: Weighting::TfIdf }
    }
}

/// Sparse row: `(feature index, weight)` sorted by index.
pub type SparseRow = Vec<(usize, f64)>;

/// Fitted vocabulary plus one weighted row per input bag.
#[derive(Debug, Clone)]
pub struct FeatureMatrix<V = u64> {
    pub vocabulary: Vec<V>,
    pub df: Vec<usize>,
    pub idf: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub params: TfIdfParams,
    index: HashMap<V, usize>,
}

/// Fits the vocabulary on `bags` and weights them.
///
/// A value is kept when it occurs in at least `min_df` bags and in at most
/// `max_df_ratio · |bags|` bags. The `vocab_cap` values with the largest total
/// count survive (ties: smaller value first); the vocabulary is then ordered by
/// ascending value.
pub fn fit_tfidf<V: CellValue>(bags: &[BopVector<V>], params: TfIdfParams) -> Result<FeatureMatrix<V>> {
    if bags.is_empty() {
        return Err(Error::Invalid("cannot fit features on an empty collection".into()));
    }
    let mut stats: BTreeMap<&V, (usize, u64)> = BTreeMap::new();
    for bag in bags {
        for (v, &c) in &bag.0 {
            let e = stats.entry(v).or_insert((0, 0));
            e.0 += 1;
            e.1 += c as u64;
        }
    }
    let max_df = params.max_df_ratio * bags.len() as f64;
    let mut kept: Vec<(&V, usize, u64)> = stats
        .into_iter()
        .filter(|&(_, (df, _))| df >= params.min_df && df as f64 <= max_df)
        .map(|(v, (df, cf))| (v, df, cf))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    // stable sort on an ascending-value list keeps the tie order
    kept.sort_by_key(|k| std::cmp::Reverse(k.2));
    kept.truncate(params.vocab_cap);
    kept.sort_by(|a, b| a.0.cmp(b.0));

    let n = bags.len() as f64;
    let vocabulary: Vec<V> = kept.iter().map(|k| k.0.clone()).collect();
    let df: Vec<usize> = kept.iter().map(|k| k.1).collect();
    let idf = df.iter().map(|&d| 1.0 + ((1.0 + n) / (1.0 + d as f64)).ln()).collect();
    let index = vocabulary.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let mut fm = FeatureMatrix { vocabulary, df, idf, rows: Vec::new(), params, index };
    fm.rows = fm.transform(bags);
    Ok(fm)
}

impl<V: CellValue> FeatureMatrix<V> {
    pub fn width(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn feature_index(&self, value: &V) -> Option<usize> {
        self.index.get(value).copied()
    }

    /// Weights new bags with the fitted vocabulary and idf.
    pub fn transform(&self, bags: &[BopVector<V>]) -> Vec<SparseRow> {
        bags.iter().map(|b| self.weigh(b)).collect()
    }

    fn weigh(&self, bag: &BopVector<V>) -> SparseRow {
        let mut row: SparseRow = bag.0.iter().filter_map(|(v, &c)| self.index.get(v).map(|&i| (i, c as f64))).collect();
        row.sort_by_key(|e| e.0);
        if self.params.weighting == Weighting::TfIdf {
            for e in &mut row {
                e.1 *= self.idf[e.0];
            }
            let norm = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            if norm > 0.0 {
                for e in &mut row {
                    e.1 /= norm;
                }
            }
        }
        row
    }

    /// Dense copy of one column.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.binary_search_by_key(&feature, |e| e.0).map_or(0.0, |pos| r[pos].1)).collect()
    }

    /// `feature_index<TAB>path_value` lines.
    pub fn write_vocabulary<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, v) in self.vocabulary.iter().enumerate() {
            writeln!(w, "{i}\t{v}")?;
        }
        Ok(())
    }
}

/// `α·F(x) + mean of F(n)` over the undirected 1-hop neighbours `n` of `x`.
/// Nodes without neighbours keep `α·F(x)`.
pub fn neighbor_aggregate<V: CellValue>(features: &FeatureMatrix<V>, g: &RelGraph, alpha: f64) -> FeatureMatrix<V> {
    assert_eq!(features.rows.len(), g.num_nodes(), "feature rows must align with graph nodes");
    let neighbors = g.undirected_neighbors();
    let rows = features
        .rows
        .iter()
        .zip(&neighbors)
        .map(|(own, nb)| {
            let mut acc: BTreeMap<usize, f64> = own.iter().map(|&(i, w)| (i, alpha * w)).collect();
            if !nb.is_empty() {
                let scale = 1.0 / nb.len() as f64;
                for &n in nb {
                    for &(i, w) in &features.rows[n] {
                        *acc.entry(i).or_insert(0.0) += scale * w;
                    }
                }
            }
            acc.into_iter().filter(|e| e.1 != 0.0).collect()
        })
        .collect();
    FeatureMatrix { rows, ..features.clone() }
}

/// Concatenates row blocks side by side; `widths[b]` offsets block `b + 1`.
pub fn hstack(blocks: &[&[SparseRow]], widths: &[usize]) -> Vec<SparseRow> {
    let n = blocks.first().map_or(0, |b| b.len());
    let mut out = vec![SparseRow::new(); n];
    let mut offset = 0;
    for (block, &width) in blocks.iter().zip(widths) {
        assert_eq!(block.len(), n, "blocks must have the same number of rows");
        for (dst, src) in out.iter_mut().zip(block.iter()) {
            dst.extend(src.iter().map(|&(i, w)| (offset + i, w)));
        }
        offset += width;
    }
    out
}

/// Writes `entity feature:weight …` rows preceded by `# key=value` metadata.
pub fn write_features<W: Write, L: Display>(
    mut w: W,
    rows: &[SparseRow],
    ids: &[L],
    meta: &[(&str, String)],
) -> Result<()> {
    for (key, value) in meta {
        writeln!(w, "# {key}={value}")?;
    }
    for (row, id) in rows.iter().zip(ids) {
        write!(w, "{id}")?;
        for (i, v) in row {
            write!(w, " {i}:{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Feature blocks of a directed node pair: forward cells, backward cells,
/// head node bag and tail node bag, each with its own vocabulary.
#[derive(Debug, Clone)]
pub struct PairFeatures<V = u64> {
    pub blocks: Vec<Option<FeatureMatrix<V>>>,
    pub rows: Vec<SparseRow>,
}

impl<V: CellValue> PairFeatures<V> {
    pub fn width(&self) -> usize {
        self.blocks.iter().map(|b| b.as_ref().map_or(0, FeatureMatrix::width)).sum()
    }
}

/// Builds `[F(h,t) ‖ F(t,h) ‖ F(h) ‖ F(t)]` rows for `pairs`, fitting each
/// block on the pairs themselves. A block whose vocabulary is filtered empty
/// contributes no columns.
pub fn pair_features<V: CellValue>(
    pams: &[Pam<V>],
    node_bags: &[BopVector<V>],
    pairs: &[(usize, usize)],
    params: TfIdfParams,
) -> Result<PairFeatures<V>> {
    let mut fwd = Vec::with_capacity(pairs.len());
    let mut bwd = Vec::with_capacity(pairs.len());
    let mut heads = Vec::with_capacity(pairs.len());
    let mut tails = Vec::with_capacity(pairs.len());
    for &(h, t) in pairs {
        let (f, b) = bop_pair(pams, h, t)?;
        fwd.push(f);
        bwd.push(b);
        heads.push(node_bags[h].clone());
        tails.push(node_bags[t].clone());
    }
    let mut blocks = Vec::new();
    for bags in [&fwd, &bwd, &heads, &tails] {
        blocks.push(match fit_tfidf(bags, params) {
            Ok(fm) => Some(fm),
            Err(Error::EmptyVocabulary) => None,
            Err(e) => return Err(e),
        });
    }
    if blocks.iter().all(Option::is_none) {
        return Err(Error::EmptyVocabulary);
    }
    let empty = vec![SparseRow::new(); pairs.len()];
    let row_blocks: Vec<&[SparseRow]> =
        blocks.iter().map(|b| b.as_ref().map_or(empty.as_slice(), |fm| fm.rows.as_slice())).collect();
    let widths: Vec<usize> = blocks.iter().map(|b| b.as_ref().map_or(0, FeatureMatrix::width)).collect();
    let rows = hstack(&row_blocks, &widths);
    Ok(PairFeatures { blocks, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pam::{build_pam, PamMode};

    fn bag(values: &[u64]) -> BopVector {
        values.iter().copied().collect()
    }

    #[test]
    fn identical_bags_share_vocabulary() {
        let params = TfIdfParams { max_df_ratio: 1.0, ..Default::default() };
        let fm = fit_tfidf(&[bag(&[3]), bag(&[3])], params).unwrap();
        assert_eq!(fm.vocabulary, vec![3]);
        assert!(fm.rows.iter().all(|r| r.len() == 1 && r[0].1 > 0.0));
    }

    #[test]
    fn rare_path_is_dropped() {
        let mut bags: Vec<BopVector> = (0..10).map(|_| bag(&[5])).collect();
        bags[0].add(7);
        let fm = fit_tfidf(&bags, TfIdfParams { max_df_ratio: 1.0, ..Default::default() }).unwrap();
        assert_eq!(fm.vocabulary, vec![5]);
    }

    #[test]
    fn ubiquitous_path_is_dropped() {
        let mut bags: Vec<BopVector> = (0..200).map(|_| bag(&[3])).collect();
        bags[0].add(5);
        bags[1].add(5);
        let fm = fit_tfidf(&bags, TfIdfParams::default()).unwrap();
        assert_eq!(fm.vocabulary, vec![5]);
    }

    #[test]
    fn everything_filtered_is_an_error() {
        let bags = vec![bag(&[3]), bag(&[5])];
        assert!(matches!(fit_tfidf(&bags, TfIdfParams::default()), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn cap_keeps_most_frequent_then_smallest() {
        let bags = vec![bag(&[3, 5, 5, 7, 11]), bag(&[3, 5, 7, 11, 11])];
        let params = TfIdfParams { max_df_ratio: 1.0, vocab_cap: 2, ..Default::default() };
        let fm = fit_tfidf(&bags, params).unwrap();
        // 5 and 11 have total count 3; 3 and 7 have 2
        assert_eq!(fm.vocabulary, vec![5, 11]);
        let params = TfIdfParams { vocab_cap: 3, ..params };
        assert_eq!(fit_tfidf(&bags, params).unwrap().vocabulary, vec![3, 5, 11]);
    }

    #[test]
    fn tfidf_formula_and_norm() {
        let bags = vec![bag(&[3, 3, 5]), bag(&[3]), bag(&[5, 7]), bag(&[7])];
        let params = TfIdfParams { max_df_ratio: 1.0, ..Default::default() };
        let fm = fit_tfidf(&bags, params).unwrap();
        let idf = |df: f64| 1.0 + (5.0 / (1.0 + df)).ln();
        let (a, b) = (2.0 * idf(2.0), idf(2.0));
        let norm = (a * a + b * b).sqrt();
        assert!((fm.rows[0][0].1 - a / norm).abs() < 1e-12);
        assert!((fm.rows[0][1].1 - b / norm).abs() < 1e-12);
        for r in &fm.rows {
            let n: f64 = r.iter().map(|e| e.1 * e.1).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_node() {
        let g = RelGraph::from_indices(2, 1, &[(0, 0, 1)]);
        let p: Pam = build_pam(&g, &[3], PamMode::Sum).unwrap();
        assert!(bop_node(std::slice::from_ref(&p), 2).is_err());
        assert!(bop_pair(&[p], 0, 5).is_err());
    }

    #[test]
    fn single_outgoing_edge() {
        let g = RelGraph::from_indices(3, 1, &[(0, 0, 1)]);
        let p: Pam = build_pam(&g, &[3], PamMode::Sum).unwrap();
        assert_eq!(bop_node(std::slice::from_ref(&p), 0).unwrap(), bag(&[3]));
        assert!(bop_node(std::slice::from_ref(&p), 2).unwrap().is_empty());
        let (f, b) = bop_pair(&[p], 2, 0).unwrap();
        assert!(f.is_empty() && b.is_empty());
    }

    fn unit_features(rows: Vec<SparseRow>) -> FeatureMatrix {
        let bags = vec![bag(&[3]), bag(&[3])];
        let fm = fit_tfidf(&bags, TfIdfParams { max_df_ratio: 1.0, ..Default::default() }).unwrap();
        FeatureMatrix { rows, ..fm }
    }

    #[test]
    fn aggregate_single_neighbor_with_equal_row() {
        let g = RelGraph::from_indices(2, 1, &[(0, 0, 1)]);
        let fm = unit_features(vec![vec![(0, 0.5)], vec![(0, 0.5)]]);
        let out = neighbor_aggregate(&fm, &g, 1.0);
        assert_eq!(out.rows[0], vec![(0, 1.0)]);
    }

    #[test]
    fn aggregate_isolated_node_scales() {
        let g = RelGraph::from_indices(2, 1, &[(0, 0, 0)]);
        let fm = unit_features(vec![vec![(0, 0.25)], vec![(0, 0.75)]]);
        let out = neighbor_aggregate(&fm, &g, 2.0);
        assert_eq!(out.rows[1], vec![(0, 1.5)]);
        // self-loops are not neighbours
        assert_eq!(out.rows[0], vec![(0, 0.5)]);
    }

    #[test]
    fn aggregate_path_graph_middle() {
        // a - b - c with rows e0, e1, e2 (distinct unit vectors)
        let g = RelGraph::from_indices(3, 1, &[(0, 0, 1), (1, 0, 2)]);
        let mut fm = unit_features(vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]]);
        fm.vocabulary = vec![3, 5, 7];
        let out = neighbor_aggregate(&fm, &g, 2.0);
        // 2·e1 + (e0 + e2)/2
        assert_eq!(out.rows[1], vec![(0, 0.5), (1, 2.0), (2, 0.5)]);
        // end node: 2·e0 + e1
        assert_eq!(out.rows[0], vec![(0, 2.0), (1, 1.0)]);
    }

    #[test]
    fn hstack_offsets() {
        let a = vec![vec![(0, 1.0)], vec![]];
        let b = vec![vec![(1, 2.0)], vec![(0, 3.0)]];
        let out = hstack(&[&a, &b], &[2, 2]);
        assert_eq!(out, vec![vec![(0, 1.0), (3, 2.0)], vec![(2, 3.0)]]);
    }
}
