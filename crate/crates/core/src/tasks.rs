//! Desk-scale learners and metrics on top of bag-of-paths features.
//!
//! Models are deliberately simple and deterministic: cosine k-NN, a
//! minimum-norm linear least-squares fit, and a constant mean baseline.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::bop::{FeatureMatrix, SparseRow};
use crate::error::{Error, Result};
use crate::ingest::RelGraph;
use crate::lossless::extract_paths_for_pair;
use crate::pam::{CellValue, Pam};
use crate::primes::{Chain, PathDict, RelId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// Cosine k-nearest neighbours with similarity-weighted votes.
    Knn { neighbors: usize },
    /// Least squares with a bias term, solved in the dual with an SVD
    /// pseudo-inverse; `ridge` is added to the Gram diagonal.
    Linear { ridge: f64 },
    /// Predicts the training mean (regression only).
    Mean,
}

fn dot(a: &SparseRow, b: &SparseRow) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

fn norm(a: &SparseRow) -> f64 {
    a.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
}

/// Cosine similarity; zero when either row is all-zero.
pub fn cosine(a: &SparseRow, b: &SparseRow) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}

/// The `n` training rows most similar to `query` as `(index, cosine)`, most
/// similar first; ties go to the lower training index.
pub fn nearest(train: &[SparseRow], train_norms: &[f64], query: &SparseRow, n: usize) -> Vec<(usize, f64)> {
    let qn = norm(query);
    let mut sims: Vec<(usize, f64)> = train
        .iter()
        .zip(train_norms)
        .enumerate()
        .map(|(idx, (row, &rn))| (idx, if qn == 0.0 || rn == 0.0 { 0.0 } else { dot(query, row) / (qn * rn) }))
        .collect();
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    sims.truncate(n);
    sims
}

/// Similarity-weighted votes over `classes` labels; plain counts when every
/// similarity is zero.
fn weighted_votes(neigh: &[(usize, f64)], label: impl Fn(usize) -> usize, classes: usize) -> Vec<f64> {
    let mut votes = vec![0.0; classes];
    for &(idx, sim) in neigh {
        votes[label(idx)] += sim.max(0.0);
    }
    if votes.iter().all(|&v| v == 0.0) {
        for &(idx, _) in neigh {
            votes[label(idx)] += 1.0;
        }
    }
    votes
}

struct LinearFit {
    train: Vec<SparseRow>,
    coef: DMatrix<f64>,
}

impl LinearFit {
    fn fit(train: &[SparseRow], targets: &DMatrix<f64>, ridge: f64) -> Result<Self> {
        let n = train.len();
        let gram = DMatrix::from_fn(n, n, |i, j| dot(&train[i], &train[j]) + 1.0 + if i == j { ridge } else { 0.0 });
        let svd = gram.svd(true, true);
        let max_sv = svd.singular_values.max();
        let eps = max_sv * 1e-12 * n as f64;
        let pinv = svd.pseudo_inverse(eps).map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(Self { train: train.to_vec(), coef: pinv * targets })
    }

    fn predict(&self, row: &SparseRow) -> Vec<f64> {
        let k: Vec<f64> = self.train.iter().map(|t| dot(row, t) + 1.0).collect();
        (0..self.coef.ncols()).map(|c| k.iter().enumerate().map(|(i, &kv)| kv * self.coef[(i, c)]).sum()).collect()
    }
}

/// `(node, class)` pairs split into training and test sets.
#[derive(Debug, Clone, Default)]
pub struct LabeledNodes {
    pub train: Vec<(usize, String)>,
    pub test: Vec<(usize, String)>,
}

#[derive(Debug, Clone)]
pub struct ClassificationResult {
    pub accuracy: f64,
    pub predictions: Vec<String>,
    /// Test classes never seen in training.
    pub unseen_classes: Vec<String>,
}

/// Fits on the training nodes' rows and reports exact-match accuracy on the test nodes.
pub fn classify_nodes(rows: &[SparseRow], labels: &LabeledNodes, model: Model) -> Result<ClassificationResult> {
    if labels.train.is_empty() || labels.test.is_empty() {
        return Err(Error::Invalid("classification needs train and test nodes".into()));
    }
    for &(node, _) in labels.train.iter().chain(&labels.test) {
        if node >= rows.len() {
            return Err(Error::IndexOutOfRange { index: node, size: rows.len() });
        }
    }
    let classes: Vec<String> = {
        let mut c: Vec<String> = labels.train.iter().map(|l| l.1.clone()).collect();
        c.sort();
        c.dedup();
        c
    };
    let class_of = |name: &str| classes.binary_search_by(|c| c.as_str().cmp(name)).ok();
    let unseen_classes: Vec<String> = {
        let mut u: Vec<String> = labels.test.iter().filter(|l| class_of(&l.1).is_none()).map(|l| l.1.clone()).collect();
        u.sort();
        u.dedup();
        u
    };
    for c in &unseen_classes {
        log::warn!("class `{c}` appears in the test set but not in training");
    }
    let names = classes.clone();
    let train_rows: Vec<SparseRow> = labels.train.iter().map(|l| rows[l.0].clone()).collect();
    let train_y: Vec<usize> = labels.train.iter().map(|l| class_of(&l.1).unwrap()).collect();
    let predict: Box<dyn Fn(&SparseRow) -> usize> = match model {
        Model::Knn { neighbors } => {
            let norms: Vec<f64> = train_rows.iter().map(norm).collect();
            Box::new(move |q| {
                let neigh = nearest(&train_rows, &norms, q, neighbors.max(1));
                argmax_first(&weighted_votes(&neigh, |i| train_y[i], classes.len()))
            })
        }
        Model::Linear { ridge } => {
            let y = DMatrix::from_fn(train_y.len(), classes.len(), |i, c| if train_y[i] == c { 1.0 } else { 0.0 });
            let fit = LinearFit::fit(&train_rows, &y, ridge)?;
            Box::new(move |q| argmax_first(&fit.predict(q)))
        }
        Model::Mean => return Err(Error::Invalid("the mean baseline is for regression".into())),
    };
    let mut correct = 0;
    let mut predictions = Vec::with_capacity(labels.test.len());
    for (node, truth) in &labels.test {
        let c = predict(&rows[*node]);
        let name = names[c].clone();
        if &name == truth {
            correct += 1;
        }
        predictions.push(name);
    }
    Ok(ClassificationResult { accuracy: correct as f64 / labels.test.len() as f64, predictions, unseen_classes })
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-query rankings plus MRR and Hits@3.
#[derive(Debug, Clone)]
pub struct RankingResult {
    pub rankings: Vec<Vec<RelId>>,
    pub ranks: Vec<usize>,
    pub mrr: f64,
    pub hits_at_3: f64,
    /// Queries with no positively similar training pair, ranked by global
    /// relation frequency.
    pub fallbacks: usize,
}

/// Orders relations by descending score, ties by ascending relation index.
pub fn rank_relations(scores: &[f64]) -> Vec<RelId> {
    let mut order: Vec<RelId> = (0..scores.len() as RelId).collect();
    order.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    order
}

/// 1-based position of `truth` in `ranking`.
pub fn rank_of(ranking: &[RelId], truth: RelId) -> usize {
    ranking.iter().position(|&r| r == truth).map_or(ranking.len() + 1, |p| p + 1)
}

/// `(MRR, H@3)` over 1-based ranks.
pub fn mrr_hits3(ranks: &[usize]) -> (f64, f64) {
    if ranks.is_empty() {
        return (0.0, 0.0);
    }
    let q = ranks.len() as f64;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / q;
    let h3 = ranks.iter().filter(|&&r| r <= 3).count() as f64 / q;
    (mrr, h3)
}

/// Ranks every candidate relation for each query pair by the similarity-weighted
/// relation votes of its `neighbors` nearest training pairs. Queries with no
/// similar training pair are ranked by global relation frequency.
pub fn predict_relations(
    train_rows: &[SparseRow],
    train_labels: &[RelId],
    query_rows: &[SparseRow],
    query_truth: &[RelId],
    num_relations: usize,
    neighbors: usize,
) -> Result<RankingResult> {
    if train_rows.len() != train_labels.len() || query_rows.len() != query_truth.len() {
        return Err(Error::Invalid("rows and labels must align".into()));
    }
    if train_rows.is_empty() {
        return Err(Error::Invalid("relation prediction needs training pairs".into()));
    }
    let norms: Vec<f64> = train_rows.iter().map(norm).collect();
    let mut global = vec![0.0; num_relations];
    for &r in train_labels {
        global[r as usize] += 1.0;
    }
    let mut rankings = Vec::with_capacity(query_rows.len());
    let mut ranks = Vec::with_capacity(query_rows.len());
    let mut fallbacks = 0;
    for (q, &truth) in query_rows.iter().zip(query_truth) {
        let neigh = nearest(train_rows, &norms, q, neighbors.max(1));
        let ranking = if neigh.iter().all(|n| n.1 <= 0.0) {
            fallbacks += 1;
            rank_relations(&global)
        } else {
            let mut scores = vec![0.0; num_relations];
            for (idx, sim) in neigh {
                scores[train_labels[idx] as usize] += sim.max(0.0);
            }
            rank_relations(&scores)
        };
        ranks.push(rank_of(&ranking, truth));
        rankings.push(ranking);
    }
    let (mrr, hits_at_3) = mrr_hits3(&ranks);
    Ok(RankingResult { rankings, ranks, mrr, hits_at_3, fallbacks })
}

#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub per_target_mae: Vec<f64>,
    pub mean_mae: f64,
    pub predictions: Vec<Vec<f64>>,
}

/// Fits on training graphs and reports per-target mean absolute error on the test graphs.
pub fn regress_graphs(
    train_rows: &[SparseRow],
    train_targets: &[Vec<f64>],
    test_rows: &[SparseRow],
    test_targets: &[Vec<f64>],
    model: Model,
) -> Result<RegressionResult> {
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::Invalid("regression needs train and test graphs".into()));
    }
    if train_rows.len() != train_targets.len() || test_rows.len() != test_targets.len() {
        return Err(Error::Invalid("rows and targets must align".into()));
    }
    let arity = train_targets[0].len();
    for t in train_targets.iter().chain(test_targets) {
        if t.len() != arity {
            return Err(Error::Invalid("target arity differs between graphs".into()));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite target value".into()));
        }
    }
    let predictions: Vec<Vec<f64>> = match model {
        Model::Mean => {
            let mean: Vec<f64> = (0..arity)
                .map(|c| train_targets.iter().map(|t| t[c]).sum::<f64>() / train_targets.len() as f64)
                .collect();
            vec![mean; test_rows.len()]
        }
        Model::Knn { neighbors } => {
            let norms: Vec<f64> = train_rows.iter().map(norm).collect();
            test_rows
                .iter()
                .map(|q| {
                    let nb = nearest(train_rows, &norms, q, neighbors.max(1));
                    let total: f64 = nb.iter().map(|n| n.1.max(0.0)).sum();
                    let weight = |sim: f64| if total > 0.0 { sim.max(0.0) / total } else { 1.0 / nb.len() as f64 };
                    (0..arity).map(|c| nb.iter().map(|&(i, sim)| weight(sim) * train_targets[i][c]).sum()).collect()
                })
                .collect()
        }
        Model::Linear { ridge } => {
            let y = DMatrix::from_fn(train_targets.len(), arity, |i, c| train_targets[i][c]);
            let fit = LinearFit::fit(train_rows, &y, ridge)?;
            test_rows.iter().map(|q| fit.predict(q)).collect()
        }
    };
    let per_target_mae: Vec<f64> = (0..arity)
        .map(|c| {
            predictions.iter().zip(test_targets).map(|(p, t)| (p[c] - t[c]).abs()).sum::<f64>()
                / test_targets.len() as f64
        })
        .collect();
    let mean_mae = per_target_mae.iter().sum::<f64>() / arity as f64;
    Ok(RegressionResult { per_target_mae, mean_mae, predictions })
}

/// Pearson correlation, or `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx.sqrt() * syy.sqrt()))
    }
}

/// How the path derivation of an importance row was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Decoded from a lossless dictionary or a single relation prime.
    Exact,
    /// Product of several relation primes; hop order is not recoverable.
    Unordered,
    /// Walks extracted for one pair holding the value in a lossy matrix.
    Sampled,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct ImportanceRow {
    pub value: String,
    pub factorization: String,
    pub derivation: String,
    pub correlation: f64,
    pub zero_variance: bool,
    pub provenance: Provenance,
}

/// Sources used to explain feature values.
pub struct PathDecoder<'a> {
    pub relations: &'a PathDict,
    pub relation_labels: Vec<String>,
    /// Chain dictionaries of hop order ≥ 2, tried in order before the relations.
    pub chain_dicts: Vec<&'a PathDict>,
    pub sampler: Option<(&'a RelGraph, &'a [Pam<u64>])>,
}

impl<'a> PathDecoder<'a> {
    pub fn new(relations: &'a PathDict, graph_labels: &RelGraph) -> Self {
        let relation_labels = graph_labels.relations.iter().cloned().collect();
        Self { relations, relation_labels, chain_dicts: Vec::new(), sampler: None }
    }

    fn render(&self, chains: &[Chain]) -> String {
        let mut counts: BTreeMap<&Chain, usize> = BTreeMap::new();
        for c in chains {
            *counts.entry(c).or_insert(0) += 1;
        }
        counts
            .into_iter()
            .map(|(c, n)| {
                let body: Vec<&str> = c.iter().map(|&r| self.relation_labels[r as usize].as_str()).collect();
                let body = format!("({})", body.join(", "));
                if n > 1 {
                    format!("{n}*{body}")
                } else {
                    body
                }
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn explain(&self, value: &BigUint) -> (String, String, Provenance) {
        for dict in &self.chain_dicts {
            if let Ok(factors) = dict.factorize(value) {
                let chains: Vec<Chain> = factors.iter().map(|&p| dict.path_of(p).unwrap().to_vec()).collect();
                return (join_factors(&factors), self.render(&chains), Provenance::Exact);
            }
        }
        let rel_factors = self.relations.factorize(value);
        let factorization = match &rel_factors {
            Ok(f) => join_factors(f),
            Err(_) => display_factorization(value),
        };
        if let Some((graph, pams)) = self.sampler {
            if let Some(v) = value.to_u64() {
                for p in pams {
                    if let Some((i, j, _)) = p.iter().find(|&(_, _, x)| *x == v) {
                        let chains = extract_paths_for_pair(graph, i, j, p.k());
                        return (factorization, self.render(&chains), Provenance::Sampled);
                    }
                }
            }
        }
        match rel_factors {
            Ok(f) => {
                let chain: Chain = f.iter().map(|&p| self.relations.path_of(p).unwrap()[0]).collect();
                let prov = if f.len() == 1 { Provenance::Exact } else { Provenance::Unordered };
                (factorization, self.render(&[chain]), prov)
            }
            Err(_) => (factorization, "UNKNOWN".into(), Provenance::Unknown),
        }
    }
}

fn join_factors(f: &[u64]) -> String {
    f.iter().map(u64::to_string).collect::<Vec<_>>().join(" × ")
}

// Display-only factorization of values that do not decode over known primes.
fn display_factorization(value: &BigUint) -> String {
    let Some(mut v) = value.to_u64() else { return "?".into() };
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= v && d < 1_000_000 {
        while v % d == 0 {
            out.push(d);
            v /= d;
        }
        d += 1;
    }
    if v > 1 {
        out.push(v);
    }
    join_factors(&out)
}

/// Pearson correlation of each feature column with `target`, sorted by
/// decreasing absolute correlation (ties: vocabulary order).
pub fn path_importance<V>(
    features: &FeatureMatrix<V>,
    target: &[f64],
    decoder: &PathDecoder<'_>,
) -> Result<Vec<ImportanceRow>>
where
    V: CellValue + Into<BigUint>,
{
    if features.rows.len() != target.len() {
        return Err(Error::Invalid("feature rows and target must align".into()));
    }
    let mut out: Vec<ImportanceRow> = features
        .vocabulary
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let col = features.column(idx);
            let (correlation, zero_variance) = match pearson(&col, target) {
                Some(c) => (c, false),
                None => (0.0, true),
            };
            let big: BigUint = v.clone().into();
            let (factorization, derivation, provenance) = decoder.explain(&big);
            ImportanceRow { value: v.to_string(), factorization, derivation, correlation, zero_variance, provenance }
        })
        .collect();
    out.sort_by(|a, b| b.correlation.abs().total_cmp(&a.correlation.abs()));
    Ok(out)
}

/// `Value  Factorization  Path Derivation  Importance` TSV.
pub fn write_importance<W: Write>(mut w: W, rows: &[ImportanceRow]) -> Result<()> {
    writeln!(w, "Value\tFactorization\tPath Derivation\tImportance")?;
    for r in rows {
        let mut derivation = r.derivation.clone();
        match r.provenance {
            Provenance::Sampled => derivation.push_str(" [sampled]"),
            Provenance::Unordered => derivation.push_str(" [unordered]"),
            _ => {}
        }
        let corr = if r.zero_variance { "0 [zero-variance]".to_string() } else { format!("{:.6}", r.correlation) };
        writeln!(w, "{}\t{}\t{}\t{}", r.value, r.factorization, derivation, corr)?;
    }
    Ok(())
}
