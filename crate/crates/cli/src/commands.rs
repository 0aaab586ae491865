//! Subcommand pipelines: load, build powers, extract features, run a task, write files.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use num_bigint::BigUint;
use pam_core::bop::{bop_graph, bop_nodes, fit_tfidf, neighbor_aggregate, pair_features, write_features};
use pam_core::ingest::{load_collection, load_splits, load_triples, GraphCollection};
use pam_core::lossless::{decompose_cell, extract_paths_for_pair, lossless_power};
use pam_core::pam::{build_pam, histogram, power};
use pam_core::rules::{mine_rules, mine_rules_lossless};
use pam_core::tasks::{
    classify_nodes, path_importance, predict_relations, regress_graphs, write_importance, LabeledNodes, PathDecoder,
};
use pam_core::{
    BopVector, CellValue, Chain, LosslessLevel, LosslessOptions, LosslessPam, Model, Pam, PamMode, PathDict,
    PrimeAllocation, PrimeStream, RelGraph, RuleThresholds, SplitBundle, TfIdfParams,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Settings;
use crate::output::Outputs;
use crate::{Cli, Command, FeatureArgs, ModelArgs, PamArgs};

pub fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let s = Settings::load(cli.global.config.as_deref())?;
    let threads = s.get("threads", cli.global.threads, 0usize)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let out_dir: String = s.get("out", cli.global.out.map(|p| p.display().to_string()), "pam_out".into())?;
    let seed = s.get("seed", cli.global.seed, 0u64)?;
    let timings = s.flag("timings", cli.global.timings)?;
    let mut out = Outputs::create(PathBuf::from(out_dir))?;

    let (name, inputs) = match cli.command {
        Command::Power { input, pam } => ("power", cmd_power(&s, &mut out, input, &pam)?),
        Command::Node { input, labels, train_fraction, pam, features, model } => {
            ("node", cmd_node(&s, &mut out, input, labels, train_fraction, seed, &pam, &features, &model)?)
        }
        Command::Relation { train, valid, test, pam, features, model } => {
            ("relation", cmd_relation(&s, &mut out, [train, valid, test], &pam, &features, &model)?)
        }
        Command::GraphRegress { input, train_fraction, pam, features, model } => {
            ("graph-regress", cmd_regress(&s, &mut out, input, train_fraction, seed, &pam, &features, &model)?)
        }
        Command::Rules { input, min_support, min_confidence, pam } => {
            ("rules", cmd_rules(&s, &mut out, input, min_support, min_confidence, &pam)?)
        }
        Command::Paths { input, head, tail, pam } => ("paths", cmd_paths(&s, &mut out, input, head, tail, &pam)?),
    };
    for key in s.unused() {
        warn!("config key `{key}` is not used by `{name}`");
    }
    let elapsed = start.elapsed();
    out.finish(name, &s, &inputs, timings.then_some(elapsed.as_millis()))?;
    info!("{name} finished in {:.3}s", elapsed.as_secs_f64());
    Ok(())
}

fn parsed<T>(raw: Option<&str>) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    raw.map(|r| r.parse::<T>().map_err(|e| anyhow!("{e}"))).transpose()
}

struct PamConfig {
    k: usize,
    mode: PamMode,
    bigint: bool,
    allocation: PrimeAllocation,
    max_factors: usize,
}

impl PamConfig {
    fn resolve(s: &Settings, a: &PamArgs, default_allocation: PrimeAllocation) -> Result<Self> {
        let k = s.get("k", a.k, 2usize)?;
        if k == 0 {
            bail!("k must be at least 1");
        }
        let mode = s.get("mode", parsed(a.mode.as_deref())?, PamMode::Sum)?;
        let bigint = s.flag("bigint", a.bigint)?;
        let (allocation, max_factors) = if mode == PamMode::Lossless {
            (
                s.get("allocation", parsed(a.allocation.as_deref())?, default_allocation)?,
                s.get("max-factors", a.max_factors, LosslessOptions::default().max_factors)?,
            )
        } else {
            (default_allocation, LosslessOptions::default().max_factors)
        };
        Ok(Self { k, mode, bigint, allocation, max_factors })
    }
}

fn tfidf_params(s: &Settings, a: &FeatureArgs) -> Result<TfIdfParams> {
    let d = TfIdfParams::default();
    let params = TfIdfParams {
        min_df: s.get("min-df", a.min_df, d.min_df)?,
        max_df_ratio: s.get("max-df", a.max_df, d.max_df_ratio)?,
        vocab_cap: s.get("vocab", a.vocab, d.vocab_cap)?,
        weighting: s.get("weighting", parsed(a.weighting.as_deref())?, d.weighting)?,
    };
    if !(params.max_df_ratio > 0.0 && params.max_df_ratio <= 1.0) {
        bail!("max-df must lie in (0, 1]");
    }
    if params.vocab_cap == 0 {
        bail!("vocab must be positive");
    }
    Ok(params)
}

fn resolve_model(s: &Settings, a: &ModelArgs, default: &str) -> Result<Model> {
    let name: String = s.get("model", a.model.clone(), default.to_string())?;
    Ok(match name.as_str() {
        "knn" => Model::Knn { neighbors: s.get("neighbors", a.neighbors, 20usize)?.max(1) },
        "linear" => {
            let ridge = s.get("ridge", a.ridge, 0.0f64)?;
            if ridge < 0.0 {
                bail!("ridge must be non-negative");
            }
            Model::Linear { ridge }
        }
        "mean" => Model::Mean,
        other => bail!("unknown model `{other}` (knn, linear, mean)"),
    })
}

fn load_graph(path: &Path) -> Result<RelGraph> {
    let report = load_triples(path).with_context(|| format!("loading {}", path.display()))?;
    let g = report.graph;
    info!("{}: {} nodes, {} relations, {} edges", path.display(), g.num_nodes(), g.num_relations(), g.num_edges());
    Ok(g)
}

enum Powers {
    Small(Vec<Pam<u64>>),
    Big(Vec<Pam<BigUint>>),
}

/// Runs `$body` with `$ps` bound to the power list, whatever its cell type.
macro_rules! with_powers {
    ($powers:expr, $ps:ident => $body:expr) => {
        match $powers {
            Powers::Small($ps) => $body,
            Powers::Big($ps) => $body,
        }
    };
}

struct Built {
    rel_dict: PathDict,
    powers: Powers,
    lossless: Vec<LosslessLevel>,
}

fn build(g: &RelGraph, c: &PamConfig) -> Result<Built> {
    let mut stream = PrimeStream::for_relations();
    let rel_dict = PathDict::for_relations(g.num_relations(), &mut stream)?;
    let primes = rel_dict.relation_primes();
    let (powers, lossless) = match c.mode {
        PamMode::Lossless => {
            let p1 = LosslessPam::from_graph(g, &rel_dict)?;
            let opts = LosslessOptions { allocation: c.allocation, max_factors: c.max_factors, ..Default::default() };
            let levels = lossless_power(&p1, &rel_dict, c.k, &mut stream, &opts)?;
            (Powers::Big(levels.iter().map(|l| l.pam.to_pam()).collect()), levels)
        }
        mode if c.bigint => (Powers::Big(power(&build_pam(g, &primes, mode)?, c.k)?), Vec::new()),
        mode => (Powers::Small(power(&build_pam(g, &primes, mode)?, c.k)?), Vec::new()),
    };
    Ok(Built { rel_dict, powers, lossless })
}

fn chain_label(g: &RelGraph, chain: &Chain) -> String {
    let parts: Vec<&str> = chain.iter().map(|&r| g.relation_label(r)).collect();
    format!("({})", parts.join(", "))
}

fn write_metrics(out: &mut Outputs, rows: &[(String, String)]) -> Result<()> {
    out.write("metrics.tsv", |w| {
        writeln!(w, "metric\tvalue")?;
        for (k, v) in rows {
            writeln!(w, "{k}\t{v}")?;
        }
        Ok(())
    })
}

fn metric(name: &str, value: impl Display) -> (String, String) {
    (name.to_string(), value.to_string())
}

fn cmd_power(s: &Settings, out: &mut Outputs, input: Option<PathBuf>, pam: &PamArgs) -> Result<Vec<PathBuf>> {
    let input = s.path("input", input)?;
    let c = PamConfig::resolve(s, pam, PrimeAllocation::Sequential)?;
    let g = load_graph(&input)?;
    let built = build(&g, &c)?;
    out.write("relations.tsv", |w| {
        for (prime, chain) in built.rel_dict.iter() {
            writeln!(w, "{prime}\t{}", g.relation_label(chain[0]))?;
        }
        Ok(())
    })?;
    out.write("entities.tsv", |w| {
        for i in 0..g.num_nodes() {
            writeln!(w, "{i}\t{}", g.entity_label(i))?;
        }
        Ok(())
    })?;
    with_powers!(&built.powers, ps => write_powers(out, ps))?;
    for level in &built.lossless {
        out.write(&format!("pam_k{}.factors", level.k()), |w| Ok(level.pam.write_factors(w)?))?;
        out.write(&format!("pathdict_k{}.tsv", level.k()), |w| Ok(level.dict.write_to(w)?))?;
    }
    Ok(vec![input])
}

fn write_powers<V: CellValue>(out: &mut Outputs, ps: &[Pam<V>]) -> Result<()> {
    for p in ps {
        out.write(&format!("pam_k{}.coo", p.k()), |w| Ok(p.write_coo(w)?))?;
        let hist = histogram(p);
        out.write(&format!("hist_k{}.tsv", p.k()), |w| Ok(hist.write_tsv(w)?))?;
        info!("k={}: {} nonzero cells, {} distinct values", p.k(), p.nnz(), hist.0.len());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_node(
    s: &Settings,
    out: &mut Outputs,
    input: Option<PathBuf>,
    labels: Option<PathBuf>,
    train_fraction: Option<f64>,
    seed: u64,
    pam: &PamArgs,
    features: &FeatureArgs,
    model: &ModelArgs,
) -> Result<Vec<PathBuf>> {
    let input = s.path("input", input)?;
    let labels_path = s.path("labels", labels)?;
    let c = PamConfig::resolve(s, pam, PrimeAllocation::Sequential)?;
    let params = tfidf_params(s, features)?;
    let alpha = s.get("alpha", features.alpha, 2.0f64)?;
    if alpha.is_nan() || alpha <= 0.0 {
        bail!("alpha must be positive");
    }
    let model = resolve_model(s, model, "knn")?;
    let fraction = s.get("train-fraction", train_fraction, 0.8f64)?;
    let g = load_graph(&input)?;
    let labels = read_labels(&labels_path, &g, seed, fraction)?;
    let built = build(&g, &c)?;
    with_powers!(&built.powers, ps => node_task(out, &g, ps, &labels, params, alpha, model))?;
    Ok(vec![input, labels_path])
}

fn node_task<V: CellValue>(
    out: &mut Outputs,
    g: &RelGraph,
    ps: &[Pam<V>],
    labels: &LabeledNodes,
    params: TfIdfParams,
    alpha: f64,
    model: Model,
) -> Result<()> {
    let fm = fit_tfidf(&bop_nodes(ps), params)?;
    let fm = neighbor_aggregate(&fm, g, alpha);
    let res = classify_nodes(&fm.rows, labels, model)?;
    if !res.unseen_classes.is_empty() {
        warn!("test classes absent from training: {}", res.unseen_classes.join(", "));
    }
    let ids: Vec<&str> = (0..g.num_nodes()).map(|i| g.entity_label(i)).collect();
    let meta = [("weighting", params.weighting.name().to_string()), ("alpha", alpha.to_string())];
    out.write("features.txt", |w| Ok(write_features(w, &fm.rows, &ids, &meta)?))?;
    out.write("vocab.tsv", |w| Ok(fm.write_vocabulary(w)?))?;
    out.write("predictions.tsv", |w| {
        writeln!(w, "node\ttruth\tpredicted")?;
        for ((node, truth), pred) in labels.test.iter().zip(&res.predictions) {
            writeln!(w, "{}\t{truth}\t{pred}", g.entity_label(*node))?;
        }
        Ok(())
    })?;
    info!("accuracy {:.4} on {} test nodes", res.accuracy, labels.test.len());
    write_metrics(
        out,
        &[
            metric("accuracy", res.accuracy),
            metric("train_nodes", labels.train.len()),
            metric("test_nodes", labels.test.len()),
            metric("features", fm.width()),
        ],
    )
}

/// `node<TAB>class` lines split by seeded shuffle, or `node<TAB>class<TAB>train|test`.
fn read_labels(path: &Path, g: &RelGraph, seed: u64, fraction: f64) -> Result<LabeledNodes> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut plain = Vec::new();
    let mut split = LabeledNodes::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", path.display(), n + 1);
        let fields: Vec<&str> = line.split('\t').collect();
        let node = g.entity_index(fields[0]).ok_or_else(|| anyhow!("{}: unknown node `{}`", at(), fields[0]))?;
        match fields.as_slice() {
            [_, class] => plain.push((node, class.to_string())),
            [_, class, "train"] => split.train.push((node, class.to_string())),
            [_, class, "test"] => split.test.push((node, class.to_string())),
            _ => bail!("{}: expected node<TAB>class[<TAB>train|test]", at()),
        }
    }
    if plain.is_empty() {
        return Ok(split);
    }
    if !split.train.is_empty() || !split.test.is_empty() {
        bail!("{}: either every label line names its split or none does", path.display());
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        bail!("train-fraction must lie in (0, 1)");
    }
    plain.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((plain.len() as f64 * fraction).round() as usize).clamp(1, plain.len().saturating_sub(1).max(1));
    let test = plain.split_off(cut);
    Ok(LabeledNodes { train: plain, test })
}

fn cmd_relation(
    s: &Settings,
    out: &mut Outputs,
    files: [Option<PathBuf>; 3],
    pam: &PamArgs,
    features: &FeatureArgs,
    model: &ModelArgs,
) -> Result<Vec<PathBuf>> {
    let [train, valid, test] = files;
    let train = s.path("train", train)?;
    let valid = s.path("valid", valid)?;
    let test = s.path("test", test)?;
    let c = PamConfig::resolve(s, pam, PrimeAllocation::Sequential)?;
    let params = tfidf_params(s, features)?;
    let Model::Knn { neighbors } = resolve_model(s, model, "knn")? else {
        bail!("relation prediction supports the knn model only");
    };
    let bundle = load_splits(&train, &valid, &test).context("loading splits")?;
    let (a, b, t) = bundle.sizes();
    info!("splits: {a} train, {b} valid, {t} test triples over {} entities", bundle.entities.len());
    let g = bundle.train_graph();
    let built = build(&g, &c)?;
    with_powers!(&built.powers, ps => relation_task(out, &bundle, &g, ps, params, neighbors))?;
    Ok(vec![train, valid, test])
}

fn relation_task<V: CellValue>(
    out: &mut Outputs,
    bundle: &SplitBundle,
    g: &RelGraph,
    ps: &[Pam<V>],
    params: TfIdfParams,
    neighbors: usize,
) -> Result<()> {
    let bags = bop_nodes(ps);
    let all: Vec<_> = bundle.train.iter().chain(&bundle.valid).chain(&bundle.test).copied().collect();
    let pairs: Vec<(usize, usize)> = all.iter().map(|t| (t.s, t.o)).collect();
    let pf = pair_features(ps, &bags, &pairs, params)?;
    let n_train = bundle.train.len();
    let labels: Vec<u32> = bundle.train.iter().map(|t| t.r).collect();
    let ids: Vec<String> = all
        .iter()
        .map(|t| format!("{}|{}|{}", g.entity_label(t.s), g.relation_label(t.r), g.entity_label(t.o)))
        .collect();
    out.write("features.txt", |w| Ok(write_features(w, &pf.rows, &ids, &[("columns", pf.width().to_string())])?))?;

    let mut metrics = vec![metric("train_triples", n_train), metric("features", pf.width())];
    let mut offset = n_train;
    for (name, queries) in [("valid", &bundle.valid), ("test", &bundle.test)] {
        let rows = &pf.rows[offset..offset + queries.len()];
        offset += queries.len();
        if queries.is_empty() {
            continue;
        }
        let truth: Vec<u32> = queries.iter().map(|t| t.r).collect();
        let res = predict_relations(&pf.rows[..n_train], &labels, rows, &truth, g.num_relations(), neighbors)?;
        out.write(&format!("ranks_{name}.tsv"), |w| {
            writeln!(w, "head\trelation\ttail\trank\ttop3")?;
            for ((q, rank), ranking) in queries.iter().zip(&res.ranks).zip(&res.rankings) {
                let top: Vec<&str> = ranking.iter().take(3).map(|&r| g.relation_label(r)).collect();
                writeln!(
                    w,
                    "{}\t{}\t{}\t{rank}\t{}",
                    g.entity_label(q.s),
                    g.relation_label(q.r),
                    g.entity_label(q.o),
                    top.join(",")
                )?;
            }
            Ok(())
        })?;
        info!("{name}: MRR {:.4}, H@3 {:.4} over {} queries", res.mrr, res.hits_at_3, queries.len());
        metrics.push(metric(&format!("{name}_mrr"), res.mrr));
        metrics.push(metric(&format!("{name}_hits@3"), res.hits_at_3));
        metrics.push(metric(&format!("{name}_queries"), queries.len()));
        metrics.push(metric(&format!("{name}_fallbacks"), res.fallbacks));
    }
    write_metrics(out, &metrics)
}

enum Bags {
    Small(Vec<BopVector<u64>>),
    Big(Vec<BopVector<BigUint>>),
}

#[allow(clippy::too_many_arguments)]
fn cmd_regress(
    s: &Settings,
    out: &mut Outputs,
    input: Option<PathBuf>,
    train_fraction: Option<f64>,
    seed: u64,
    pam: &PamArgs,
    features: &FeatureArgs,
    model: &ModelArgs,
) -> Result<Vec<PathBuf>> {
    let dir = s.path("input", input)?;
    // lexicographic primes are the same in every graph, so lossless bags stay comparable
    let c = PamConfig::resolve(s, pam, PrimeAllocation::Lexicographic)?;
    if c.mode == PamMode::Lossless && c.allocation == PrimeAllocation::Sequential {
        bail!("graph regression needs lexicographic allocation in lossless mode");
    }
    let params = tfidf_params(s, features)?;
    let model = resolve_model(s, model, "linear")?;
    let fraction = s.get("train-fraction", train_fraction, 0.8f64)?;
    if !(fraction > 0.0 && fraction < 1.0) {
        bail!("train-fraction must lie in (0, 1)");
    }
    let coll = load_collection(&dir).with_context(|| format!("loading {}", dir.display()))?;
    if coll.graphs.len() < 2 {
        bail!("graph regression needs at least two graphs");
    }
    info!("{} graphs, {} relations, {} targets", coll.graphs.len(), coll.relations.len(), coll.target_arity());

    let mut order: Vec<usize> = (0..coll.graphs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((order.len() as f64 * fraction).round() as usize).clamp(1, order.len() - 1);
    let mut train_idx = order[..cut].to_vec();
    let mut test_idx = order[cut..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let mut chain_dicts: BTreeMap<usize, PathDict> = BTreeMap::new();
    let mut small = Vec::new();
    let mut big = Vec::new();
    for (name, g) in coll.names.iter().zip(&coll.graphs) {
        let built = build(g, &c).with_context(|| format!("graph {name}"))?;
        for level in built.lossless.iter().skip(1) {
            let merged = chain_dicts.entry(level.k()).or_insert_with(|| PathDict::new(level.k()));
            for (prime, chain) in level.dict.iter() {
                merged.insert(chain, prime)?;
            }
        }
        match built.powers {
            Powers::Small(ps) => small.push(bop_graph(&ps)),
            Powers::Big(ps) => big.push(bop_graph(&ps)),
        }
    }
    let bags = if big.is_empty() { Bags::Small(small) } else { Bags::Big(big) };

    let rel_dict = PathDict::for_relations(coll.relations.len(), &mut PrimeStream::for_relations())?;
    let labels = RelGraph { relations: coll.relations.clone(), ..RelGraph::from_indices(0, 0, &[]) };
    let mut decoder = PathDecoder::new(&rel_dict, &labels);
    decoder.chain_dicts = chain_dicts.values().collect();
    let split = Split { train: &train_idx, test: &test_idx };
    match &bags {
        Bags::Small(b) => regress_task(out, &coll, b, split, params, model, &decoder)?,
        Bags::Big(b) => regress_task(out, &coll, b, split, params, model, &decoder)?,
    }
    Ok(vec![dir])
}

#[derive(Clone, Copy)]
struct Split<'a> {
    train: &'a [usize],
    test: &'a [usize],
}

fn regress_task<V: CellValue + Into<BigUint>>(
    out: &mut Outputs,
    coll: &GraphCollection,
    bags: &[BopVector<V>],
    split: Split<'_>,
    params: TfIdfParams,
    model: Model,
    decoder: &PathDecoder<'_>,
) -> Result<()> {
    let pick = |idx: &[usize]| -> Vec<BopVector<V>> { idx.iter().map(|&i| bags[i].clone()).collect() };
    let targets = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&i| coll.targets[i].clone()).collect() };
    let fm = fit_tfidf(&pick(split.train), params)?;
    let test_rows = fm.transform(&pick(split.test));
    let train_t = targets(split.train);
    let test_t = targets(split.test);
    let res = regress_graphs(&fm.rows, &train_t, &test_rows, &test_t, model)?;

    let all_rows = fm.transform(bags);
    let meta = [("weighting", params.weighting.name().to_string())];
    out.write("features.txt", |w| Ok(write_features(w, &all_rows, &coll.names, &meta)?))?;
    out.write("vocab.tsv", |w| Ok(fm.write_vocabulary(w)?))?;
    out.write("predictions.tsv", |w| {
        write!(w, "graph")?;
        for c in 0..coll.target_arity() {
            write!(w, "\ttruth_{c}\tpredicted_{c}")?;
        }
        writeln!(w)?;
        for ((&i, truth), pred) in split.test.iter().zip(&test_t).zip(&res.predictions) {
            write!(w, "{}", coll.names[i])?;
            for (t, p) in truth.iter().zip(pred) {
                write!(w, "\t{t}\t{p}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    for c in 0..coll.target_arity() {
        let column: Vec<f64> = train_t.iter().map(|t| t[c]).collect();
        let rows = path_importance(&fm, &column, decoder)?;
        let name = if coll.target_arity() == 1 { "importance.tsv".to_string() } else { format!("importance_t{c}.tsv") };
        out.write(&name, |w| Ok(write_importance(w, &rows)?))?;
    }
    info!("mean MAE {:.6} over {} test graphs", res.mean_mae, split.test.len());
    let mut metrics = vec![
        metric("mean_mae", res.mean_mae),
        metric("train_graphs", split.train.len()),
        metric("test_graphs", split.test.len()),
        metric("features", fm.width()),
    ];
    for (c, mae) in res.per_target_mae.iter().enumerate() {
        metrics.push(metric(&format!("mae_t{c}"), mae));
    }
    write_metrics(out, &metrics)
}

fn cmd_rules(
    s: &Settings,
    out: &mut Outputs,
    input: Option<PathBuf>,
    min_support: Option<usize>,
    min_confidence: Option<f64>,
    pam: &PamArgs,
) -> Result<Vec<PathBuf>> {
    let input = s.path("input", input)?;
    let c = PamConfig::resolve(s, pam, PrimeAllocation::Sequential)?;
    let thresholds = RuleThresholds {
        min_support: s.get("min-support", min_support, 1usize)?,
        min_confidence: s.get("min-confidence", min_confidence, 0.0f64)?,
    };
    let g = load_graph(&input)?;
    let built = build(&g, &c)?;
    let primes = built.rel_dict.relation_primes();
    let p1: Pam<u64> = build_pam(&g, &primes, PamMode::Product).context("one-hop product matrix for rule heads")?;
    let rules = if c.mode == PamMode::Lossless {
        mine_rules_lossless(&p1, &built.lossless[c.k - 1], &primes, thresholds)?
    } else {
        with_powers!(&built.powers, ps => mine_rules(&p1, &ps[c.k - 1], &primes, thresholds))?
    };
    if rules.lossy {
        info!("lossy bodies: one value may stand for several chains");
    }
    info!("{} rules at k={}", rules.rules.len(), c.k);
    let rel_label = |prime: u64| g.relation_label(built.rel_dict.path_of(prime).unwrap()[0]).to_string();
    out.write("rules.tsv", |w| Ok(rules.write_tsv(w, rel_label, |ch| chain_label(&g, ch))?))?;
    Ok(vec![input])
}

fn cmd_paths(
    s: &Settings,
    out: &mut Outputs,
    input: Option<PathBuf>,
    head: Option<String>,
    tail: Option<String>,
    pam: &PamArgs,
) -> Result<Vec<PathBuf>> {
    let input = s.path("input", input)?;
    let head: String = s.get_opt("head", head)?.ok_or_else(|| anyhow!("missing required setting `head`"))?;
    let tail: String = s.get_opt("tail", tail)?.ok_or_else(|| anyhow!("missing required setting `tail`"))?;
    let c = PamConfig::resolve(s, pam, PrimeAllocation::Sequential)?;
    let g = load_graph(&input)?;
    let h = g.entity_index(&head).ok_or_else(|| anyhow!("unknown node `{head}`"))?;
    let t = g.entity_index(&tail).ok_or_else(|| anyhow!("unknown node `{tail}`"))?;
    let chains = extract_paths_for_pair(&g, h, t, c.k);
    let built = build(&g, &c)?;
    let value =
        with_powers!(&built.powers, ps => ps[c.k - 1].get(h, t).map(ToString::to_string)).unwrap_or_else(|| "0".into());
    if c.mode == PamMode::Lossless {
        let mut decoded = decompose_cell(&built.lossless[c.k - 1], h, t)?;
        decoded.sort();
        if decoded != chains {
            bail!("lossless cell ({head}, {tail}) does not decode to the enumerated walks");
        }
    }
    let mut counts: BTreeMap<&Chain, usize> = BTreeMap::new();
    for ch in &chains {
        *counts.entry(ch).or_insert(0) += 1;
    }
    out.write("paths.tsv", |w| {
        writeln!(w, "# head={head} tail={tail} k={} mode={} value={value}", c.k, c.mode)?;
        writeln!(w, "chain\tmultiplicity")?;
        for (ch, n) in &counts {
            writeln!(w, "{}\t{n}", chain_label(&g, ch))?;
        }
        Ok(())
    })?;
    info!("{} walks of length {} from {head} to {tail}, cell value {value}", chains.len(), c.k);
    Ok(vec![input])
}
