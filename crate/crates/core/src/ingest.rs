//! Triple-file loading into an indexed [`RelGraph`].

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexSet;
use log::warn;

use crate::error::{Error, Result};
use crate::primes::RelId;

/// One directed, typed edge `(subject, relation, object)` over dictionary indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub s: usize,
    pub r: RelId,
    pub o: usize,
}

/// Label ↔ index bijection in first-appearance order.
pub type Dictionary = IndexSet<String>;

/// Multi-relational graph with entity and relation dictionaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelGraph {
    pub entities: Dictionary,
    pub relations: Dictionary,
    pub edges: Vec<Triple>,
}

impl RelGraph {
    pub fn num_nodes(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Builds a graph from labelled triples, dropping duplicates.
    /// Returns the graph and the number of duplicates dropped.
    pub fn from_labels<'a, I>(triples: I) -> (Self, usize)
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut builder = GraphBuilder::default();
        for (s, r, o) in triples {
            builder.push(s, r, o);
        }
        builder.finish()
    }

    /// Builds a graph over index-valued triples with synthetic labels
    /// (`n0`, `n1`, … and `r0`, `r1`, …). Duplicates are dropped.
    pub fn from_indices(num_nodes: usize, num_relations: usize, triples: &[(usize, RelId, usize)]) -> Self {
        let entities: Dictionary = (0..num_nodes).map(|i| format!("n{i}")).collect();
        let relations: Dictionary = (0..num_relations).map(|i| format!("r{i}")).collect();
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        for &(s, r, o) in triples {
            assert!(s < num_nodes && o < num_nodes && (r as usize) < num_relations);
            let t = Triple { s, r, o };
            if seen.insert(t) {
                edges.push(t);
            }
        }
        Self { entities, relations, edges }
    }

    pub fn entity_index(&self, label: &str) -> Option<usize> {
        self.entities.get_index_of(label)
    }

    pub fn entity_label(&self, index: usize) -> &str {
        &self.entities[index]
    }

    pub fn relation_label(&self, index: RelId) -> &str {
        &self.relations[index as usize]
    }

    /// Writes the graph as `subject\trelation\tobject` lines in edge order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.edges {
            writeln!(w, "{}\t{}\t{}", self.entities[t.s], self.relations[t.r as usize], self.entities[t.o])?;
        }
        Ok(())
    }

    /// Undirected, deduplicated 1-hop neighbourhoods (self-loops excluded).
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb: Vec<Vec<usize>> = vec![Vec::new(); self.num_nodes()];
        for t in &self.edges {
            if t.s != t.o {
                nb[t.s].push(t.o);
                nb[t.o].push(t.s);
            }
        }
        for list in &mut nb {
            list.sort_unstable();
            list.dedup();
        }
        nb
    }

    /// Adds a `<rel>_inv` reciprocal edge for every edge.
    pub fn with_inverse_relations(&self) -> Self {
        let mut relations = self.relations.clone();
        let base = relations.len();
        for i in 0..base {
            let name = format!("{}_inv", self.relations[i]);
            relations.insert(name);
        }
        let mut edges = self.edges.clone();
        let mut seen: HashSet<Triple> = edges.iter().copied().collect();
        for t in &self.edges {
            let inv_label = format!("{}_inv", self.relations[t.r as usize]);
            let r = relations.get_index_of(&inv_label).unwrap() as RelId;
            let inv = Triple { s: t.o, r, o: t.s };
            if seen.insert(inv) {
                edges.push(inv);
            }
        }
        Self { entities: self.entities.clone(), relations, edges }
    }
}

#[derive(Default)]
struct GraphBuilder {
    entities: Dictionary,
    relations: Dictionary,
    edges: Vec<Triple>,
    seen: HashSet<Triple>,
    duplicates: usize,
}

impl GraphBuilder {
    fn push(&mut self, s: &str, r: &str, o: &str) {
        let t = Triple {
            s: self.entities.insert_full(s.to_string()).0,
            r: self.relations.insert_full(r.to_string()).0 as RelId,
            o: self.entities.insert_full(o.to_string()).0,
        };
        if self.seen.insert(t) {
            self.edges.push(t);
        } else {
            self.duplicates += 1;
        }
    }

    fn finish(self) -> (RelGraph, usize) {
        (RelGraph { entities: self.entities, relations: self.relations, edges: self.edges }, self.duplicates)
    }
}

/// Result of [`load_triples`].
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub graph: RelGraph,
    pub duplicates: usize,
}

fn split_line(line: &str) -> Option<(&str, &str, &str)> {
    let mut parts = line.split('\t');
    let s = parts.next()?;
    let r = parts.next()?;
    let o = parts.next()?;
    if parts.next().is_some() || s.is_empty() || r.is_empty() || o.is_empty() {
        return None;
    }
    Some((s, r, o))
}

fn read_triples_into(builder: &mut GraphBuilder, reader: impl BufRead, path: &Path) -> Result<Vec<Triple>> {
    let mut added = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (s, r, o) = split_line(line).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: "expected `subject<TAB>relation<TAB>object`".into(),
        })?;
        let before = builder.edges.len();
        builder.push(s, r, o);
        if builder.edges.len() > before {
            added.push(*builder.edges.last().unwrap());
        }
    }
    Ok(added)
}

/// Parses triples from any reader. `path` is used for error messages.
pub fn parse_triples(reader: impl BufRead, path: &Path) -> Result<LoadReport> {
    let mut builder = GraphBuilder::default();
    read_triples_into(&mut builder, reader, path)?;
    if builder.edges.is_empty() {
        return Err(Error::EmptyGraph(path.to_path_buf()));
    }
    if builder.duplicates > 0 {
        warn!("{}: dropped {} duplicate triples", path.display(), builder.duplicates);
    }
    let (graph, duplicates) = builder.finish();
    Ok(LoadReport { graph, duplicates })
}

/// Loads a TSV triple file. Dictionaries follow first appearance.
pub fn load_triples(path: impl AsRef<Path>) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_triples(BufReader::new(file), path)
}

/// Replaces each relation with `type(s)-relation-type(o)`. Topology is unchanged.
pub fn compose_typed_relations(g: &RelGraph, node_types: &HashMap<usize, String>) -> Result<RelGraph> {
    let type_of = |n: usize| node_types.get(&n).ok_or_else(|| Error::MissingType(g.entities[n].clone()));
    let mut relations = Dictionary::new();
    let mut edges = Vec::with_capacity(g.edges.len());
    for t in &g.edges {
        let key = format!("{}-{}-{}", type_of(t.s)?, g.relations[t.r as usize], type_of(t.o)?);
        let r = relations.insert_full(key).0 as RelId;
        edges.push(Triple { s: t.s, r, o: t.o });
    }
    Ok(RelGraph { entities: g.entities.clone(), relations, edges })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// Train/valid/test edge lists over shared dictionaries.
#[derive(Debug, Clone)]
pub struct SplitBundle {
    pub entities: Dictionary,
    pub relations: Dictionary,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    /// Triples dropped from a later split because an earlier split holds them.
    pub overlaps: Vec<(Split, Triple)>,
}

impl SplitBundle {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }

    /// The training edges as a graph over the shared dictionaries.
    pub fn train_graph(&self) -> RelGraph {
        RelGraph { entities: self.entities.clone(), relations: self.relations.clone(), edges: self.train.clone() }
    }
}

/// Loads three triple files over shared dictionaries. Triples already present in
/// an earlier split are dropped from the later one and reported.
pub fn load_splits(train: impl AsRef<Path>, valid: impl AsRef<Path>, test: impl AsRef<Path>) -> Result<SplitBundle> {
    let mut builder = GraphBuilder::default();
    let mut lists = Vec::new();
    let mut overlaps = Vec::new();
    for (split, path) in [(Split::Train, train.as_ref()), (Split::Valid, valid.as_ref()), (Split::Test, test.as_ref())]
    {
        let mut local = GraphBuilder {
            entities: std::mem::take(&mut builder.entities),
            relations: std::mem::take(&mut builder.relations),
            ..Default::default()
        };
        let reader = BufReader::new(File::open(path)?);
        let triples = read_triples_into(&mut local, reader, path)?;
        builder.entities = local.entities;
        builder.relations = local.relations;
        let mut kept = Vec::with_capacity(triples.len());
        for t in triples {
            if builder.seen.insert(t) {
                kept.push(t);
            } else {
                warn!(
                    "{}: triple ({}, {}, {}) already present in an earlier split",
                    path.display(),
                    builder.entities[t.s],
                    builder.relations[t.r as usize],
                    builder.entities[t.o]
                );
                overlaps.push((split, t));
            }
        }
        lists.push(kept);
    }
    let test = lists.pop().unwrap();
    let valid = lists.pop().unwrap();
    let train = lists.pop().unwrap();
    Ok(SplitBundle { entities: builder.entities, relations: builder.relations, train, valid, test, overlaps })
}

/// Independent graphs sharing one relation dictionary, each with a target vector.
#[derive(Debug, Clone)]
pub struct GraphCollection {
    pub names: Vec<String>,
    pub graphs: Vec<RelGraph>,
    pub targets: Vec<Vec<f64>>,
    pub relations: Dictionary,
}

impl GraphCollection {
    pub fn target_arity(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }
}

/// Loads a directory with one sub-directory per graph, each holding
/// `edges.tsv`, an optional `types.tsv` (`node<TAB>type`) and `targets.tsv`
/// (tab-separated numbers on one line). Sub-directories are read in name order.
/// When a graph has types, its relations are composed with node types.
pub fn load_collection(dir: impl AsRef<Path>) -> Result<GraphCollection> {
    let dir = dir.as_ref();
    let mut subdirs: Vec<PathBuf> =
        fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    let mut relations = Dictionary::new();
    let mut names = Vec::new();
    let mut graphs = Vec::new();
    let mut targets = Vec::new();
    for sub in subdirs {
        let edges_path = sub.join("edges.tsv");
        let mut graph = load_triples(&edges_path)?.graph;
        let types_path = sub.join("types.tsv");
        if types_path.exists() {
            let types = read_types(&types_path, &graph)?;
            graph = compose_typed_relations(&graph, &types)?;
        }
        // remap to the collection-wide relation dictionary
        for t in &mut graph.edges {
            let label = &graph.relations[t.r as usize];
            t.r = relations.insert_full(label.clone()).0 as RelId;
        }
        let target_path = sub.join("targets.tsv");
        let target = read_targets(&target_path)?;
        if let Some(first) = targets.first() {
            let first: &Vec<f64> = first;
            if first.len() != target.len() {
                return Err(Error::Parse {
                    path: target_path,
                    line: 1,
                    msg: format!("expected {} targets, found {}", first.len(), target.len()),
                });
            }
        }
        names.push(sub.file_name().unwrap().to_string_lossy().into_owned());
        graphs.push(graph);
        targets.push(target);
    }
    for g in &mut graphs {
        g.relations = relations.clone();
    }
    if graphs.is_empty() {
        return Err(Error::EmptyGraph(dir.to_path_buf()));
    }
    Ok(GraphCollection { names, graphs, targets, relations })
}

fn read_types(path: &Path, graph: &RelGraph) -> Result<HashMap<usize, String>> {
    let mut out = HashMap::new();
    let text = fs::read_to_string(path)?;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (node, ty) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: "expected `node<TAB>type`".into(),
        })?;
        if let Some(i) = graph.entity_index(node) {
            out.insert(i, ty.trim_end().to_string());
        }
    }
    Ok(out)
}

fn read_targets(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let values = line
        .split('\t')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse { path: path.to_path_buf(), line: 1, msg: e.to_string() })?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse { path: path.to_path_buf(), line: 1, msg: "targets must be finite numbers".into() });
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadReport> {
        parse_triples(text.as_bytes(), Path::new("mem.tsv"))
    }

    #[test]
    fn single_triple() {
        let r = parse("a\tlikes\tb\n").unwrap();
        assert_eq!((r.graph.num_nodes(), r.graph.num_relations(), r.graph.num_edges()), (2, 1, 1));
    }

    #[test]
    fn duplicates_are_dropped_and_counted() {
        let r = parse("a\tlikes\tb\na\tlikes\tb\n").unwrap();
        assert_eq!(r.graph.num_edges(), 1);
        assert_eq!(r.duplicates, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("a\tr\tb\n\nbroken line\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse("\n\n"), Err(Error::EmptyGraph(_))));
    }

    #[test]
    fn dictionaries_follow_first_appearance() {
        let r = parse("x\tq\ty\nz\tp\tx\n").unwrap();
        let g = r.graph;
        assert_eq!(g.entities.iter().collect::<Vec<_>>(), ["x", "y", "z"]);
        assert_eq!(g.relations.iter().collect::<Vec<_>>(), ["q", "p"]);
    }

    #[test]
    fn typed_relation_keys() {
        let g = parse("c1\tSingle\tc2\n").unwrap().graph;
        let types = HashMap::from([(0, "C".to_string()), (1, "C".to_string())]);
        let typed = compose_typed_relations(&g, &types).unwrap();
        assert_eq!(typed.relations[0], "C-Single-C");
    }

    #[test]
    fn typed_relations_split_by_direction() {
        let g = parse("a\tr\tb\nb\tr\ta\n").unwrap().graph;
        let types = HashMap::from([(0, "X".to_string()), (1, "Y".to_string())]);
        let typed = compose_typed_relations(&g, &types).unwrap();
        assert_eq!(typed.num_relations(), 2);
        assert_eq!(typed.num_edges(), 2);
        assert_eq!(typed.num_nodes(), 2);
    }

    #[test]
    fn single_type_single_relation() {
        let g = parse("a\tr\tb\nb\tr\tc\n").unwrap().graph;
        let types: HashMap<usize, String> = (0..3).map(|i| (i, "T".to_string())).collect();
        assert_eq!(compose_typed_relations(&g, &types).unwrap().num_relations(), 1);
    }

    #[test]
    fn missing_type_names_node() {
        let g = parse("a\tr\tb\n").unwrap().graph;
        let types = HashMap::from([(0, "X".to_string())]);
        match compose_typed_relations(&g, &types) {
            Err(Error::MissingType(node)) => assert_eq!(node, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_relations_double_the_edges() {
        let g = parse("a\tr\tb\n").unwrap().graph.with_inverse_relations();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.relations[1], "r_inv");
    }
}
