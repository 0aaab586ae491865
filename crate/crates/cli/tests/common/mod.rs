#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIG1_TSV: &str = "A\tr1\tB\nA\tr2\tC\nD\tr1\tA\nB\tr2\tE\nC\tr3\tB\nD\tr3\tB\nD\tr1\tC\nE\tr3\tD\n";

pub fn pam(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pam")).args(args).current_dir(cwd).output().expect("spawn pam")
}

pub fn pam_ok(args: &[&str], cwd: &Path) -> Output {
    let out = pam(args, cwd);
    assert!(out.status.success(), "pam {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Every file below `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub fn metrics(dir: &Path) -> BTreeMap<String, f64> {
    fs::read_to_string(dir.join("metrics.tsv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once('\t').unwrap();
            (k.to_string(), v.parse().unwrap())
        })
        .collect()
}

/// Nonzero `(row, col) → value` entries of a COO file.
pub fn read_coo(path: &Path) -> BTreeMap<(usize, usize), String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('%'))
        .map(|l| {
            let f: Vec<&str> = l.split(' ').collect();
            ((f[0].parse().unwrap(), f[1].parse().unwrap()), f[2].to_string())
        })
        .collect()
}

pub fn write_fig1(dir: &Path) -> PathBuf {
    let p = dir.join("fig1.tsv");
    fs::write(&p, FIG1_TSV).unwrap();
    p
}

/// Labeled nodes `n0..n{n-1}`; `pos` nodes point to a hub by `has`, `neg` nodes
/// to another hub by `lacks`. Writes `graph.tsv` and `labels.tsv`.
pub fn write_separable(dir: &Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = String::from("hubP\tnext\tsink\nhubN\tnext\tsink\n");
    let mut labels = String::new();
    for i in 0..n {
        if i == 0 || (i != 1 && rng.gen_bool(0.5)) {
            edges.push_str(&format!("n{i}\thas\thubP\n"));
            labels.push_str(&format!("n{i}\tpos\n"));
        } else {
            edges.push_str(&format!("n{i}\tlacks\thubN\n"));
            labels.push_str(&format!("n{i}\tneg\n"));
        }
    }
    fs::write(dir.join("graph.tsv"), edges).unwrap();
    fs::write(dir.join("labels.tsv"), labels).unwrap();
}

/// Disjoint triangles `a -p-> b -q-> c`, `a -r-> c`. Returns the triple lines.
pub fn triangles(m: usize) -> Vec<String> {
    (0..m).flat_map(|t| [format!("a{t}\tp\tb{t}"), format!("b{t}\tq\tc{t}"), format!("a{t}\tr\tc{t}")]).collect()
}

/// Triangle KG with a seeded fifth of the closing edges held out for test.
pub fn write_triangle_splits(dir: &Path, m: usize, seed: u64) {
    let lines = triangles(m);
    let mut closing: Vec<usize> = (0..m).collect();
    closing.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held: Vec<usize> = closing[..(m / 5).max(1)].to_vec();
    let mut train = String::new();
    let mut test = String::new();
    for (t, chunk) in lines.chunks(3).enumerate() {
        train.push_str(&format!("{}\n{}\n", chunk[0], chunk[1]));
        if held.contains(&t) {
            test.push_str(&format!("{}\n", chunk[2]));
        } else {
            train.push_str(&format!("{}\n", chunk[2]));
        }
    }
    fs::write(dir.join("train.tsv"), train).unwrap();
    fs::write(dir.join("valid.tsv"), "").unwrap();
    fs::write(dir.join("test.tsv"), test).unwrap();
}

/// Chain molecules over C/N atoms with single/double bonds; target = number
/// of C-Single-C bonds.
pub fn write_molecules(dir: &Path, count: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in 0..count {
        let atoms = rng.gen_range(3..9);
        let types: Vec<&str> = (0..atoms).map(|_| if rng.gen_bool(0.7) { "C" } else { "N" }).collect();
        let mut edges = String::new();
        let mut target = 0;
        for i in 1..atoms {
            let bond = if rng.gen_bool(0.6) { "Single" } else { "Double" };
            edges.push_str(&format!("a{}\t{bond}\ta{i}\n", i - 1));
            if bond == "Single" && types[i - 1] == "C" && types[i] == "C" {
                target += 1;
            }
        }
        let sub = dir.join(format!("mol{m:04}"));
        fs::create_dir_all(&sub).unwrap();
        let typ: String = types.iter().enumerate().map(|(i, t)| format!("a{i}\t{t}\n")).collect();
        fs::write(sub.join("edges.tsv"), edges).unwrap();
        fs::write(sub.join("types.tsv"), typ).unwrap();
        fs::write(sub.join("targets.tsv"), format!("{target}\n")).unwrap();
    }
}
