#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;
use twlearn::rng::stream_rng;

/// Two-class text corpus over `n_terms` words `w00..`. Words `0..planted/2`
/// are drawn more often in class `a`, the next `planted/2` in class `b`; all
/// other words follow a shared Zipf-like background.
pub fn planted_corpus(
    seed: u64,
    n_docs: usize,
    n_terms: usize,
    planted: usize,
    boost: f64,
) -> String {
    let mut rng = stream_rng(seed, "planted-corpus");
    let background: Vec<f64> = (0..n_terms)
        .map(|j| 1.0 / (1.0 + j as f64).sqrt())
        .collect();
    let mut out = String::new();
    for d in 0..n_docs {
        let class = d % 2;
        let mut w = background.clone();
        for (j, wj) in w.iter_mut().enumerate().take(planted) {
            if j / (planted / 2) == class {
                *wj *= boost;
            }
        }
        let total: f64 = w.iter().sum();
        let len = rng.random_range(15..40);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n_terms - 1;
            for (j, &wj) in w.iter().enumerate() {
                if u < wj {
                    pick = j;
                    break;
                }
                u -= wj;
            }
            words.push(format!("w{pick:02}"));
        }
        writeln!(out, "{}\t{}", ["a", "b"][class], words.join(" ")).unwrap();
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

pub fn twlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twlearn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn reuters4() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/reuters4.tsv")
}

/// Random corpus with `2..=max_classes` non-empty classes. Per-term document
/// densities include 0 and 1, so some terms occur nowhere or everywhere.
pub fn random_docset<R: Rng>(
    rng: &mut R,
    max_docs: usize,
    max_terms: usize,
    max_classes: usize,
) -> twlearn::corpus::DocumentSet {
    use std::sync::Arc;
    use twlearn::corpus::{CountMatrix, DocumentSet, Vocabulary};
    let k = rng.random_range(2..=max_classes);
    let n = rng.random_range(k..=max_docs);
    let v = rng.random_range(1..=max_terms);
    let labels: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    let density: Vec<f64> = (0..v)
        .map(|_| match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.05..0.7),
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::new();
        for (j, &p) in density.iter().enumerate() {
            if rng.random_bool(p) {
                row.push((j as u32, rng.random_range(1..=6)));
            }
        }
        rows.push(row);
    }
    let counts = CountMatrix::from_rows(v, rows);
    let vocab = Vocabulary::from_parts(
        (0..v).map(|j| format!("t{j}")).collect(),
        counts.document_frequency(),
        counts.collection_frequency(),
    );
    DocumentSet::new(
        counts,
        labels,
        Arc::new(vocab),
        (0..k).map(|c| format!("c{c}")).collect(),
        (0..n).map(|i| format!("d{i}")).collect(),
    )
    .unwrap()
}
