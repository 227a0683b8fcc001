#![allow(dead_code)]

pub mod oracle;

use std::sync::Arc;

use rand::Rng;
use twlearn::corpus::{CountMatrix, DocumentSet, Vocabulary};
use twlearn::expr::TwsExpr;
use twlearn::termstats::{terminal_matrix, TermStats, WeightMatrix};

/// Random corpus with every class present. Some terms may occur in every
/// document or in none.
pub fn random_corpus<R: Rng>(
    rng: &mut R,
    max_docs: usize,
    max_terms: usize,
    max_classes: usize,
) -> DocumentSet {
    let k = rng.random_range(2..=max_classes);
    let n = rng.random_range(k..=max_docs.max(k));
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
    let rows: Vec<Vec<(u32, u32)>> = (0..n)
        .map(|_| {
            let mut row = Vec::new();
            for (j, &p) in density.iter().enumerate() {
                if rng.random_bool(p) {
                    row.push((j as u32, rng.random_range(1..=6)));
                }
            }
            row
        })
        .collect();
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

/// Evaluates on fully materialised matrices, with no sharing or broadcasting.
pub fn naive_eval(e: &TwsExpr, stats: &TermStats, data: &DocumentSet) -> WeightMatrix {
    match e {
        TwsExpr::Leaf(t) => terminal_matrix(*t, stats, data).unwrap(),
        TwsExpr::Unary(op, c) => naive_eval(c, stats, data).mapv(|x| op.apply(x)),
        TwsExpr::Binary(op, l, r) => {
            let a = naive_eval(l, stats, data);
            let b = naive_eval(r, stats, data);
            let mut out = a.clone();
            ndarray::Zip::from(&mut out)
                .and(&a)
                .and(&b)
                .for_each(|o, &x, &y| *o = op.apply(x, y));
            out
        }
    }
}

/// `[tp, fp, fn, tn]` by direct enumeration of documents.
pub fn brute_force_cell(data: &DocumentSet, term: usize, class: usize) -> [u32; 4] {
    let mut cell = [0u32; 4];
    for i in 0..data.n_docs() {
        let present = data.counts.get(i, term) > 0;
        let positive = data.labels[i] == class;
        let slot = match (present, positive) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        cell[slot] += 1;
    }
    cell
}
