//! Linear one-vs-rest SVM, macro-F1 and cross-validated fitness.
//!
//! Each class gets a hinge-loss linear model trained by stochastic
//! subgradient descent with step `1 / (lambda * (t + t0))`. The bias is an
//! extra constant feature. Columns are scaled by their max-abs value on the
//! training rows, and the returned weights average the end-of-epoch iterates
//! over the second half of training.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::DocumentSet;
use crate::error::{Error, Result};
use crate::expr::{Evaluator, TwsExpr};
use crate::rng::{derive_seed, stream_rng};
use crate::termstats::{TermStats, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Per-column max-abs scaling fitted on the training rows.
    pub scale_columns: bool,
    /// L2-normalise each document row after column scaling.
    pub normalize_rows: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 10,
            seed: 0,
            scale_columns: true,
            normalize_rows: false,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        Ok(())
    }

    /// Offset keeping the first steps bounded (initial step `lambda^-1/4`).
    fn t0(&self) -> f64 {
        1.0 / (self.lambda * self.lambda.powf(-0.25))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `K x |V|` weights in the scaled feature space.
    pub weights: Array2<f64>,
    pub bias: Vec<f64>,
    /// Multiplier applied to each input column before scoring.
    pub column_scale: Vec<f64>,
    pub params: SvmParams,
}

/// Sparse rows after scaling: (column, value) pairs.
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

fn column_scale(x: ArrayView2<f64>, rows: &[usize], enabled: bool) -> Vec<f64> {
    let mut max = vec![0.0f64; x.ncols()];
    if !enabled {
        return vec![1.0; x.ncols()];
    }
    for &i in rows {
        for (m, &v) in max.iter_mut().zip(x.row(i)) {
            *m = m.max(v.abs());
        }
    }
    max.into_iter()
        .map(|m| if m > 0.0 { 1.0 / m } else { 1.0 })
        .collect()
}

fn sparse_rows(x: ArrayView2<f64>, rows: &[usize], scale: &[f64], normalize: bool) -> SparseRows {
    let rows = rows
        .iter()
        .map(|&i| {
            let mut r: Vec<(usize, f64)> = x
                .row(i)
                .iter()
                .zip(scale)
                .enumerate()
                .filter(|(_, (&v, _))| v != 0.0)
                .map(|(j, (&v, &s))| (j, v * s))
                .collect();
            if normalize {
                let norm = r.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    r.iter_mut().for_each(|(_, v)| *v /= norm);
                }
            }
            r
        })
        .collect();
    SparseRows { rows }
}

impl LinearModel {
    /// Trains on all rows of `x`.
    pub fn train(
        x: ArrayView2<f64>,
        y: &[usize],
        n_classes: usize,
        params: &SvmParams,
    ) -> Result<Self> {
        let rows: Vec<usize> = (0..x.nrows()).collect();
        Self::train_rows(x, y, &rows, n_classes, params)
    }

    /// Trains on the subset `rows` of `x`; `y` is indexed like `x`.
    pub fn train_rows(
        x: ArrayView2<f64>,
        y: &[usize],
        rows: &[usize],
        n_classes: usize,
        params: &SvmParams,
    ) -> Result<Self> {
        params.validate()?;
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        let first = rows.first().map(|&i| y[i]);
        if n_classes < 2 || rows.iter().all(|&i| Some(y[i]) == first) {
            return Err(Error::SingleClass);
        }

        let n_terms = x.ncols();
        let scale = column_scale(x, rows, params.scale_columns);
        let data = sparse_rows(x, rows, &scale, params.normalize_rows);
        let labels: Vec<usize> = rows.iter().map(|&i| y[i]).collect();

        // w = s * v, with the bias as the last coordinate of v.
        let dim = n_terms + 1;
        let mut v = vec![vec![0.0f64; dim]; n_classes];
        let mut s = vec![1.0f64; n_classes];
        let mut avg = vec![vec![0.0f64; dim]; n_classes];
        let mut n_avg = 0usize;
        let avg_from = params.epochs / 2;

        let lambda = params.lambda;
        let t0 = params.t0();
        let mut rng = stream_rng(params.seed, "sgd-order");
        let mut order: Vec<usize> = (0..data.rows.len()).collect();
        let mut t = 0.0f64;

        for epoch in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let eta = 1.0 / (lambda * (t + t0));
                t += 1.0;
                let row = &data.rows[i];
                for c in 0..n_classes {
                    let target = if labels[i] == c { 1.0 } else { -1.0 };
                    let vc = &mut v[c];
                    let dot =
                        s[c] * (row.iter().map(|&(j, x)| vc[j] * x).sum::<f64>() + vc[n_terms]);
                    s[c] *= 1.0 - eta * lambda;
                    if target * dot < 1.0 {
                        let g = eta * target / s[c];
                        for &(j, x) in row {
                            vc[j] += g * x;
                        }
                        vc[n_terms] += g;
                    }
                    if s[c] < 1e-9 {
                        vc.iter_mut().for_each(|w| *w *= s[c]);
                        s[c] = 1.0;
                    }
                }
            }
            if epoch >= avg_from {
                for c in 0..n_classes {
                    for (a, &w) in avg[c].iter_mut().zip(&v[c]) {
                        *a += s[c] * w;
                    }
                }
                n_avg += 1;
            }
        }

        let mut weights = Array2::zeros((n_classes, n_terms));
        let mut bias = vec![0.0; n_classes];
        for c in 0..n_classes {
            for j in 0..n_terms {
                weights[[c, j]] = avg[c][j] / n_avg as f64;
            }
            bias[c] = avg[c][n_terms] / n_avg as f64;
        }
        Ok(LinearModel {
            weights,
            bias,
            column_scale: scale,
            params: *params,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn n_terms(&self) -> usize {
        self.weights.ncols()
    }

    fn scores_row(&self, row: &[(usize, f64)]) -> Vec<f64> {
        (0..self.n_classes())
            .map(|c| {
                let w = self.weights.row(c);
                row.iter().map(|&(j, x)| w[j] * x).sum::<f64>() + self.bias[c]
            })
            .collect()
    }

    /// Class scores for each row of `x`.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.decision_rows(x, &(0..x.nrows()).collect::<Vec<_>>())
    }

    fn decision_rows(&self, x: ArrayView2<f64>, rows: &[usize]) -> Result<Array2<f64>> {
        if x.ncols() != self.n_terms() {
            return Err(Error::DimensionMismatch {
                expected: self.n_terms(),
                found: x.ncols(),
            });
        }
        let data = sparse_rows(x, rows, &self.column_scale, self.params.normalize_rows);
        let mut out = Array2::zeros((rows.len(), self.n_classes()));
        for (i, row) in data.rows.iter().enumerate() {
            for (c, s) in self.scores_row(row).into_iter().enumerate() {
                out[[i, c]] = s;
            }
        }
        Ok(out)
    }

    /// Argmax class per row; ties go to the lowest class id.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.predict_rows(x, &(0..x.nrows()).collect::<Vec<_>>())
    }

    pub fn predict_rows(&self, x: ArrayView2<f64>, rows: &[usize]) -> Result<Vec<usize>> {
        let scores = self.decision_rows(x, rows)?;
        Ok(scores
            .rows()
            .into_iter()
            .map(|r| argmax(r.iter().copied()))
            .collect())
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// `K x K` counts; rows are true classes, columns predictions.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], n_classes: usize) -> Vec<Vec<u64>> {
    assert_eq!(
        pred.len(),
        truth.len(),
        "prediction and truth lengths differ"
    );
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        m[t][p] += 1;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<Vec<u64>>,
}

impl EvalReport {
    pub fn from_predictions(pred: &[usize], truth: &[usize], class_names: &[String]) -> Self {
        let k = class_names.len();
        let confusion = confusion_matrix(pred, truth, k);
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = confusion[c][c] as f64;
                let support: u64 = confusion[c].iter().sum();
                let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
                let precision = if predicted > 0 {
                    tp / predicted as f64
                } else {
                    0.0
                };
                let recall = if support > 0 {
                    tp / support as f64
                } else {
                    0.0
                };
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassMetrics {
                    class: class_names[c].clone(),
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let macro_f1 = if k == 0 {
            0.0
        } else {
            per_class.iter().map(|m| m.f1).sum::<f64>() / k as f64
        };
        let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
        let accuracy = if pred.is_empty() {
            0.0
        } else {
            correct as f64 / pred.len() as f64
        };
        EvalReport {
            macro_f1,
            accuracy,
            per_class,
            confusion,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Header row of predicted classes, then one row per true class.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for m in &self.per_class {
            write!(out, ",{}", m.class).unwrap();
        }
        out.push('\n');
        for (m, row) in self.per_class.iter().zip(&self.confusion) {
            out.push_str(&m.class);
            for n in row {
                write!(out, ",{n}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Mean per-class F1; a class with precision + recall = 0 scores 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> f64 {
    let names: Vec<String> = (0..n_classes).map(|c| c.to_string()).collect();
    EvalReport::from_predictions(pred, truth, &names).macro_f1
}

/// Fold count actually usable for `labels`: `k` lowered to the smallest
/// class size, but never below 2.
pub fn effective_folds(labels: &[usize], n_classes: usize, k: usize) -> usize {
    let mut sizes = vec![0usize; n_classes];
    for &c in labels {
        sizes[c] += 1;
    }
    let smallest = sizes.into_iter().filter(|&n| n > 0).min().unwrap_or(0);
    if smallest < k {
        smallest.max(2)
    } else {
        k
    }
}

/// Stratified partition of row indices into `k` folds. Each class is
/// shuffled and dealt round-robin, continuing where the previous class
/// stopped. Folds are returned sorted.
pub fn stratified_folds<R: rand::Rng + ?Sized>(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    assert!(k >= 1, "need at least one fold");
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Fixed fold layout reused across many representations of one training set.
#[derive(Debug, Clone)]
pub struct CrossValidator {
    labels: Vec<usize>,
    n_classes: usize,
    folds: Vec<Vec<usize>>,
    params: SvmParams,
}

impl CrossValidator {
    /// `k` is lowered via [`effective_folds`] when classes are small.
    pub fn new(
        labels: &[usize],
        n_classes: usize,
        k: usize,
        seed: u64,
        params: SvmParams,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "folds must be at least 2, got {k}"
            )));
        }
        params.validate()?;
        let eff = effective_folds(labels, n_classes, k);
        if eff != k {
            log::info!("lowering folds from {k} to {eff}: smallest class is too small");
        }
        let mut rng = stream_rng(seed, "folds");
        let folds = stratified_folds(labels, n_classes, eff, &mut rng);
        Ok(CrossValidator {
            labels: labels.to_vec(),
            n_classes,
            folds,
            params,
        })
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Mean held-out macro-F1 over the folds for representation `x`.
    pub fn score(&self, x: &WeightMatrix) -> f64 {
        let n = self.labels.len();
        assert_eq!(x.nrows(), n, "representation rows must match labels");
        let mut total = 0.0;
        for (f, held) in self.folds.iter().enumerate() {
            let mut in_held = vec![false; n];
            held.iter().for_each(|&i| in_held[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !in_held[i]).collect();
            let params = SvmParams {
                seed: derive_seed(self.params.seed, &format!("fold-{f}")),
                ..self.params
            };
            let truth: Vec<usize> = held.iter().map(|&i| self.labels[i]).collect();
            let pred = match LinearModel::train_rows(
                x.view(),
                &self.labels,
                &train,
                self.n_classes,
                &params,
            ) {
                Ok(model) => model
                    .predict_rows(x.view(), held)
                    .expect("same column count"),
                // A fold whose training part holds one class predicts it.
                Err(Error::SingleClass) => vec![self.labels[train[0]]; held.len()],
                Err(e) => panic!("training failed on a validated configuration: {e}"),
            };
            total += macro_f1(&pred, &truth, self.n_classes);
        }
        total / self.k() as f64
    }
}

/// Cross-validated macro-F1 of `expr` on the training set.
pub fn kfold_fitness(
    expr: &TwsExpr,
    stats: &TermStats,
    train: &DocumentSet,
    k: usize,
    seed: u64,
    params: &SvmParams,
) -> Result<f64> {
    let evaluator = Evaluator::new(stats, train)?;
    let params = SvmParams { seed, ..*params };
    let cv = CrossValidator::new(&train.labels, train.n_classes(), k, seed, params)?;
    Ok(cv.score(&evaluator.eval(expr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blob() -> (Array2<f64>, Vec<usize>) {
        // 20 docs, two active terms: class 0 uses term 0, class 1 term 1.
        let mut x = Array2::zeros((20, 4));
        let mut y = Vec::new();
        for i in 0..20 {
            let c = i % 2;
            x[[i, c]] = 1.0 + (i % 3) as f64;
            x[[i, 2]] = (i % 4) as f64;
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn separable_blob_is_learned() {
        let (x, y) = blob();
        let m = LinearModel::train(x.view(), &y, 2, &SvmParams::default()).unwrap();
        let pred = m.predict(x.view()).unwrap();
        assert_eq!(macro_f1(&pred, &y, 2), 1.0);
        let test = arr2(&[[2.0, 0.0, 1.0, 0.0], [0.0, 3.0, 0.0, 0.0]]);
        assert_eq!(m.predict(test.view()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = blob();
        let p = SvmParams {
            seed: 9,
            ..Default::default()
        };
        let a = LinearModel::train(x.view(), &y, 2, &p).unwrap();
        let b = LinearModel::train(x.view(), &y, 2, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_features_predict_majority() {
        let x = Array2::zeros((12, 3));
        let y = vec![0, 1, 1, 1, 1, 1, 1, 2, 2, 0, 1, 1];
        let m = LinearModel::train(x.view(), &y, 3, &SvmParams::default()).unwrap();
        assert!(m.predict(x.view()).unwrap().iter().all(|&c| c == 1));
    }

    #[test]
    fn errors() {
        let (x, y) = blob();
        assert!(matches!(
            LinearModel::train(x.view(), &[0; 20], 2, &SvmParams::default()),
            Err(Error::SingleClass)
        ));
        let m = LinearModel::train(x.view(), &y, 2, &SvmParams::default()).unwrap();
        assert!(matches!(
            m.predict(Array2::zeros((1, 3)).view()),
            Err(Error::DimensionMismatch {
                expected: 4,
                found: 3
            })
        ));
        let bad = SvmParams {
            lambda: 0.0,
            ..Default::default()
        };
        assert!(LinearModel::train(x.view(), &y, 2, &bad).is_err());
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        let m = LinearModel {
            weights: Array2::zeros((3, 2)),
            bias: vec![0.5, 1.0, 1.0],
            column_scale: vec![1.0, 1.0],
            params: SvmParams::default(),
        };
        assert_eq!(m.predict(Array2::zeros((1, 2)).view()).unwrap(), vec![1]);
    }

    #[test]
    fn macro_f1_hand_cases() {
        assert_eq!(macro_f1(&[0, 0, 1, 1], &[0, 0, 1, 1], 2), 1.0);
        assert_eq!(macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2), 1.0 / 3.0);
        assert_eq!(macro_f1(&[1, 0], &[0, 1], 2), 0.0);
    }

    #[test]
    fn report_json_and_csv() {
        let names = vec!["a".to_string(), "b".to_string()];
        let r = EvalReport::from_predictions(&[0, 1, 1], &[0, 0, 1], &names);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![0, 1]]);
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.confusion_csv(), "true\\pred,a,b\na,1,1\nb,0,1\n");
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<usize> = (0..23).map(|i| if i < 14 { 0 } else { 1 }).collect();
        let folds = stratified_folds(&labels, 2, 3, &mut ChaCha8Rng::seed_from_u64(1));
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        for f in &folds {
            let c0 = f.iter().filter(|&&i| labels[i] == 0).count() as f64;
            assert!((c0 - 14.0 / 3.0).abs() <= 1.0);
        }
        assert_eq!(effective_folds(&[0, 0, 0, 1, 1], 2, 3), 2);
        assert_eq!(effective_folds(&[0, 1], 2, 5), 2);
        assert_eq!(effective_folds(&[0, 0, 0, 1, 1, 1], 2, 3), 3);
    }

    #[test]
    fn cross_validation_is_deterministic_and_scale_free() {
        let (x, y) = blob();
        let cv = CrossValidator::new(&y, 2, 3, 4, SvmParams::default()).unwrap();
        let a = cv.score(&x);
        assert_eq!(a, cv.score(&x));
        assert!(a >= 0.95);
        assert_eq!(cv.score(&(&x * 8.0)), a);
    }
}
