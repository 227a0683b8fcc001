//! Supervised and unsupervised term statistics and the terminal set.
//!
//! [`TermStats::fit`] computes everything from a training [`DocumentSet`]
//! once. Terminals are then served for the training set or any other set
//! indexed by the same vocabulary: constants fill the whole matrix,
//! per-term vectors are repeated on every row, and the three document-term
//! terminals combine the set's own counts with the fitted vectors.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentSet, Vocabulary};
use crate::error::{Error, Result};

/// Dense document-by-term representation.
pub type WeightMatrix = Array2<f64>;

/// Rate clipping applied before the inverse-normal and odds-ratio transforms.
pub const RATE_CLIP: f64 = 0.0005;

/// Exponent of the Power statistic.
pub const POWER_EXPONENT: i32 = 5;

const STATS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalKind {
    Constant,
    TermVector,
    DocTermMatrix,
}

/// The 22 terminals `W1..W22`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Terminal {
    /// Number of training documents.
    W1,
    /// Vocabulary size.
    W2,
    /// Chi-square.
    W3,
    /// Information gain.
    W4,
    /// TF-IDF.
    W5,
    /// Raw term counts.
    W6,
    /// Global term frequency.
    W7,
    /// True positives.
    W8,
    /// False positives.
    W9,
    /// True negatives.
    W10,
    /// False negatives.
    W11,
    /// Accuracy of the term used as a classifier.
    W12,
    /// Accuracy balance.
    W13,
    /// Bi-normal separation.
    W14,
    /// Within-class document frequency.
    W15,
    /// F-measure of the term used as a classifier.
    W16,
    /// Odds ratio.
    W17,
    /// Power.
    W18,
    /// Probability ratio.
    W19,
    /// Highest count of the term in any training document.
    W20,
    /// Relevance frequency.
    W21,
    /// TF times RF.
    W22,
}

impl Terminal {
    pub const ALL: [Terminal; 22] = [
        Terminal::W1,
        Terminal::W2,
        Terminal::W3,
        Terminal::W4,
        Terminal::W5,
        Terminal::W6,
        Terminal::W7,
        Terminal::W8,
        Terminal::W9,
        Terminal::W10,
        Terminal::W11,
        Terminal::W12,
        Terminal::W13,
        Terminal::W14,
        Terminal::W15,
        Terminal::W16,
        Terminal::W17,
        Terminal::W18,
        Terminal::W19,
        Terminal::W20,
        Terminal::W21,
        Terminal::W22,
    ];

    /// 1-based terminal number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<Terminal> {
        Terminal::ALL.get(n.checked_sub(1)?).copied()
    }

    pub fn kind(self) -> TerminalKind {
        match self {
            Terminal::W1 | Terminal::W2 => TerminalKind::Constant,
            Terminal::W5 | Terminal::W6 | Terminal::W22 => TerminalKind::DocTermMatrix,
            _ => TerminalKind::TermVector,
        }
    }

    /// Canonical printed name.
    pub fn alias(self) -> &'static str {
        match self {
            Terminal::W1 => "N",
            Terminal::W2 => "V",
            Terminal::W3 => "CHI",
            Terminal::W4 => "IG",
            Terminal::W5 => "TFIDF",
            Terminal::W6 => "TF",
            Terminal::W7 => "GLOBTF",
            Terminal::W8 => "TP",
            Terminal::W9 => "FP",
            Terminal::W10 => "TN",
            Terminal::W11 => "FN",
            Terminal::W12 => "ACCU",
            Terminal::W13 => "ACBAL",
            Terminal::W14 => "BNS",
            Terminal::W15 => "DFREQ",
            Terminal::W16 => "FMEAS",
            Terminal::W17 => "ODDSR",
            Terminal::W18 => "POWER",
            Terminal::W19 => "ProbR",
            Terminal::W20 => "MAXTERM",
            Terminal::W21 => "RF",
            Terminal::W22 => "TF-RF",
        }
    }

    /// Accepts canonical aliases (case-insensitive), a few spelling variants
    /// and `W<n>` names.
    pub fn from_name(name: &str) -> Option<Terminal> {
        let upper = name.to_ascii_uppercase();
        if let Some(n) = upper
            .strip_prefix('W')
            .and_then(|d| d.parse::<usize>().ok())
        {
            return Terminal::from_number(n);
        }
        let t = match upper.as_str() {
            "N" => Terminal::W1,
            "V" | "|V|" => Terminal::W2,
            "CHI" => Terminal::W3,
            "IG" => Terminal::W4,
            "TFIDF" | "TF-IDF" => Terminal::W5,
            "TF" => Terminal::W6,
            "GLOBTF" | "FGT" => Terminal::W7,
            "TP" => Terminal::W8,
            "FP" => Terminal::W9,
            "TN" => Terminal::W10,
            "FN" => Terminal::W11,
            "ACCU" | "ACCURACY" => Terminal::W12,
            "ACBAL" | "ACCURACY_BALANCE" => Terminal::W13,
            "BNS" => Terminal::W14,
            "DFREQ" => Terminal::W15,
            "FMEAS" | "FMEASURE" => Terminal::W16,
            "ODDSR" | "ODDSRATIO" => Terminal::W17,
            "POWER" => Terminal::W18,
            "PROBR" | "PROBABILITYRATIO" => Terminal::W19,
            "MAXTERM" | "MAX_TERM" => Terminal::W20,
            "RF" => Terminal::W21,
            "TF-RF" | "TFRF" => Terminal::W22,
            _ => return None,
        };
        Some(t)
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.alias())
    }
}

/// How per-(term, class) statistics collapse to one value per term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Globalization {
    #[default]
    Max,
    PriorWeightedMean,
}

impl FromStr for Globalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Globalization::Max),
            "mean" | "prior-weighted-mean" => Ok(Globalization::PriorWeightedMean),
            other => Err(Error::InvalidParameter(format!(
                "unknown globalization `{other}` (expected max or mean)"
            ))),
        }
    }
}

impl fmt::Display for Globalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Globalization::Max => "max",
            Globalization::PriorWeightedMean => "mean",
        })
    }
}

/// Per (term, class) document counts for the term-presence classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    n_terms: usize,
    n_classes: usize,
    /// `[tp, fp, fn, tn]` at `term * n_classes + class`
    cells: Vec<[u32; 4]>,
}

impl ContingencyTable {
    pub fn from_documents(data: &DocumentSet) -> Self {
        let n_terms = data.n_terms();
        let k = data.n_classes();
        let n = data.n_docs() as u32;
        let class_sizes = data.class_sizes();
        let mut containing = vec![0u32; n_terms * k];
        for (i, row) in data.counts.rows().enumerate() {
            let c = data.labels[i];
            for &(j, _) in row {
                containing[j as usize * k + c] += 1;
            }
        }
        let mut cells = Vec::with_capacity(n_terms * k);
        for j in 0..n_terms {
            let df: u32 = containing[j * k..(j + 1) * k].iter().sum();
            for (c, &size) in class_sizes.iter().enumerate() {
                let size = size as u32;
                let tp = containing[j * k + c];
                let fp = df - tp;
                let fn_ = size - tp;
                let tn = n - size - fp;
                cells.push([tp, fp, fn_, tn]);
            }
        }
        ContingencyTable {
            n_terms,
            n_classes: k,
            cells,
        }
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// `[tp, fp, fn, tn]` for `term` against `class`.
    pub fn cell(&self, term: usize, class: usize) -> [u32; 4] {
        self.cells[term * self.n_classes + class]
    }

    pub fn tp(&self, term: usize, class: usize) -> u32 {
        self.cell(term, class)[0]
    }

    pub fn fp(&self, term: usize, class: usize) -> u32 {
        self.cell(term, class)[1]
    }

    pub fn fn_(&self, term: usize, class: usize) -> u32 {
        self.cell(term, class)[2]
    }

    pub fn tn(&self, term: usize, class: usize) -> u32 {
        self.cell(term, class)[3]
    }
}

/// Counts of one (term, class) pair with the derived rates.
#[derive(Debug, Clone, Copy)]
struct Cell {
    tp: f64,
    fp: f64,
    fn_: f64,
    tn: f64,
    n: f64,
}

impl Cell {
    fn new([tp, fp, fn_, tn]: [u32; 4]) -> Self {
        let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
        Cell {
            tp,
            fp,
            fn_,
            tn,
            n: tp + fp + fn_ + tn,
        }
    }

    fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    fn chi_square(&self) -> f64 {
        let denom =
            (self.tp + self.fp) * (self.fn_ + self.tn) * (self.tp + self.fn_) * (self.fp + self.tn);
        if denom == 0.0 {
            return 0.0;
        }
        let d = self.tp * self.tn - self.fp * self.fn_;
        self.n * d * d / denom
    }

    /// `fp` plays the role of the negative documents containing the term.
    fn relevance_frequency(&self) -> f64 {
        (2.0 + self.tp / self.fp.max(1.0)).log2()
    }

    fn bns(&self) -> f64 {
        let tpr = clip_rate(self.tpr());
        let fpr = clip_rate(self.fpr());
        (inverse_normal_cdf(tpr) - inverse_normal_cdf(fpr)).abs()
    }

    fn odds_ratio(&self) -> f64 {
        let tpr = clip_rate(self.tpr());
        let fpr = clip_rate(self.fpr());
        (tpr * (1.0 - fpr) / ((1.0 - tpr) * fpr)).log2()
    }

    fn power(&self) -> f64 {
        (1.0 - self.fpr()).powi(POWER_EXPONENT) - (1.0 - self.tpr()).powi(POWER_EXPONENT)
    }

    fn probability_ratio(&self) -> f64 {
        self.tpr() / self.fpr().max(RATE_CLIP)
    }

    fn f_measure(&self) -> f64 {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = self.tpr();
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }

    fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.n)
    }

    fn accuracy_balance(&self) -> f64 {
        (self.tpr() - self.fpr()).abs()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn clip_rate(r: f64) -> f64 {
    r.clamp(RATE_CLIP, 1.0 - RATE_CLIP)
}

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative error below 1.15e-9 on (0, 1)).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    assert!(
        p > 0.0 && p < 1.0,
        "inverse_normal_cdf domain is (0,1), got {p}"
    );
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

fn entropy(counts: impl IntoIterator<Item = f64>) -> f64 {
    let counts: Vec<f64> = counts.into_iter().collect();
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Statistics fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStats {
    format_version: u32,
    pub vocab: Vocabulary,
    pub n_train: usize,
    pub class_priors: Vec<f64>,
    pub globalization: Globalization,
    pub contingency: ContingencyTable,
    pub doc_frequency: Vec<u32>,
    pub idf: Vec<f64>,
    pub ig: Vec<f64>,
    pub chi: Vec<f64>,
    pub rf: Vec<f64>,
    pub bns: Vec<f64>,
    pub odds_ratio: Vec<f64>,
    pub power: Vec<f64>,
    pub prob_ratio: Vec<f64>,
    pub fmeasure: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub acc_balance: Vec<f64>,
    pub dfreq: Vec<f64>,
    pub global_tf: Vec<f64>,
    pub max_term: Vec<f64>,
    pub tp: Vec<f64>,
    pub fp: Vec<f64>,
    pub tn: Vec<f64>,
    pub fn_: Vec<f64>,
}

impl TermStats {
    pub fn fit(train: &DocumentSet) -> Result<TermStats> {
        TermStats::fit_with(train, Globalization::Max)
    }

    pub fn fit_with(train: &DocumentSet, globalization: Globalization) -> Result<TermStats> {
        let sizes = train.class_sizes();
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyClass(c));
        }
        let n = train.n_docs();
        let k = train.n_classes();
        let v = train.n_terms();
        let priors: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
        let contingency = ContingencyTable::from_documents(train);

        let doc_frequency = train.counts.document_frequency();
        let mut global_tf = vec![0.0; v];
        let mut max_term = vec![0.0f64; v];
        for row in train.counts.rows() {
            for &(j, cnt) in row {
                global_tf[j as usize] += cnt as f64;
                max_term[j as usize] = max_term[j as usize].max(cnt as f64);
            }
        }

        let idf = doc_frequency
            .iter()
            .map(|&df| {
                if df == 0 {
                    0.0
                } else {
                    (n as f64 / df as f64).log2()
                }
            })
            .collect();

        let class_entropy = entropy(sizes.iter().map(|&s| s as f64));
        let ig = (0..v)
            .map(|j| {
                let df = doc_frequency[j] as f64;
                let present = entropy((0..k).map(|c| contingency.tp(j, c) as f64));
                let absent = entropy((0..k).map(|c| contingency.fn_(j, c) as f64));
                let nf = n as f64;
                let gain = class_entropy - (df / nf) * present - ((nf - df) / nf) * absent;
                gain.max(0.0)
            })
            .collect();

        let per_term = |f: fn(&Cell) -> f64| -> Vec<f64> {
            (0..v)
                .map(|j| {
                    let values = (0..k).map(|c| f(&Cell::new(contingency.cell(j, c))));
                    globalize(globalization, values, &priors)
                })
                .collect()
        };

        Ok(TermStats {
            format_version: STATS_FORMAT_VERSION,
            vocab: (*train.vocab).clone(),
            n_train: n,
            globalization,
            idf,
            ig,
            chi: per_term(Cell::chi_square),
            rf: per_term(Cell::relevance_frequency),
            bns: per_term(Cell::bns),
            odds_ratio: per_term(Cell::odds_ratio),
            power: per_term(Cell::power),
            prob_ratio: per_term(Cell::probability_ratio),
            fmeasure: per_term(Cell::f_measure),
            accuracy: per_term(Cell::accuracy),
            acc_balance: per_term(Cell::accuracy_balance),
            dfreq: per_term(Cell::tpr),
            tp: per_term(|c| c.tp),
            fp: per_term(|c| c.fp),
            tn: per_term(|c| c.tn),
            fn_: per_term(|c| c.fn_),
            global_tf,
            max_term,
            doc_frequency,
            class_priors: priors,
            contingency,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_priors.len()
    }

    /// The fitted per-term vector behind a term-vector terminal, or the
    /// weight vector that multiplies counts for a document-term terminal
    /// (`W5` → idf, `W22` → rf, `W6` → none).
    pub fn term_vector(&self, t: Terminal) -> Option<&[f64]> {
        let v = match t {
            Terminal::W3 => &self.chi,
            Terminal::W4 => &self.ig,
            Terminal::W5 => &self.idf,
            Terminal::W7 => &self.global_tf,
            Terminal::W8 => &self.tp,
            Terminal::W9 => &self.fp,
            Terminal::W10 => &self.tn,
            Terminal::W11 => &self.fn_,
            Terminal::W12 => &self.accuracy,
            Terminal::W13 => &self.acc_balance,
            Terminal::W14 => &self.bns,
            Terminal::W15 => &self.dfreq,
            Terminal::W16 => &self.fmeasure,
            Terminal::W17 => &self.odds_ratio,
            Terminal::W18 => &self.power,
            Terminal::W19 => &self.prob_ratio,
            Terminal::W20 => &self.max_term,
            Terminal::W21 | Terminal::W22 => &self.rf,
            Terminal::W1 | Terminal::W2 | Terminal::W6 => return None,
        };
        Some(v)
    }

    pub fn constant(&self, t: Terminal) -> Option<f64> {
        match t {
            Terminal::W1 => Some(self.n_train as f64),
            Terminal::W2 => Some(self.n_terms() as f64),
            _ => None,
        }
    }

    pub fn check_compatible(&self, data: &DocumentSet) -> Result<()> {
        if data.vocab.fingerprint() != self.vocab.fingerprint() || data.n_terms() != self.n_terms()
        {
            return Err(Error::VocabularyMismatch {
                expected: self.vocab.fingerprint().to_owned(),
                found: data.vocab.fingerprint().to_owned(),
            });
        }
        Ok(())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<TermStats> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TermStats::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<TermStats> {
        let stats: TermStats = serde_json::from_str(text)?;
        if stats.format_version != STATS_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported statistics format version {}",
                stats.format_version
            )));
        }
        Ok(stats)
    }
}

fn globalize(mode: Globalization, values: impl Iterator<Item = f64>, priors: &[f64]) -> f64 {
    match mode {
        Globalization::Max => values.fold(f64::NEG_INFINITY, f64::max),
        Globalization::PriorWeightedMean => values.zip(priors).map(|(v, p)| v * p).sum(),
    }
}

/// A terminal's value before broadcasting to `N x |V|`.
#[derive(Debug, Clone, Copy)]
pub enum TerminalSource<'a> {
    Scalar(f64),
    Row(&'a [f64]),
    Matrix(&'a WeightMatrix),
}

/// Terminal values for one document set under one set of fitted statistics.
/// The document-term matrices are computed on first use and kept.
pub struct TerminalBank<'a> {
    stats: &'a TermStats,
    data: &'a DocumentSet,
    tf: OnceLock<WeightMatrix>,
    tfidf: OnceLock<WeightMatrix>,
    tfrf: OnceLock<WeightMatrix>,
}

impl<'a> TerminalBank<'a> {
    pub fn new(stats: &'a TermStats, data: &'a DocumentSet) -> Result<Self> {
        stats.check_compatible(data)?;
        Ok(TerminalBank {
            stats,
            data,
            tf: OnceLock::new(),
            tfidf: OnceLock::new(),
            tfrf: OnceLock::new(),
        })
    }

    pub fn n_docs(&self) -> usize {
        self.data.n_docs()
    }

    pub fn n_terms(&self) -> usize {
        self.data.n_terms()
    }

    pub fn stats(&self) -> &'a TermStats {
        self.stats
    }

    pub fn data(&self) -> &'a DocumentSet {
        self.data
    }

    fn counts_times(&self, weights: Option<&[f64]>) -> WeightMatrix {
        let mut m = Array2::zeros((self.n_docs(), self.n_terms()));
        for (i, row) in self.data.counts.rows().enumerate() {
            for &(j, cnt) in row {
                let j = j as usize;
                m[[i, j]] = match weights {
                    Some(w) => cnt as f64 * w[j],
                    None => cnt as f64,
                };
            }
        }
        m
    }

    pub fn source(&self, t: Terminal) -> TerminalSource<'_> {
        match t.kind() {
            TerminalKind::Constant => TerminalSource::Scalar(self.stats.constant(t).unwrap()),
            TerminalKind::TermVector => TerminalSource::Row(self.stats.term_vector(t).unwrap()),
            TerminalKind::DocTermMatrix => TerminalSource::Matrix(match t {
                Terminal::W6 => self.tf.get_or_init(|| self.counts_times(None)),
                Terminal::W5 => self
                    .tfidf
                    .get_or_init(|| self.counts_times(Some(&self.stats.idf))),
                Terminal::W22 => self
                    .tfrf
                    .get_or_init(|| self.counts_times(Some(&self.stats.rf))),
                _ => unreachable!(),
            }),
        }
    }

    pub fn matrix(&self, t: Terminal) -> WeightMatrix {
        let shape = (self.n_docs(), self.n_terms());
        match self.source(t) {
            TerminalSource::Scalar(s) => Array2::from_elem(shape, s),
            TerminalSource::Row(r) => Array1::from(r.to_vec())
                .broadcast(shape)
                .unwrap()
                .to_owned(),
            TerminalSource::Matrix(m) => m.clone(),
        }
    }
}

/// The `N x |V|` matrix of terminal `id` over `data`.
pub fn terminal_matrix(
    id: Terminal,
    stats: &TermStats,
    data: &DocumentSet,
) -> Result<WeightMatrix> {
    Ok(TerminalBank::new(stats, data)?.matrix(id))
}

/// The fixed baseline schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StandardScheme {
    Boolean,
    Tf,
    TfIdf,
    TfIg,
    TfChi,
    TfRf,
}

impl StandardScheme {
    pub const ALL: [StandardScheme; 6] = [
        StandardScheme::Boolean,
        StandardScheme::Tf,
        StandardScheme::TfIdf,
        StandardScheme::TfIg,
        StandardScheme::TfChi,
        StandardScheme::TfRf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StandardScheme::Boolean => "B",
            StandardScheme::Tf => "TF",
            StandardScheme::TfIdf => "TFIDF",
            StandardScheme::TfIg => "TF-IG",
            StandardScheme::TfChi => "TF-CHI",
            StandardScheme::TfRf => "TF-RF",
        }
    }
}

impl fmt::Display for StandardScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StandardScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StandardScheme::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown baseline scheme `{s}`")))
    }
}

pub fn standard_tws(
    scheme: StandardScheme,
    stats: &TermStats,
    data: &DocumentSet,
) -> Result<WeightMatrix> {
    let bank = TerminalBank::new(stats, data)?;
    Ok(match scheme {
        StandardScheme::Boolean => bank
            .counts_times(None)
            .mapv(|x| if x > 0.0 { 1.0 } else { 0.0 }),
        StandardScheme::Tf => bank.counts_times(None),
        StandardScheme::TfIdf => bank.counts_times(Some(&stats.idf)),
        StandardScheme::TfIg => bank.counts_times(Some(&stats.ig)),
        StandardScheme::TfChi => bank.counts_times(Some(&stats.chi)),
        StandardScheme::TfRf => bank.counts_times(Some(&stats.rf)),
    })
}
