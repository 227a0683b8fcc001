//! Labeled document collections in vector-space form.
//!
//! Raw text is loaded as [`Document`]s, tokenized with a [`TokenizerSpec`],
//! indexed by a frequency-ranked [`Vocabulary`] built from training documents
//! only, and turned into a sparse [`DocumentSet`] of term counts. Precomputed
//! count matrices (for example visual-word histograms) load straight into a
//! [`DocumentSet`].

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenMode {
    WordUnigram,
    CharTrigram,
}

impl fmt::Display for TokenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenMode::WordUnigram => "word",
            TokenMode::CharTrigram => "char3",
        })
    }
}

impl FromStr for TokenMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" | "word-unigram" | "words" => Ok(TokenMode::WordUnigram),
            "char3" | "char-3gram" | "char-trigram" => Ok(TokenMode::CharTrigram),
            other => Err(Error::InvalidParameter(format!(
                "unknown tokenizer mode `{other}` (expected word or char3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub mode: TokenMode,
    pub lowercase: bool,
    /// Trim non-alphanumeric characters from both ends of each word.
    /// Ignored in char-3gram mode.
    pub strip_punctuation: bool,
}

impl Default for TokenizerSpec {
    fn default() -> Self {
        Self::words()
    }
}

impl TokenizerSpec {
    pub fn words() -> Self {
        TokenizerSpec {
            mode: TokenMode::WordUnigram,
            lowercase: true,
            strip_punctuation: true,
        }
    }

    pub fn char_trigrams() -> Self {
        TokenizerSpec {
            mode: TokenMode::CharTrigram,
            lowercase: true,
            strip_punctuation: false,
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_owned()
        };
        match self.mode {
            TokenMode::WordUnigram => text
                .split_whitespace()
                .map(|w| {
                    if self.strip_punctuation {
                        w.trim_matches(|c: char| !c.is_alphanumeric())
                    } else {
                        w
                    }
                })
                .filter(|w| !w.is_empty())
                .map(str::to_owned)
                .collect(),
            // windows over the raw text, whitespace included
            TokenMode::CharTrigram => {
                let chars: Vec<char> = text.chars().collect();
                chars.windows(3).map(|w| w.iter().collect()).collect()
            }
        }
    }
}

pub fn tokenize(doc: &Document, spec: &TokenizerSpec) -> Vec<String> {
    spec.tokenize(&doc.text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `root/<class-name>/<document-file>`
    LabeledDirs,
    /// `label<TAB>text`, one document per line
    Tsv,
    /// `#V=<int>` header, then `label idx:count ...` rows with 0-based indices
    SvmlightCounts,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labeled-dirs" | "dirs" => Ok(CorpusFormat::LabeledDirs),
            "tsv" => Ok(CorpusFormat::Tsv),
            "svmlight-counts" | "svmlight" => Ok(CorpusFormat::SvmlightCounts),
            other => Err(Error::InvalidParameter(format!(
                "unknown corpus format `{other}` (expected labeled-dirs, tsv or svmlight-counts)"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::LabeledDirs => "labeled-dirs",
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::SvmlightCounts => "svmlight-counts",
        })
    }
}

/// Text documents with their class-name table; `docs[i].label` indexes
/// `class_names`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTexts {
    pub docs: Vec<Document>,
    pub class_names: Vec<String>,
}

impl LabeledTexts {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.docs.iter().map(|d| d.label).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> LabeledTexts {
        LabeledTexts {
            docs: rows.iter().map(|&i| self.docs[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Corpus {
    Texts(LabeledTexts),
    Counts(DocumentSet),
}

impl Corpus {
    pub fn class_names(&self) -> &[String] {
        match self {
            Corpus::Texts(t) => &t.class_names,
            Corpus::Counts(d) => &d.class_names,
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        match self {
            Corpus::Texts(t) => t.labels(),
            Corpus::Counts(d) => d.labels.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Texts(t) => t.docs.len(),
            Corpus::Counts(d) => d.n_docs(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, rows: &[usize]) -> Corpus {
        match self {
            Corpus::Texts(t) => Corpus::Texts(t.subset(rows)),
            Corpus::Counts(d) => Corpus::Counts(d.subset(rows)),
        }
    }
}

/// Loads a corpus, assigning class ids by sorted class-name order.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    load_corpus_with_classes(path, format, None)
}

/// Like [`load_corpus`], but maps labels onto a fixed class table (typically
/// the training corpus's) and rejects labels outside it.
pub fn load_corpus_with_classes(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    classes: Option<&[String]>,
) -> Result<Corpus> {
    let path = path.as_ref();
    match format {
        CorpusFormat::LabeledDirs => load_labeled_dirs(path, classes).map(Corpus::Texts),
        CorpusFormat::Tsv => load_tsv(path, classes).map(Corpus::Texts),
        CorpusFormat::SvmlightCounts => load_svmlight(path, classes).map(Corpus::Counts),
    }
}

/// Numeric order when every name is an unsigned integer, lexicographic otherwise.
fn sort_class_names(names: &mut [String]) {
    if names.iter().all(|n| n.parse::<u64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<u64>().unwrap());
    } else {
        names.sort();
    }
}

fn class_table(
    found: BTreeSet<String>,
    classes: Option<&[String]>,
) -> Result<(Vec<String>, HashMap<String, usize>)> {
    let names = match classes {
        Some(fixed) => {
            if let Some(unknown) = found.iter().find(|n| !fixed.contains(n)) {
                return Err(Error::UnknownLabel(unknown.clone()));
            }
            fixed.to_vec()
        }
        None => {
            let mut names: Vec<String> = found.into_iter().collect();
            sort_class_names(&mut names);
            names
        }
    };
    let index = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    Ok((names, index))
}

fn load_labeled_dirs(root: &Path, classes: Option<&[String]>) -> Result<LabeledTexts> {
    let mut class_dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || !entry.path().is_dir() {
            continue;
        }
        class_dirs.push(name);
    }
    let (class_names, index) = class_table(class_dirs.iter().cloned().collect(), classes)?;

    let mut ordered: Vec<&String> = class_dirs.iter().collect();
    ordered.sort_by_key(|n| index[n.as_str()]);
    let mut docs = Vec::new();
    for class in ordered {
        let dir = root.join(class);
        let mut files: Vec<_> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| !n.starts_with('.'))
            .collect();
        files.sort();
        for file in files {
            let p = dir.join(&file);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            docs.push(Document {
                id: format!("{class}/{file}"),
                text: String::from_utf8_lossy(&bytes).into_owned(),
                label: index[class.as_str()],
            });
        }
    }
    Ok(LabeledTexts { docs, class_names })
}

fn load_tsv(path: &Path, classes: Option<&[String]>) -> Result<LabeledTexts> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| Error::Malformed {
            path: path.to_owned(),
            line: lineno + 1,
            msg: "expected `label<TAB>text`".into(),
        })?;
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::Malformed {
                path: path.to_owned(),
                line: lineno + 1,
                msg: "empty label".into(),
            });
        }
        rows.push((lineno + 1, label.to_owned(), text.to_owned()));
    }
    let found = rows.iter().map(|(_, l, _)| l.clone()).collect();
    let (class_names, index) = class_table(found, classes)?;
    let docs = rows
        .into_iter()
        .map(|(lineno, label, text)| Document {
            id: format!("line-{lineno}"),
            text,
            label: index[&label],
        })
        .collect();
    Ok(LabeledTexts { docs, class_names })
}

fn load_svmlight(path: &Path, classes: Option<&[String]>) -> Result<DocumentSet> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, msg: String| Error::Malformed {
        path: path.to_owned(),
        line,
        msg,
    };

    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "missing `#V=<int>` header".into()))?;
    let n_terms: usize = header
        .strip_prefix("#V=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| malformed(hline, format!("expected `#V=<int>` header, got `{header}`")))?;

    let mut raw_rows = Vec::new();
    for (lineno, line) in lines {
        let mut parts = line.split_whitespace();
        let label = parts.next().unwrap().to_owned();
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for item in parts {
            let (idx, count) = item
                .split_once(':')
                .ok_or_else(|| malformed(lineno, format!("expected `idx:count`, got `{item}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| malformed(lineno, format!("bad index `{idx}`")))?;
            let count: u32 = count
                .parse()
                .map_err(|_| malformed(lineno, format!("bad count `{count}`")))?;
            if idx >= n_terms {
                return Err(malformed(
                    lineno,
                    format!("index {idx} out of range for #V={n_terms}"),
                ));
            }
            entries.push((idx as u32, count));
        }
        raw_rows.push((lineno, label, entries));
    }

    let found = raw_rows.iter().map(|(_, l, _)| l.clone()).collect();
    let (class_names, index) = class_table(found, classes)?;

    let width = n_terms.saturating_sub(1).to_string().len();
    let terms: Vec<String> = (0..n_terms).map(|i| format!("v{i:0width$}")).collect();
    let mut builder = CountMatrixBuilder::new(n_terms);
    let mut labels = Vec::with_capacity(raw_rows.len());
    let mut ids = Vec::with_capacity(raw_rows.len());
    for (lineno, label, entries) in raw_rows {
        builder.push_row(entries);
        labels.push(index[&label]);
        ids.push(format!("line-{lineno}"));
    }
    let counts = builder.finish();
    let vocab = Vocabulary::from_parts(
        terms,
        counts.document_frequency(),
        counts.collection_frequency(),
    );
    DocumentSet::new(counts, labels, Arc::new(vocab), class_names, ids)
}

/// How many ranked terms to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VocabSize {
    All,
    Top(usize),
}

impl FromStr for VocabSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(VocabSize::All);
        }
        match s.parse::<i64>() {
            Ok(k) if k > 0 => Ok(VocabSize::Top(k as usize)),
            _ => Err(Error::InvalidParameter(format!(
                "vocabulary size must be a positive integer or `all`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for VocabSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VocabSize::All => f.write_str("all"),
            VocabSize::Top(k) => write!(f, "{k}"),
        }
    }
}

/// Term index ordered by descending collection frequency, ties broken
/// lexicographically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabularyRecord", into = "VocabularyRecord")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_frequency: Vec<u32>,
    collection_frequency: Vec<u64>,
    fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    terms: Vec<String>,
    doc_frequency: Vec<u32>,
    collection_frequency: Vec<u64>,
}

impl From<VocabularyRecord> for Vocabulary {
    fn from(r: VocabularyRecord) -> Self {
        Vocabulary::from_parts(r.terms, r.doc_frequency, r.collection_frequency)
    }
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        VocabularyRecord {
            terms: v.terms,
            doc_frequency: v.doc_frequency,
            collection_frequency: v.collection_frequency,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
            && self.doc_frequency == other.doc_frequency
            && self.collection_frequency == other.collection_frequency
    }
}

impl Vocabulary {
    /// Takes terms in the given order without re-ranking.
    pub fn from_parts(
        terms: Vec<String>,
        doc_frequency: Vec<u32>,
        collection_frequency: Vec<u64>,
    ) -> Self {
        assert_eq!(terms.len(), doc_frequency.len());
        assert_eq!(terms.len(), collection_frequency.len());
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let fingerprint = fingerprint(&terms);
        Vocabulary {
            terms,
            index,
            doc_frequency,
            collection_frequency,
            fingerprint,
        }
    }

    /// Ranks `(term, doc_frequency, collection_frequency)` triples and keeps
    /// the first `size`. Terms that never occur are dropped.
    pub fn ranked(mut stats: Vec<(String, u32, u64)>, size: VocabSize) -> Self {
        stats.retain(|(_, df, _)| *df > 0);
        stats.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        if let VocabSize::Top(k) = size {
            stats.truncate(k);
        }
        let mut terms = Vec::with_capacity(stats.len());
        let mut df = Vec::with_capacity(stats.len());
        let mut cf = Vec::with_capacity(stats.len());
        for (t, d, c) in stats {
            terms.push(t);
            df.push(d);
            cf.push(c);
        }
        Vocabulary::from_parts(terms, df, cf)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_frequency(&self) -> &[u32] {
        &self.doc_frequency
    }

    pub fn collection_frequency(&self) -> &[u64] {
        &self.collection_frequency
    }

    /// Hex digest of the ordered term list.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// The first `k` terms of this vocabulary.
    pub fn prefix(&self, k: usize) -> Vocabulary {
        let k = k.min(self.len());
        Vocabulary::from_parts(
            self.terms[..k].to_vec(),
            self.doc_frequency[..k].to_vec(),
            self.collection_frequency[..k].to_vec(),
        )
    }
}

fn fingerprint(terms: &[String]) -> String {
    let mut hasher = Sha256::new();
    for t in terms {
        hasher.update(t.as_bytes());
        hasher.update([0u8]);
    }
    hasher.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn build_vocabulary(
    docs: &[Document],
    spec: &TokenizerSpec,
    top_k: VocabSize,
) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot build a vocabulary from zero documents".into(),
        ));
    }
    if top_k == VocabSize::Top(0) {
        return Err(Error::InvalidParameter(
            "vocabulary size must be positive".into(),
        ));
    }
    let mut stats: HashMap<String, (u32, u64)> = HashMap::new();
    for doc in docs {
        let mut seen: HashMap<String, u64> = HashMap::new();
        for tok in spec.tokenize(&doc.text) {
            *seen.entry(tok).or_default() += 1;
        }
        for (tok, n) in seen {
            let e = stats.entry(tok).or_default();
            e.0 += 1;
            e.1 += n;
        }
    }
    let triples = stats.into_iter().map(|(t, (d, c))| (t, d, c)).collect();
    Ok(Vocabulary::ranked(triples, top_k))
}

/// Row-compressed nonnegative integer matrix; each row holds `(column, count)`
/// pairs sorted by column with nonzero counts only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMatrix {
    n_cols: usize,
    row_ptr: Vec<usize>,
    entries: Vec<(u32, u32)>,
}

struct CountMatrixBuilder {
    n_cols: usize,
    row_ptr: Vec<usize>,
    entries: Vec<(u32, u32)>,
}

impl CountMatrixBuilder {
    fn new(n_cols: usize) -> Self {
        CountMatrixBuilder {
            n_cols,
            row_ptr: vec![0],
            entries: Vec::new(),
        }
    }

    fn push_row(&mut self, mut row: Vec<(u32, u32)>) {
        row.sort_unstable_by_key(|&(c, _)| c);
        let start = self.entries.len();
        for (c, n) in row {
            if n == 0 {
                continue;
            }
            let in_row = self.entries.len() > start;
            match self.entries.last_mut() {
                Some(last) if in_row && last.0 == c => last.1 += n,
                _ => self.entries.push((c, n)),
            }
        }
        self.row_ptr.push(self.entries.len());
    }

    fn finish(self) -> CountMatrix {
        CountMatrix {
            n_cols: self.n_cols,
            row_ptr: self.row_ptr,
            entries: self.entries,
        }
    }
}

impl CountMatrix {
    pub fn from_rows(n_cols: usize, rows: impl IntoIterator<Item = Vec<(u32, u32)>>) -> Self {
        let mut b = CountMatrixBuilder::new(n_cols);
        for r in rows {
            debug_assert!(r.iter().all(|&(c, _)| (c as usize) < n_cols));
            b.push_row(r);
        }
        b.finish()
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(u32, u32)] {
        &self.entries[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let row = self.row(i);
        row.binary_search_by_key(&(j as u32), |&(c, _)| c)
            .map(|k| row[k].1)
            .unwrap_or(0)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(u32, u32)]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn to_dense(&self) -> ndarray::Array2<f64> {
        let mut m = ndarray::Array2::zeros((self.n_rows(), self.n_cols));
        for (i, row) in self.rows().enumerate() {
            for &(c, n) in row {
                m[[i, c as usize]] = n as f64;
            }
        }
        m
    }

    pub fn collection_frequency(&self) -> Vec<u64> {
        let mut cf = vec![0u64; self.n_cols];
        for &(c, n) in &self.entries {
            cf[c as usize] += n as u64;
        }
        cf
    }

    pub fn document_frequency(&self) -> Vec<u32> {
        let mut df = vec![0u32; self.n_cols];
        for &(c, _) in &self.entries {
            df[c as usize] += 1;
        }
        df
    }
}

/// A corpus in vector-space form: `counts[i][j]` is the number of times
/// vocabulary term `j` occurs in document `i`.
#[derive(Debug, Clone)]
pub struct DocumentSet {
    pub counts: CountMatrix,
    pub labels: Vec<usize>,
    pub vocab: Arc<Vocabulary>,
    pub class_names: Vec<String>,
    pub doc_ids: Vec<String>,
}

impl DocumentSet {
    pub fn new(
        counts: CountMatrix,
        labels: Vec<usize>,
        vocab: Arc<Vocabulary>,
        class_names: Vec<String>,
        doc_ids: Vec<String>,
    ) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::TooFewClasses(class_names.len()));
        }
        if counts.n_rows() != labels.len() || labels.len() != doc_ids.len() {
            return Err(Error::InvalidParameter(format!(
                "{} count rows, {} labels, {} ids",
                counts.n_rows(),
                labels.len(),
                doc_ids.len()
            )));
        }
        if counts.n_cols() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: counts.n_cols(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(DocumentSet {
            counts,
            labels,
            vocab,
            class_names,
            doc_ids,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.labels.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_classes()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn subset(&self, rows: &[usize]) -> DocumentSet {
        DocumentSet {
            counts: CountMatrix::from_rows(
                self.counts.n_cols(),
                rows.iter().map(|&i| self.counts.row(i).to_vec()),
            ),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            vocab: Arc::clone(&self.vocab),
            class_names: self.class_names.clone(),
            doc_ids: rows.iter().map(|&i| self.doc_ids[i].clone()).collect(),
        }
    }

    /// Re-indexes columns onto `vocab`, matching terms by string. Terms of
    /// `vocab` absent from this set become zero columns.
    pub fn project(&self, vocab: Arc<Vocabulary>) -> DocumentSet {
        let mapping: Vec<Option<u32>> = self
            .vocab
            .terms()
            .iter()
            .map(|t| vocab.get(t).map(|j| j as u32))
            .collect();
        let counts = CountMatrix::from_rows(
            vocab.len(),
            self.counts.rows().map(|row| {
                row.iter()
                    .filter_map(|&(c, n)| mapping[c as usize].map(|j| (j, n)))
                    .collect()
            }),
        );
        DocumentSet {
            counts,
            labels: self.labels.clone(),
            vocab,
            class_names: self.class_names.clone(),
            doc_ids: self.doc_ids.clone(),
        }
    }

    /// Frequency-ranked vocabulary computed from this set's own rows.
    pub fn ranked_vocabulary(&self, size: VocabSize) -> Vocabulary {
        let df = self.counts.document_frequency();
        let cf = self.counts.collection_frequency();
        let triples = self
            .vocab
            .terms()
            .iter()
            .enumerate()
            .map(|(j, t)| (t.clone(), df[j], cf[j]))
            .collect();
        Vocabulary::ranked(triples, size)
    }
}

/// Counts vocabulary terms in each document; out-of-vocabulary tokens are dropped.
pub fn vectorize(
    texts: &LabeledTexts,
    vocab: Arc<Vocabulary>,
    spec: &TokenizerSpec,
) -> Result<DocumentSet> {
    let rows = texts.docs.iter().map(|doc| {
        let mut row: HashMap<u32, u32> = HashMap::new();
        for tok in spec.tokenize(&doc.text) {
            if let Some(j) = vocab.get(&tok) {
                *row.entry(j as u32).or_default() += 1;
            }
        }
        row.into_iter().collect::<Vec<_>>()
    });
    let counts = CountMatrix::from_rows(vocab.len(), rows);
    DocumentSet::new(
        counts,
        texts.labels(),
        vocab,
        texts.class_names.clone(),
        texts.docs.iter().map(|d| d.id.clone()).collect(),
    )
}

/// Stratified train/test partition: each class is shuffled and its first
/// `round(train_fraction * size)` members (at least one when the class has
/// two or more) go to training. Both index lists come back sorted.
pub fn stratified_split<R: Rng + ?Sized>(
    labels: &[usize],
    train_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0,1), got {train_fraction}"
        )));
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(rng);
        let mut n_train = (train_fraction * members.len() as f64).round() as usize;
        n_train = n_train.clamp(1, members.len());
        if members.len() >= 2 && n_train == members.len() {
            n_train -= 1;
        }
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn doc(text: &str, label: usize) -> Document {
        Document {
            id: text.to_owned(),
            text: text.to_owned(),
            label,
        }
    }

    fn texts(docs: &[(&str, usize)]) -> LabeledTexts {
        LabeledTexts {
            docs: docs.iter().map(|&(t, l)| doc(t, l)).collect(),
            class_names: vec!["0".into(), "1".into()],
        }
    }

    #[test]
    fn word_tokens_are_lowercased_and_trimmed() {
        let spec = TokenizerSpec::words();
        assert_eq!(spec.tokenize("The cat."), vec!["the", "cat"]);
        assert_eq!(
            spec.tokenize("  \"Hello,\"  world!! -- "),
            vec!["hello", "world"]
        );
        assert_eq!(spec.tokenize("don't"), vec!["don't"]);
    }

    #[test]
    fn char_trigrams_slide_over_raw_text() {
        let spec = TokenizerSpec::char_trigrams();
        assert_eq!(spec.tokenize("abcd"), vec!["abc", "bcd"]);
        assert_eq!(spec.tokenize("A b"), vec!["a b"]);
        assert_eq!(spec.tokenize("ab"), Vec::<String>::new());
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(TokenizerSpec::words().tokenize("").is_empty());
        assert!(TokenizerSpec::char_trigrams().tokenize("").is_empty());
    }

    #[test]
    fn vocabulary_ranks_by_frequency_then_lexicographically() {
        let docs = vec![doc("a a b", 0), doc("b c", 1)];
        let spec = TokenizerSpec::words();
        let v = build_vocabulary(&docs, &spec, VocabSize::Top(2)).unwrap();
        assert_eq!(v.terms(), ["a", "b"]);
        let all = build_vocabulary(&docs, &spec, VocabSize::All).unwrap();
        assert_eq!(all.terms(), ["a", "b", "c"]);
        assert_eq!(all.doc_frequency(), [1, 2, 1]);
        assert_eq!(all.collection_frequency(), [2, 2, 1]);
    }

    #[test]
    fn vocabulary_rejects_bad_arguments() {
        let spec = TokenizerSpec::words();
        assert!(build_vocabulary(&[], &spec, VocabSize::All).is_err());
        assert!(build_vocabulary(&[doc("a", 0)], &spec, VocabSize::Top(0)).is_err());
        assert!("0".parse::<VocabSize>().is_err());
        assert!("-3".parse::<VocabSize>().is_err());
        assert_eq!("all".parse::<VocabSize>().unwrap(), VocabSize::All);
    }

    #[test]
    fn vectorize_drops_oov_tokens() {
        let vocab = Arc::new(Vocabulary::from_parts(
            vec!["a".into(), "b".into()],
            vec![1, 1],
            vec![1, 1],
        ));
        let spec = TokenizerSpec::words();
        let set = vectorize(&texts(&[("a a c", 0), ("", 1), ("b a b", 0)]), vocab, &spec).unwrap();
        assert_eq!(set.counts.row(0), [(0, 2)]);
        assert!(set.counts.row(1).is_empty());
        assert_eq!(set.counts.row(2), [(0, 1), (1, 2)]);
    }

    #[test]
    fn project_matches_terms_by_string() {
        let spec = TokenizerSpec::words();
        let t = texts(&[("x y y", 0), ("z", 1)]);
        let v = Arc::new(build_vocabulary(&t.docs, &spec, VocabSize::All).unwrap());
        let set = vectorize(&t, v, &spec).unwrap();
        let target = Arc::new(Vocabulary::from_parts(
            vec!["z".into(), "q".into(), "y".into()],
            vec![1; 3],
            vec![1; 3],
        ));
        let p = set.project(target);
        assert_eq!(p.counts.row(0), [(2, 2)]);
        assert_eq!(p.counts.row(1), [(0, 1)]);
    }

    #[test]
    fn stratified_split_keeps_every_class_on_both_sides() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (train, test) = stratified_split(&labels, 0.7, &mut rng).unwrap();
        assert_eq!(train.len() + test.len(), 30);
        for c in 0..3 {
            assert_eq!(train.iter().filter(|&&i| labels[i] == c).count(), 7);
            assert_eq!(test.iter().filter(|&&i| labels[i] == c).count(), 3);
        }
        assert!(stratified_split(&labels, 1.0, &mut rng).is_err());
    }

    #[test]
    fn class_names_sort_numerically_when_integral() {
        let mut names: Vec<String> = ["10", "2", "1"].iter().map(|s| s.to_string()).collect();
        sort_class_names(&mut names);
        assert_eq!(names, ["1", "2", "10"]);
        let mut names: Vec<String> = ["pos", "neg", "10"].iter().map(|s| s.to_string()).collect();
        sort_class_names(&mut names);
        assert_eq!(names, ["10", "neg", "pos"]);
    }
}
