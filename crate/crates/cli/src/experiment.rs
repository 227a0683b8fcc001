//! Loading, splitting and vectorising corpora for one experiment run, plus
//! the train-then-test evaluation shared by every command.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use twlearn::classifier::{EvalReport, LinearModel, SvmParams};
use twlearn::corpus::{
    build_vocabulary, load_corpus, load_corpus_with_classes, stratified_split, vectorize, Corpus,
    DocumentSet, TokenizerSpec, VocabSize, Vocabulary,
};
use twlearn::rng::{derive_seed, stream_rng};
use twlearn::termstats::{TermStats, WeightMatrix};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Training and test documents before vectorisation.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub test: Corpus,
}

impl Split {
    /// Loads `cfg.train` and either `cfg.test` or a stratified split of the
    /// training corpus drawn from the `split` stream of `seed`.
    pub fn load(cfg: &ExperimentConfig, seed: u64) -> CliResult<Split> {
        let train_path = cfg
            .train
            .as_ref()
            .ok_or_else(|| CliError::config("`train` is required"))?;
        let corpus = load_corpus(train_path, cfg.format)?;
        Self::from_corpus(corpus, cfg, seed)
    }

    pub fn from_corpus(corpus: Corpus, cfg: &ExperimentConfig, seed: u64) -> CliResult<Split> {
        if let Some(test_path) = &cfg.test {
            let test = load_corpus_with_classes(test_path, cfg.format, Some(corpus.class_names()))?;
            return Ok(Split {
                train: corpus,
                test,
            });
        }
        let split_seed = cfg.split_seed.unwrap_or(seed);
        let mut rng = stream_rng(split_seed, "split");
        let (train_rows, test_rows) =
            stratified_split(&corpus.labels(), cfg.train_fraction, &mut rng)?;
        Ok(Split {
            train: corpus.subset(&train_rows),
            test: corpus.subset(&test_rows),
        })
    }
}

/// Where the vocabulary comes from.
#[derive(Debug, Clone)]
pub enum VocabSource {
    /// Rank terms of the training part and keep the top entries.
    Fit(VocabSize),
    /// Use a stored vocabulary; unknown terms are dropped.
    Fixed(Arc<Vocabulary>),
}

/// Vectorised training and test sets sharing one vocabulary.
#[derive(Debug, Clone)]
pub struct Vectorized {
    pub train: DocumentSet,
    pub test: DocumentSet,
}

impl Vectorized {
    pub fn build(
        split: &Split,
        vocab: &VocabSource,
        tokenizer: &TokenizerSpec,
    ) -> CliResult<Vectorized> {
        match (&split.train, &split.test) {
            (Corpus::Texts(train), Corpus::Texts(test)) => {
                let vocab = match vocab {
                    VocabSource::Fit(size) => {
                        Arc::new(build_vocabulary(&train.docs, tokenizer, *size)?)
                    }
                    VocabSource::Fixed(v) => Arc::clone(v),
                };
                Ok(Vectorized {
                    train: vectorize(train, Arc::clone(&vocab), tokenizer)?,
                    test: vectorize(test, vocab, tokenizer)?,
                })
            }
            (Corpus::Counts(train), Corpus::Counts(test)) => {
                let vocab = match vocab {
                    VocabSource::Fit(size) => Arc::new(train.ranked_vocabulary(*size)),
                    VocabSource::Fixed(v) => Arc::clone(v),
                };
                Ok(Vectorized {
                    train: train.project(Arc::clone(&vocab)),
                    test: test.project(vocab),
                })
            }
            _ => Err(CliError::config(
                "training and test corpora use different formats",
            )),
        }
    }

    /// Full vocabulary of the training part, frequency ranked.
    pub fn full_vocabulary(split: &Split, tokenizer: &TokenizerSpec) -> CliResult<Vocabulary> {
        Ok(match &split.train {
            Corpus::Texts(t) => build_vocabulary(&t.docs, tokenizer, VocabSize::All)?,
            Corpus::Counts(d) => d.ranked_vocabulary(VocabSize::All),
        })
    }
}

/// Order-independent fingerprints of the document rows each phase touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseLog {
    entries: Vec<(String, usize, String)>,
}

impl PhaseLog {
    pub fn record(&mut self, phase: &str, doc_ids: &[String]) {
        let mut ids: Vec<&String> = doc_ids.iter().collect();
        ids.sort();
        let mut h = Sha256::new();
        for id in &ids {
            h.update(id.as_bytes());
            h.update([0u8]);
        }
        let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        self.entries.push((phase.to_string(), ids.len(), hex));
    }

    pub fn hash(&self, phase: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.0 == phase)
            .map(|e| e.2.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,rows,sha256\n");
        for (p, n, h) in &self.entries {
            writeln!(out, "{p},{n},{h}").unwrap();
        }
        out
    }
}

/// Seeds of the named streams used by one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub root: u64,
    pub gp: u64,
    pub folds: u64,
    pub sgd: u64,
}

impl RunSeeds {
    pub fn new(root: u64) -> Self {
        RunSeeds {
            root,
            gp: derive_seed(root, "init"),
            folds: derive_seed(root, "folds"),
            sgd: derive_seed(root, "sgd"),
        }
    }
}

/// Trains on `x_train` and scores predictions on `x_test`.
pub fn train_and_test(
    x_train: &WeightMatrix,
    train: &DocumentSet,
    x_test: &WeightMatrix,
    test: &DocumentSet,
    params: &SvmParams,
) -> CliResult<EvalReport> {
    let pred = match LinearModel::train(x_train.view(), &train.labels, train.n_classes(), params) {
        Ok(model) => model.predict(x_test.view())?,
        Err(twlearn::Error::SingleClass) => {
            vec![train.labels.first().copied().unwrap_or(0); test.n_docs()]
        }
        Err(e) => return Err(e.into()),
    };
    Ok(EvalReport::from_predictions(
        &pred,
        &test.labels,
        &train.class_names,
    ))
}

pub fn fit_stats(cfg: &ExperimentConfig, train: &DocumentSet) -> CliResult<TermStats> {
    Ok(TermStats::fit_with(train, cfg.globalization)?)
}

pub fn display_name(path: &Path) -> String {
    path.display().to_string()
}
