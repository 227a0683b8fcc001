//! Experiment configuration: `key = value` lines, `#` comments.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `train` | | training corpus path |
//! | `test` | | optional test corpus; otherwise a stratified split of `train` |
//! | `format` | `tsv` | `tsv`, `labeled-dirs` or `svmlight-counts` |
//! | `tokenizer` | `word` | `word` or `char3` |
//! | `lowercase` | `true` | |
//! | `strip_punctuation` | `true` | word mode only |
//! | `top_k` | `2000` | vocabulary size, or `all` |
//! | `train_fraction` | `0.7` | used when no `test` corpus is given |
//! | `seeds` | `1` | comma-separated root seeds, one run each |
//! | `split_seed` | | fixes the train/test split across seeds |
//! | `folds` | `5` | cross-validation folds for fitness |
//! | `pop`, `gens`, `tournament` | `50`, `50`, `3` | |
//! | `p_crossover`, `p_mutation` | `0.85`, `0.15` | |
//! | `init_depth_min`, `init_depth_max`, `max_depth` | `2`, `6`, `8` | |
//! | `elitism` | `1` | |
//! | `lambda`, `epochs` | `1e-4`, `10` | SVM regularisation and passes |
//! | `scale_columns`, `normalize_rows` | `true`, `false` | |
//! | `globalization` | `max` | `max` or `mean` over classes |
//! | `out` | | output directory |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use twlearn::classifier::SvmParams;
use twlearn::corpus::{CorpusFormat, TokenMode, TokenizerSpec, VocabSize};
use twlearn::gp::GpConfig;
use twlearn::termstats::Globalization;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub format: CorpusFormat,
    pub tokenizer: TokenizerSpec,
    pub top_k: VocabSize,
    pub train_fraction: f64,
    pub seeds: Vec<u64>,
    pub split_seed: Option<u64>,
    pub folds: usize,
    pub gp: GpConfig,
    pub svm: SvmParams,
    pub globalization: Globalization,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: None,
            test: None,
            format: CorpusFormat::Tsv,
            tokenizer: TokenizerSpec::words(),
            top_k: VocabSize::Top(2000),
            train_fraction: 0.7,
            seeds: vec![1],
            split_seed: None,
            folds: 5,
            gp: GpConfig::default(),
            svm: SvmParams::default(),
            globalization: Globalization::Max,
            out: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::config(format!(
            "`{key}`: expected true or false, got `{value}`"
        ))),
    }
}

fn parse_with<T, E: std::fmt::Display>(key: &str, r: Result<T, E>) -> CliResult<T> {
    r.map_err(|e| CliError::config(format!("`{key}`: {e}")))
}

pub fn parse_seed_list(value: &str) -> CliResult<Vec<u64>> {
    let seeds: Vec<u64> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("seeds", s))
        .collect::<CliResult<_>>()?;
    if seeds.is_empty() {
        return Err(CliError::config("`seeds` must list at least one seed"));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "train",
        "test",
        "format",
        "tokenizer",
        "lowercase",
        "strip_punctuation",
        "top_k",
        "train_fraction",
        "seeds",
        "seed",
        "split_seed",
        "folds",
        "pop",
        "gens",
        "tournament",
        "p_crossover",
        "p_mutation",
        "init_depth_min",
        "init_depth_max",
        "max_depth",
        "elitism",
        "lambda",
        "epochs",
        "scale_columns",
        "normalize_rows",
        "globalization",
        "out",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key.trim() {
            "train" => self.train = (!v.is_empty()).then(|| PathBuf::from(v)),
            "test" => self.test = (!v.is_empty()).then(|| PathBuf::from(v)),
            "format" => self.format = parse_with(key, v.parse())?,
            "tokenizer" => {
                let mode: TokenMode = parse_with(key, v.parse())?;
                self.tokenizer.mode = mode;
            }
            "lowercase" => self.tokenizer.lowercase = parse_bool(key, v)?,
            "strip_punctuation" => self.tokenizer.strip_punctuation = parse_bool(key, v)?,
            "top_k" => self.top_k = parse_with(key, v.parse())?,
            "train_fraction" => self.train_fraction = parse(key, v)?,
            "seeds" => self.seeds = parse_seed_list(v)?,
            "seed" => self.seeds = vec![parse(key, v)?],
            "split_seed" => {
                self.split_seed = if v.is_empty() {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "folds" => self.folds = parse(key, v)?,
            "pop" => self.gp.population_size = parse(key, v)?,
            "gens" => self.gp.generations = parse(key, v)?,
            "tournament" => self.gp.tournament_size = parse(key, v)?,
            "p_crossover" => self.gp.p_crossover = parse(key, v)?,
            "p_mutation" => self.gp.p_mutation = parse(key, v)?,
            "init_depth_min" => self.gp.init_depth_min = parse(key, v)?,
            "init_depth_max" => self.gp.init_depth_max = parse(key, v)?,
            "max_depth" => self.gp.max_depth = parse(key, v)?,
            "elitism" => self.gp.elitism_count = parse(key, v)?,
            "lambda" => self.svm.lambda = parse(key, v)?,
            "epochs" => self.svm.epochs = parse(key, v)?,
            "scale_columns" => self.svm.scale_columns = parse_bool(key, v)?,
            "normalize_rows" => self.svm.normalize_rows = parse_bool(key, v)?,
            "globalization" => self.globalization = parse_with(key, v.parse())?,
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            other => return Err(CliError::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` assignments in order.
    pub fn apply_assignments<'a>(
        &mut self,
        items: impl IntoIterator<Item = &'a str>,
    ) -> CliResult<()> {
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("expected key=value, got `{item}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> CliResult<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v).map_err(|e| {
                CliError::config(format!(
                    "line {}: {}",
                    i + 1,
                    e.to_string().trim_start_matches("config error: ")
                ))
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Every key with its current value, in the order of [`Self::KEYS`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let entries: Vec<(&str, String)> = vec![
            ("train", path(&self.train)),
            ("test", path(&self.test)),
            ("format", self.format.to_string()),
            ("tokenizer", self.tokenizer.mode.to_string()),
            ("lowercase", self.tokenizer.lowercase.to_string()),
            (
                "strip_punctuation",
                self.tokenizer.strip_punctuation.to_string(),
            ),
            ("top_k", self.top_k.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("seeds", seeds.join(",")),
            (
                "split_seed",
                self.split_seed.map(|s| s.to_string()).unwrap_or_default(),
            ),
            ("folds", self.folds.to_string()),
            ("pop", self.gp.population_size.to_string()),
            ("gens", self.gp.generations.to_string()),
            ("tournament", self.gp.tournament_size.to_string()),
            ("p_crossover", self.gp.p_crossover.to_string()),
            ("p_mutation", self.gp.p_mutation.to_string()),
            ("init_depth_min", self.gp.init_depth_min.to_string()),
            ("init_depth_max", self.gp.init_depth_max.to_string()),
            ("max_depth", self.gp.max_depth.to_string()),
            ("elitism", self.gp.elitism_count.to_string()),
            ("lambda", self.svm.lambda.to_string()),
            ("epochs", self.svm.epochs.to_string()),
            ("scale_columns", self.svm.scale_columns.to_string()),
            ("normalize_rows", self.svm.normalize_rows.to_string()),
            ("globalization", self.globalization.to_string()),
            ("out", path(&self.out)),
        ];
        for (k, v) in entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// Checks values and that referenced input paths exist.
    pub fn validate(&self) -> CliResult<()> {
        let train = self
            .train
            .as_ref()
            .ok_or_else(|| CliError::config("`train` is required"))?;
        for p in std::iter::once(train).chain(self.test.as_ref()) {
            if !p.exists() {
                return Err(CliError::config(format!("{} does not exist", p.display())));
            }
        }
        if self.seeds.is_empty() {
            return Err(CliError::config("`seeds` must list at least one seed"));
        }
        if self.folds < 2 {
            return Err(CliError::config(format!(
                "`folds` must be at least 2, got {}",
                self.folds
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::config(format!(
                "`train_fraction` must be in (0,1), got {}",
                self.train_fraction
            )));
        }
        self.gp
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        self.svm
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_overrides() {
        let mut cfg = ExperimentConfig::from_text(
            "# experiment\ntrain = data/r8.tsv\ntop_k = all  # whole vocabulary\nseeds = 1, 2,3\npop=20\n",
        )
        .unwrap();
        assert_eq!(cfg.train, Some(PathBuf::from("data/r8.tsv")));
        assert_eq!(cfg.top_k, VocabSize::All);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.gp.population_size, 20);
        cfg.apply_assignments(["seed=9", "tokenizer=char3", "lambda=0.001"])
            .unwrap();
        assert_eq!(cfg.seeds, vec![9]);
        assert_eq!(cfg.tokenizer.mode, TokenMode::CharTrigram);
        assert_eq!(cfg.svm.lambda, 0.001);
    }

    #[test]
    fn text_round_trip_covers_every_key() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("train", "a.tsv").unwrap();
        cfg.set("split_seed", "4").unwrap();
        let text = cfg.to_text();
        assert_eq!(ExperimentConfig::from_text(&text).unwrap(), cfg);
        for key in ExperimentConfig::KEYS.iter().filter(|k| **k != "seed") {
            assert!(text.contains(&format!("{key} = ")), "{key}");
        }
    }

    #[test]
    fn bad_values_are_config_errors() {
        for bad in [
            "pop = many",
            "nonsense = 1",
            "seeds = ",
            "top_k = 0",
            "lowercase = maybe",
            "no equals",
        ] {
            let err = ExperimentConfig::from_text(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
    }
}
