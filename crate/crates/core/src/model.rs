//! Learned-scheme model files.
//!
//! UTF-8 text. Line 1 holds the canonical prefix expression; each further
//! line is a `key=value` metadata entry, written in sorted key order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::{parse_prefix, TwsExpr};

pub const KEY_VOCAB_HASH: &str = "vocab_hash";
pub const KEY_TRAINING_SET: &str = "training_set";
pub const KEY_FITNESS: &str = "fitness";
pub const KEY_STATS: &str = "stats";
pub const KEY_TOKENIZER: &str = "tokenizer";

#[derive(Debug, Clone, PartialEq)]
pub struct TwsModel {
    pub expr: TwsExpr,
    pub meta: BTreeMap<String, String>,
}

impl TwsModel {
    pub fn new(expr: TwsExpr) -> Self {
        TwsModel {
            expr,
            meta: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    pub fn vocab_hash(&self) -> Option<&str> {
        self.get(KEY_VOCAB_HASH)
    }

    pub fn stats_path(&self) -> Option<&str> {
        self.get(KEY_STATS)
    }

    pub fn fitness(&self) -> Option<f64> {
        self.get(KEY_FITNESS).and_then(|v| v.parse().ok())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.expr);
        for (k, v) in &self.meta {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines
            .next()
            .filter(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::Model("missing expression line".into()))?;
        let expr = parse_prefix(first.trim())?;
        let mut meta = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Model(format!("line {}: expected key=value", i + 2)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Model(format!("line {}: empty key", i + 2)));
            }
            meta.insert(k.to_string(), v.trim().to_string());
        }
        Ok(TwsModel { expr, meta })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = TwsModel::new(parse_prefix("×(IG,TF-RF)").unwrap())
            .with(KEY_VOCAB_HASH, "00ff")
            .with(KEY_FITNESS, 0.75)
            .with(KEY_STATS, "stats.json");
        let text = m.to_text();
        assert_eq!(
            text,
            "*(IG,TF-RF)\nfitness=0.75\nstats=stats.json\nvocab_hash=00ff\n"
        );
        let back = TwsModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.fitness(), Some(0.75));
        assert_eq!(back.vocab_hash(), Some("00ff"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(TwsModel::from_text("").is_err());
        assert!(TwsModel::from_text("TF\nnot metadata").is_err());
        assert!(matches!(TwsModel::from_text("+(TF"), Err(Error::Parse(_))));
    }
}
