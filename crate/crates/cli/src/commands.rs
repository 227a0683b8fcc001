//! The `learn`, `baselines`, `apply`, `sweep`, `stats` and `parse` verbs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use twlearn::classifier::{CrossValidator, EvalReport, SvmParams};
use twlearn::corpus::Vocabulary;
use twlearn::expr::{parse_prefix, Evaluator, TwsExpr};
use twlearn::gp::{evolve, GpConfig, GpRun};
use twlearn::model::{self, TwsModel};
use twlearn::termstats::{standard_tws, StandardScheme, TermStats};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{
    display_name, fit_stats, train_and_test, PhaseLog, RunSeeds, Split, Vectorized, VocabSource,
};
use crate::output::{csv_field, mean_std, write_atomic};

pub const MODEL_FILE: &str = "model.tws";
pub const STATS_FILE: &str = "stats.json";
pub const RUN_LOG_FILE: &str = "runlog.csv";
pub const REPORT_FILE: &str = "report.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const PHASES_FILE: &str = "phases.csv";

/// Everything one `learn` seed produces.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub seed: u64,
    pub run: GpRun,
    pub model: TwsModel,
    pub stats: TermStats,
    pub report: EvalReport,
    pub phases: PhaseLog,
}

fn svm_for(cfg: &ExperimentConfig, seeds: &RunSeeds) -> SvmParams {
    SvmParams {
        seed: seeds.sgd,
        ..cfg.svm
    }
}

/// Runs the search for one seed on an already loaded split.
pub fn learn_on(cfg: &ExperimentConfig, seed: u64, split: &Split) -> CliResult<LearnOutcome> {
    let seeds = RunSeeds::new(seed);
    let data = Vectorized::build(split, &VocabSource::Fit(cfg.top_k), &cfg.tokenizer)?;
    let mut phases = PhaseLog::default();
    phases.record("vocabulary", &data.train.doc_ids);

    let stats = fit_stats(cfg, &data.train)?;
    phases.record("stats", &data.train.doc_ids);

    let svm = svm_for(cfg, &seeds);
    let evaluator = Evaluator::new(&stats, &data.train)?;
    let cv = CrossValidator::new(
        &data.train.labels,
        data.train.n_classes(),
        cfg.folds,
        seeds.folds,
        svm,
    )?;
    phases.record("fitness", &data.train.doc_ids);

    let gp = GpConfig {
        seed: seeds.gp,
        ..cfg.gp.clone()
    };
    let started = Instant::now();
    let run = evolve(&gp, |e| cv.score(&evaluator.eval(e)))?;
    log::info!(
        "seed {seed}: {} generations, {} distinct trees in {:.1}s, best {}",
        gp.generations,
        run.evaluations,
        started.elapsed().as_secs_f64(),
        run.best.expr
    );

    let report = evaluate_expr(&run.best.expr, &stats, &data, &svm)?;
    phases.record("final_model", &data.train.doc_ids);
    phases.record("test", &data.test.doc_ids);

    let fitness = run.best.fitness.unwrap_or(0.0);
    let model = TwsModel::new(run.best.expr.clone())
        .with(model::KEY_VOCAB_HASH, stats.vocab.fingerprint())
        .with(
            model::KEY_TRAINING_SET,
            cfg.train.as_deref().map(display_name).unwrap_or_default(),
        )
        .with(model::KEY_FITNESS, fitness)
        .with(model::KEY_STATS, STATS_FILE)
        .with(model::KEY_TOKENIZER, cfg.tokenizer.mode)
        .with("lowercase", cfg.tokenizer.lowercase)
        .with("strip_punctuation", cfg.tokenizer.strip_punctuation)
        .with("top_k", cfg.top_k)
        .with("format", cfg.format)
        .with("seed", seed)
        .with("test_macro_f1", report.macro_f1);

    Ok(LearnOutcome {
        seed,
        run,
        model,
        stats,
        report,
        phases,
    })
}

/// Trains on the training part under `expr` and scores the test part.
pub fn evaluate_expr(
    expr: &TwsExpr,
    stats: &TermStats,
    data: &Vectorized,
    svm: &SvmParams,
) -> CliResult<EvalReport> {
    let x_train = Evaluator::new(stats, &data.train)?.eval(expr);
    let x_test = Evaluator::new(stats, &data.test)?.eval(expr);
    train_and_test(&x_train, &data.train, &x_test, &data.test, svm)
}

pub fn evaluate_scheme(
    scheme: StandardScheme,
    stats: &TermStats,
    data: &Vectorized,
    svm: &SvmParams,
) -> CliResult<EvalReport> {
    let x_train = standard_tws(scheme, stats, &data.train)?;
    let x_test = standard_tws(scheme, stats, &data.test)?;
    train_and_test(&x_train, &data.train, &x_test, &data.test, svm)
}

pub fn write_learn_outputs(dir: &Path, outcome: &LearnOutcome) -> CliResult<()> {
    write_atomic(&dir.join(MODEL_FILE), outcome.model.to_text())?;
    let stats_json = serde_json::to_string(&outcome.stats).map_err(twlearn::Error::from)?;
    write_atomic(&dir.join(STATS_FILE), stats_json)?;
    write_atomic(&dir.join(RUN_LOG_FILE), outcome.run.to_csv())?;
    write_atomic(&dir.join(REPORT_FILE), outcome.report.to_json())?;
    write_atomic(&dir.join(CONFUSION_FILE), outcome.report.confusion_csv())?;
    write_atomic(&dir.join(PHASES_FILE), outcome.phases.to_csv())?;
    Ok(())
}

fn require_out(cfg: &ExperimentConfig) -> CliResult<&Path> {
    cfg.out
        .as_deref()
        .ok_or_else(|| CliError::config("`out` (output directory) is required"))
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// One run per configured seed; writes per-seed artefacts and `summary.csv`.
pub fn cmd_learn(cfg: &ExperimentConfig) -> CliResult<Vec<LearnOutcome>> {
    cfg.validate()?;
    let out = require_out(cfg)?;
    write_atomic(&out.join("config.txt"), cfg.to_text())?;
    let corpus = twlearn::corpus::load_corpus(cfg.train.as_ref().unwrap(), cfg.format)?;

    let mut outcomes = Vec::new();
    for &seed in &cfg.seeds {
        let split = Split::from_corpus(corpus.clone(), cfg, seed)?;
        let outcome = learn_on(cfg, seed, &split)?;
        write_learn_outputs(&seed_dir(out, seed), &outcome)?;
        println!(
            "seed {seed}: cv fitness {:.4}  test macro-F1 {:.4}  accuracy {:.4}  {}",
            outcome.run.best.fitness.unwrap_or(0.0),
            outcome.report.macro_f1,
            outcome.report.accuracy,
            outcome.model.expr
        );
        outcomes.push(outcome);
    }

    let summary = learn_summary_csv(&outcomes);
    write_atomic(&out.join("summary.csv"), &summary)?;
    let f1: Vec<f64> = outcomes.iter().map(|o| o.report.macro_f1).collect();
    let (m, s) = mean_std(&f1);
    println!("test macro-F1 over {} seed(s): {m:.4} ± {s:.4}", f1.len());
    Ok(outcomes)
}

pub fn learn_summary_csv(outcomes: &[LearnOutcome]) -> String {
    let mut out = String::from("seed,cv_fitness,test_macro_f1,test_accuracy,size,expr\n");
    for o in outcomes {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            o.seed,
            o.run.best.fitness.unwrap_or(0.0),
            o.report.macro_f1,
            o.report.accuracy,
            o.model.expr.size(),
            csv_field(&o.model.expr.to_string())
        )
        .unwrap();
    }
    let col = |f: fn(&LearnOutcome) -> f64| mean_std(&outcomes.iter().map(f).collect::<Vec<_>>());
    let fit = col(|o| o.run.best.fitness.unwrap_or(0.0));
    let f1 = col(|o| o.report.macro_f1);
    let acc = col(|o| o.report.accuracy);
    let size = col(|o| o.model.expr.size() as f64);
    writeln!(out, "mean,{},{},{},{},", fit.0, f1.0, acc.0, size.0).unwrap();
    writeln!(out, "std,{},{},{},{},", fit.1, f1.1, acc.1, size.1).unwrap();
    out
}

#[derive(Debug, Clone)]
pub struct BaselineRow {
    pub seed: u64,
    pub scheme: StandardScheme,
    pub report: EvalReport,
}

/// All six fixed schemes on one vectorised split.
pub fn baselines_on(
    cfg: &ExperimentConfig,
    seed: u64,
    data: &Vectorized,
    stats: &TermStats,
) -> CliResult<Vec<BaselineRow>> {
    let svm = svm_for(cfg, &RunSeeds::new(seed));
    StandardScheme::ALL
        .iter()
        .map(|&scheme| {
            Ok(BaselineRow {
                seed,
                scheme,
                report: evaluate_scheme(scheme, stats, data, &svm)?,
            })
        })
        .collect()
}

/// Highest macro-F1; the earlier scheme wins ties.
pub fn best_baseline(rows: &[BaselineRow]) -> Option<&BaselineRow> {
    rows.iter()
        .fold(None, |best: Option<&BaselineRow>, r| match best {
            Some(b) if b.report.macro_f1 >= r.report.macro_f1 => Some(b),
            _ => Some(r),
        })
}

pub fn cmd_baselines(cfg: &ExperimentConfig) -> CliResult<Vec<BaselineRow>> {
    cfg.validate()?;
    let corpus = twlearn::corpus::load_corpus(cfg.train.as_ref().unwrap(), cfg.format)?;
    let mut all = Vec::new();
    let mut csv = String::from("seed,scheme,macro_f1,accuracy\n");
    for &seed in &cfg.seeds {
        let split = Split::from_corpus(corpus.clone(), cfg, seed)?;
        let data = Vectorized::build(&split, &VocabSource::Fit(cfg.top_k), &cfg.tokenizer)?;
        let stats = fit_stats(cfg, &data.train)?;
        let rows = baselines_on(cfg, seed, &data, &stats)?;
        println!("seed {seed}");
        println!("  {:<8} {:>9} {:>9}", "scheme", "macro-F1", "accuracy");
        for r in &rows {
            println!(
                "  {:<8} {:>9.4} {:>9.4}",
                r.scheme.name(),
                r.report.macro_f1,
                r.report.accuracy
            );
            writeln!(
                csv,
                "{seed},{},{},{}",
                r.scheme.name(),
                r.report.macro_f1,
                r.report.accuracy
            )
            .unwrap();
        }
        if let Some(b) = best_baseline(&rows) {
            println!("  best: {} ({:.4})", b.scheme.name(), b.report.macro_f1);
        }
        all.extend(rows);
    }
    if let Some(out) = &cfg.out {
        write_atomic(&out.join("baselines.csv"), csv)?;
    }
    Ok(all)
}

/// A model file plus its statistics sidecar, resolved relative to the model.
pub fn load_model(path: &Path) -> CliResult<(TwsModel, TermStats)> {
    let model = TwsModel::load(path)?;
    let sidecar = model.stats_path().ok_or_else(|| {
        twlearn::Error::Model(format!("{} names no statistics file", path.display()))
    })?;
    let sidecar = path.parent().unwrap_or(Path::new(".")).join(sidecar);
    let stats = TermStats::load_json(&sidecar)?;
    if let Some(h) = model.vocab_hash() {
        if h != stats.vocab.fingerprint() {
            return Err(twlearn::Error::VocabularyMismatch {
                expected: h.to_string(),
                found: stats.vocab.fingerprint().to_string(),
            }
            .into());
        }
    }
    Ok((model, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyMode {
    /// Stored vocabulary and statistics from the model's sidecar.
    Stored,
    /// Vocabulary and statistics refitted on the new training part.
    Refit,
}

pub fn apply_on(
    cfg: &ExperimentConfig,
    seed: u64,
    split: &Split,
    model: &TwsModel,
    stored: &TermStats,
    mode: ApplyMode,
) -> CliResult<EvalReport> {
    if let Some(tok) = model.get(model::KEY_TOKENIZER) {
        if tok != cfg.tokenizer.mode.to_string() {
            log::warn!(
                "model was learned with tokenizer `{tok}` but the corpus uses `{}`; proceeding",
                cfg.tokenizer.mode
            );
        }
    }
    let svm = svm_for(cfg, &RunSeeds::new(seed));
    match mode {
        ApplyMode::Stored => {
            let vocab = VocabSource::Fixed(Arc::new(stored.vocab.clone()));
            let data = Vectorized::build(split, &vocab, &cfg.tokenizer)?;
            evaluate_expr(&model.expr, stored, &data, &svm)
        }
        ApplyMode::Refit => {
            let data = Vectorized::build(split, &VocabSource::Fit(cfg.top_k), &cfg.tokenizer)?;
            let stats = fit_stats(cfg, &data.train)?;
            evaluate_expr(&model.expr, &stats, &data, &svm)
        }
    }
}

pub fn cmd_apply(
    cfg: &ExperimentConfig,
    model_path: &Path,
    mode: ApplyMode,
) -> CliResult<EvalReport> {
    cfg.validate()?;
    let (model, stats) = load_model(model_path)?;
    let seed = cfg.seeds[0];
    let split = Split::load(cfg, seed)?;
    let report = apply_on(cfg, seed, &split, &model, &stats, mode)?;
    println!(
        "{}: macro-F1 {:.4}  accuracy {:.4}",
        model.expr, report.macro_f1, report.accuracy
    );
    if let Some(out) = &cfg.out {
        write_atomic(&out.join("apply-report.json"), report.to_json())?;
        write_atomic(&out.join("apply-confusion.csv"), report.confusion_csv())?;
    }
    Ok(report)
}

/// Every model on every dataset, each dataset with its own refitted
/// vocabulary and statistics. Returns `model,dataset,macro_f1,accuracy` CSV.
pub fn cmd_apply_matrix(
    cfg: &ExperimentConfig,
    models: &[PathBuf],
    datasets: &[PathBuf],
) -> CliResult<String> {
    if models.is_empty() || datasets.is_empty() {
        return Err(CliError::config(
            "matrix mode needs at least one model and one dataset",
        ));
    }
    let loaded: Vec<(TwsModel, TermStats)> = models
        .iter()
        .map(|p| load_model(p))
        .collect::<CliResult<_>>()?;
    let seed = cfg.seeds.first().copied().unwrap_or(1);
    let mut csv = String::from("model,dataset,macro_f1,accuracy\n");
    for dataset in datasets {
        let dcfg = ExperimentConfig {
            train: Some(dataset.clone()),
            test: None,
            ..cfg.clone()
        };
        let split = Split::load(&dcfg, seed)?;
        let data = Vectorized::build(&split, &VocabSource::Fit(cfg.top_k), &cfg.tokenizer)?;
        let stats = fit_stats(cfg, &data.train)?;
        let svm = svm_for(cfg, &RunSeeds::new(seed));
        for (path, (model, _)) in models.iter().zip(&loaded) {
            let r = evaluate_expr(&model.expr, &stats, &data, &svm)?;
            writeln!(
                csv,
                "{},{},{},{}",
                csv_field(&display_name(path)),
                csv_field(&display_name(dataset)),
                r.macro_f1,
                r.accuracy
            )
            .unwrap();
        }
    }
    if let Some(out) = &cfg.out {
        write_atomic(&out.join("matrix.csv"), &csv)?;
    } else {
        print!("{csv}");
    }
    Ok(csv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub fraction: f64,
    pub vocab_size: usize,
    pub scheme: String,
    pub macro_f1: f64,
    pub accuracy: f64,
}

pub fn parse_fractions(s: &str) -> CliResult<Vec<f64>> {
    let fr: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| CliError::config(format!("bad fraction `{x}`")))
        })
        .collect::<CliResult<_>>()?;
    if fr.is_empty() {
        return Err(CliError::config("no fractions given"));
    }
    if let Some(bad) = fr.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(CliError::config(format!("fraction {bad} outside (0,1]")));
    }
    Ok(fr)
}

/// Vocabulary size for `fraction` of `total` terms, at least one.
pub fn sweep_size(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).ceil() as usize).clamp(1, total.max(1))
}

/// Evaluates the learned scheme and every baseline on growing prefixes of
/// the frequency-ranked training vocabulary.
pub fn sweep_on(
    cfg: &ExperimentConfig,
    seed: u64,
    split: &Split,
    expr: &TwsExpr,
    fractions: &[f64],
) -> CliResult<Vec<SweepRow>> {
    let full = Vectorized::full_vocabulary(split, &cfg.tokenizer)?;
    let svm = svm_for(cfg, &RunSeeds::new(seed));
    let mut rows = Vec::new();
    for &fraction in fractions {
        let size = sweep_size(fraction, full.len());
        let vocab: Arc<Vocabulary> = Arc::new(full.prefix(size));
        let data = Vectorized::build(split, &VocabSource::Fixed(vocab), &cfg.tokenizer)?;
        let stats = fit_stats(cfg, &data.train)?;
        let mut push = |scheme: String, r: EvalReport| {
            rows.push(SweepRow {
                fraction,
                vocab_size: size,
                scheme,
                macro_f1: r.macro_f1,
                accuracy: r.accuracy,
            })
        };
        push("learned".into(), evaluate_expr(expr, &stats, &data, &svm)?);
        for scheme in StandardScheme::ALL {
            push(
                scheme.name().into(),
                evaluate_scheme(scheme, &stats, &data, &svm)?,
            );
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("fraction,vocab_size,scheme,macro_f1,accuracy\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.fraction, r.vocab_size, r.scheme, r.macro_f1, r.accuracy
        )
        .unwrap();
    }
    out
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    model_path: &Path,
    fractions: &[f64],
) -> CliResult<Vec<SweepRow>> {
    cfg.validate()?;
    let model = TwsModel::load(model_path)?;
    let seed = cfg.seeds[0];
    let split = Split::load(cfg, seed)?;
    let rows = sweep_on(cfg, seed, &split, &model.expr, fractions)?;
    let csv = sweep_csv(&rows);
    match &cfg.out {
        Some(out) => write_atomic(&out.join("sweep.csv"), csv)?,
        None => print!("{csv}"),
    }
    Ok(rows)
}

/// Fits statistics on the training part and writes them as JSON.
pub fn cmd_stats(cfg: &ExperimentConfig, output: Option<&Path>) -> CliResult<TermStats> {
    cfg.validate()?;
    let split = Split::load(cfg, cfg.seeds[0])?;
    let data = Vectorized::build(&split, &VocabSource::Fit(cfg.top_k), &cfg.tokenizer)?;
    let stats = fit_stats(cfg, &data.train)?;
    let json = serde_json::to_string_pretty(&stats).map_err(twlearn::Error::from)?;
    match output {
        Some(p) => write_atomic(p, json)?,
        None => println!("{json}"),
    }
    eprintln!(
        "{} training documents, {} terms, {} classes, vocabulary {}",
        stats.n_train,
        stats.n_terms(),
        stats.n_classes(),
        stats.vocab.fingerprint()
    );
    Ok(stats)
}

/// Canonical form and shape of a prefix expression.
pub fn cmd_parse(text: &str) -> CliResult<String> {
    let e = parse_prefix(text).map_err(twlearn::Error::from)?;
    let m = e.metrics();
    let terms: Vec<String> = m
        .terminals
        .iter()
        .map(|(t, n)| format!("{}x{n}", t.alias()))
        .collect();
    Ok(format!(
        "{e}\ndepth={} size={} terminals={}",
        m.depth,
        m.size,
        terms.join(" ")
    ))
}
