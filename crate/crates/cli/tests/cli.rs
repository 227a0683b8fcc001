mod common;

use std::fs;

use common::{planted_corpus, stdout, twlearn, write_file};
use twlearn::classifier::EvalReport;
use twlearn::model::TwsModel;

const QUICK: &[&str] = &["--pop", "8", "--gens", "3", "--folds", "2"];

fn quick_args<'a>(cmd: &'a str, train: &'a str, out: &'a str) -> Vec<&'a str> {
    let mut v = vec![cmd, "--train", train, "--out", out, "--seed", "4"];
    v.extend_from_slice(QUICK);
    v
}

#[test]
fn parse_prints_canonical_form() {
    let o = twlearn(&["parse", "times(TF, log(N))"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("*(TF,log2(N))\n"), "{text}");
    assert!(text.contains("depth=3 size=4"), "{text}");
}

#[test]
fn bad_expression_exits_with_config_code() {
    let o = twlearn(&["parse", "+(TF)"]);
    assert_eq!(o.status.code(), Some(2));
    let o = twlearn(&["parse", "FOO"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_file(dir.path(), "c.tsv", &planted_corpus(1, 40, 20, 4, 3.0));
    let train = train.to_str().unwrap();
    assert_eq!(
        twlearn(&["baselines", "--train", train, "--folds", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        twlearn(&["baselines", "--train", train, "--set", "nonsense=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        twlearn(&["learn", "--train", train]).status.code(),
        Some(2),
        "learn without out"
    );
    assert_eq!(
        twlearn(&["baselines"]).status.code(),
        Some(2),
        "no training corpus"
    );
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_file(dir.path(), "bad.tsv", "a\tone two\nno tab here\n");
    let o = twlearn(&["baselines", "--train", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let single = write_file(dir.path(), "one.tsv", "a\tx y\na\ty z\na\tz x\n");
    assert_eq!(
        twlearn(&["baselines", "--train", single.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn baselines_table_lists_six_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_file(dir.path(), "c.tsv", &planted_corpus(2, 80, 30, 6, 3.0));
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    let o = twlearn(&[
        "baselines",
        "--train",
        train.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "1,2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("baselines.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "seed,scheme,macro_f1,accuracy");
    assert_eq!(lines.len(), 1 + 2 * 6);
    for name in ["B", "TF", "TFIDF", "TF-IG", "TF-CHI", "TF-RF"] {
        assert!(
            lines.iter().any(|l| l.starts_with(&format!("1,{name},"))),
            "{name}"
        );
    }
}

#[test]
fn learn_apply_sweep_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_file(dir.path(), "c.tsv", &planted_corpus(3, 80, 30, 6, 3.0));
    let other = write_file(dir.path(), "d.tsv", &planted_corpus(4, 60, 30, 6, 2.0));
    let out = dir.path().join("run");
    let (train_s, out_s) = (train.to_str().unwrap(), out.to_str().unwrap());

    let o = twlearn(&quick_args("learn", train_s, out_s));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let seed_dir = out.join("seed-4");
    for f in [
        "model.tws",
        "stats.json",
        "runlog.csv",
        "report.json",
        "confusion.csv",
        "phases.csv",
    ] {
        assert!(seed_dir.join(f).is_file(), "{f} missing");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4, "{summary}");
    let runlog = fs::read_to_string(seed_dir.join("runlog.csv")).unwrap();
    assert_eq!(
        runlog.lines().count(),
        1 + 4,
        "header plus generations 0..=3"
    );

    let phases = fs::read_to_string(seed_dir.join("phases.csv")).unwrap();
    let hash = |name: &str| {
        phases
            .lines()
            .find(|l| l.starts_with(name))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .to_owned()
    };
    assert_eq!(hash("vocabulary"), hash("stats"));
    assert_eq!(hash("stats"), hash("fitness"));
    assert_ne!(
        hash("fitness"),
        hash("test"),
        "test documents never reach training phases"
    );

    let model_path = seed_dir.join("model.tws");
    let model = TwsModel::load(&model_path).unwrap();
    let learned = EvalReport::load_json(seed_dir.join("report.json")).unwrap();

    // Stored mode on the same seed and split reproduces the learn report.
    let apply_out = dir.path().join("apply");
    fs::create_dir(&apply_out).unwrap();
    let mut args = quick_args("apply", train_s, apply_out.to_str().unwrap());
    args.extend(["--model", model_path.to_str().unwrap()]);
    let o = twlearn(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let applied = EvalReport::load_json(apply_out.join("apply-report.json")).unwrap();
    assert_eq!(applied, learned);

    // Refit mode runs on another corpus.
    let o = twlearn(&[
        "apply",
        "--train",
        other.to_str().unwrap(),
        "--model",
        model_path.to_str().unwrap(),
        "--refit",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains(&model.expr.to_string()));

    // Stored mode on a corpus without the stored vocabulary still runs.
    let o = twlearn(&[
        "apply",
        "--train",
        other.to_str().unwrap(),
        "--model",
        model_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());

    let models = format!("{},{}", model_path.display(), model_path.display());
    let datasets = format!("{},{}", train.display(), other.display());
    let o = twlearn(&[
        "apply",
        "--matrix",
        "--models",
        &models,
        "--datasets",
        &datasets,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let matrix = stdout(&o);
    let rows: Vec<&str> = matrix.lines().collect();
    assert_eq!(rows[0], "model,dataset,macro_f1,accuracy");
    assert_eq!(rows.len(), 1 + 4);

    let o = twlearn(&[
        "sweep",
        "--train",
        train_s,
        "--seed",
        "4",
        "--model",
        model_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = stdout(&o);
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows[0], "fraction,vocab_size,scheme,macro_f1,accuracy");
    assert_eq!(rows.len(), 1 + 10 * 7);
    let sizes: Vec<usize> = rows[1..]
        .iter()
        .step_by(7)
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
}

#[test]
fn mismatched_statistics_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_file(dir.path(), "a.tsv", &planted_corpus(5, 60, 30, 6, 3.0));
    let b = write_file(dir.path(), "b.tsv", &planted_corpus(6, 60, 12, 6, 3.0));
    let (ra, rb) = (dir.path().join("ra"), dir.path().join("rb"));
    for (train, out) in [(&a, &ra), (&b, &rb)] {
        let o = twlearn(&quick_args(
            "learn",
            train.to_str().unwrap(),
            out.to_str().unwrap(),
        ));
        assert!(o.status.success());
    }
    // Pair one model with the other run's statistics.
    fs::copy(rb.join("seed-4/stats.json"), ra.join("seed-4/stats.json")).unwrap();
    let o = twlearn(&[
        "apply",
        "--train",
        a.to_str().unwrap(),
        "--model",
        ra.join("seed-4/model.tws").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn stats_command_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_file(dir.path(), "c.tsv", &planted_corpus(7, 40, 20, 4, 3.0));
    let dest = dir.path().join("stats.json");
    let o = twlearn(&[
        "stats",
        "--train",
        train.to_str().unwrap(),
        "--top-k",
        "10",
        "--output",
        dest.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let stats = twlearn::termstats::TermStats::load_json(&dest).unwrap();
    assert_eq!(stats.n_terms(), 10);
    assert_eq!(stats.n_classes(), 2);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_file(dir.path(), "c.tsv", &planted_corpus(8, 40, 20, 4, 3.0));
    let out = dir.path().join("o");
    let cfg = write_file(
        dir.path(),
        "exp.cfg",
        &format!(
            "# quick run\ntrain = {}\npop = 6\ngens = 50\nfolds = 2\n",
            train.display()
        ),
    );
    let o = twlearn(&[
        "learn",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "gens=2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let runlog = fs::read_to_string(out.join("seed-1/runlog.csv")).unwrap();
    assert_eq!(runlog.lines().count(), 1 + 3);
    let saved = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(
        saved.lines().any(|l| l.replace(' ', "") == "gens=2"),
        "{saved}"
    );
}

#[test]
fn full_sweep_matches_refit_apply() {
    use twlearn::corpus::{load_corpus, CorpusFormat, VocabSize};
    use twlearn::termstats::TermStats;
    use twlearn_cli::commands::{apply_on, sweep_on, ApplyMode};
    use twlearn_cli::config::ExperimentConfig;
    use twlearn_cli::experiment::{Split, Vectorized, VocabSource};

    let dir = tempfile::tempdir().unwrap();
    let path = write_file(dir.path(), "c.tsv", &planted_corpus(11, 80, 30, 6, 3.0));
    let cfg = ExperimentConfig {
        train: Some(path.clone()),
        top_k: VocabSize::All,
        ..ExperimentConfig::default()
    };
    let split =
        Split::from_corpus(load_corpus(&path, CorpusFormat::Tsv).unwrap(), &cfg, 3).unwrap();
    let expr = twlearn::expr::parse_prefix("sqrt(-(TF-RF,ACBAL))").unwrap();

    let rows = sweep_on(&cfg, 3, &split, &expr, &[0.5, 1.0]).unwrap();
    let full = rows
        .iter()
        .find(|r| r.fraction == 1.0 && r.scheme == "learned")
        .unwrap();

    let data =
        Vectorized::build(&split, &VocabSource::Fit(VocabSize::All), &cfg.tokenizer).unwrap();
    let stats = TermStats::fit(&data.train).unwrap();
    let applied = apply_on(
        &cfg,
        3,
        &split,
        &TwsModel::new(expr),
        &stats,
        ApplyMode::Refit,
    )
    .unwrap();
    assert_eq!(full.vocab_size, data.train.n_terms());
    assert_eq!(full.macro_f1, applied.macro_f1);
    assert_eq!(full.accuracy, applied.accuracy);
}
