mod common;

use std::collections::BTreeSet;
use std::path::Path;

use common::*;
use scriptgauge::cli::run;
use scriptgauge::corpus::load_corpus;

fn run_ok(args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut full = vec!["scriptgauge"];
    full.extend_from_slice(args);
    run(full, &mut out).unwrap_or_else(|e| panic!("{args:?}: {e:#}"));
    String::from_utf8(out).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY: [&str; 14] = [
    "--set", "d_emb=4", "--set", "d_hidden=4", "--set", "d_dense=4", "--set", "epochs=3", "--set", "seq_len=20", "--set",
    "learning_rate=0.01", "--set", "batch_size=8",
];

fn train_args<'a>(fx: &'a Fixture, split: &'a str, ckpt: &'a str) -> Vec<&'a str> {
    let mut a = vec![
        "--threads",
        "1",
        "train",
        "--embeddings",
        s(&fx.embeddings),
        "--emotion-lexicon",
        s(&fx.lexicon),
        "--split-dir",
        split,
        "--out",
        ckpt,
    ];
    a.extend_from_slice(&TINY);
    a
}

#[test]
fn split_partitions_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), 10, 0);
    let out = dir.path().join("split");
    run_ok(&["split", "--corpus", s(&fx.corpus), "--seed", "4", "--out", s(&out)]);
    let mut all = BTreeSet::new();
    let mut total = 0;
    for f in ["train.jsonl", "valid.jsonl", "test.jsonl"] {
        let recs = load_corpus(&out.join(f), true).unwrap().records;
        total += recs.len();
        all.extend(recs.into_iter().map(|r| r.id));
    }
    assert_eq!(total, 50);
    assert_eq!(all, fx.records.iter().map(|r| r.id.clone()).collect());
    let meta = std::fs::read_to_string(out.join("run_meta.txt")).unwrap();
    assert!(meta.contains("verb\tsplit") && meta.contains("seed\t4"));
}

#[test]
fn train_evaluate_predict_round() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), 10, 1);
    let split = dir.path().join("split");
    run_ok(&["split", "--corpus", s(&fx.corpus), "--out", s(&split)]);
    let ckpt = dir.path().join("run/model.bin");
    run_ok(&train_args(&fx, s(&split), s(&ckpt)));
    assert!(ckpt.exists());
    assert!(dir.path().join("run/run_meta.txt").exists());
    let history = std::fs::read_to_string(dir.path().join("run/model.bin.history.tsv")).unwrap();
    assert_eq!(history.lines().count(), 4);

    let report = dir.path().join("report");
    run_ok(&[
        "evaluate",
        "--ckpt",
        s(&ckpt),
        "--split-dir",
        s(&split),
        "--out",
        s(&report),
        "--emotion-lexicon",
        s(&fx.lexicon),
        "--bad-words",
        s(&fx.bad_words),
    ]);
    for f in ["metrics.tsv", "confusion.tsv", "per_genre_f1.tsv", "attention_words.tsv", "bad_words.tsv", "predictions.tsv", "run_meta.txt"] {
        assert!(report.join(f).exists(), "{f}");
    }

    let printed = run_ok(&["predict", "--ckpt", s(&ckpt), "--input", s(&fx.corpus), "--emotion-lexicon", s(&fx.lexicon)]);
    let lines: Vec<&str> = printed.lines().collect();
    assert_eq!(lines.len(), 50);
    for line in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3, "{line}");
        assert!(["G", "PG", "PG-13", "R", "NC-17"].contains(&fields[1]));
        let p: Vec<f64> = fields[2].split(' ').map(|v| v.parse().unwrap()).collect();
        assert_eq!(p.len(), 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-5);
    }

    let mut out = Vec::new();
    let err = run(["scriptgauge", "predict", "--ckpt", s(&ckpt), "--input", s(&fx.corpus)], &mut out).unwrap_err();
    assert!(format!("{err:#}").contains("emotion"), "{err:#}");
}

#[test]
fn training_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), 8, 2);
    let split = dir.path().join("split");
    run_ok(&["split", "--corpus", s(&fx.corpus), "--out", s(&split)]);
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    run_ok(&train_args(&fx, s(&split), s(&a)));
    let mut args = train_args(&fx, s(&split), s(&b));
    args[1] = "3";
    run_ok(&args);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn missing_required_flag_is_named() {
    let mut out = Vec::new();
    let err = run(["scriptgauge", "train", "--split-dir", "x", "--out", "y"], &mut out).unwrap_err();
    assert!(err.to_string().contains("--embeddings"), "{err}");
    let err = run(["scriptgauge", "split", "--corpus", "/nonexistent/c.jsonl", "--out", "z"], &mut out).unwrap_err();
    assert!(format!("{err:#}").contains("c.jsonl"), "{err:#}");
}

#[test]
fn baselines_and_analysis_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), 10, 3);
    let split = dir.path().join("split");
    run_ok(&["split", "--corpus", s(&fx.corpus), "--out", s(&split)]);

    let th = dir.path().join("th");
    run_ok(&["baseline", "--kind", "threshold", "--split-dir", s(&split), "--out", s(&th), "--bad-words", s(&fx.bad_words)]);
    assert!(th.join("thresholds.tsv").exists() && th.join("metrics.tsv").exists());

    let svm = dir.path().join("svm");
    run_ok(&["baseline", "--kind", "svm", "--split-dir", s(&split), "--out", s(&svm)]);
    assert!(svm.join("svm_grid.tsv").exists());
    let metrics = std::fs::read_to_string(svm.join("metrics.tsv")).unwrap();
    let acc: f64 = metrics
        .lines()
        .find_map(|l| l.strip_prefix("accuracy\t"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc >= 0.9, "keyword corpus should be separable, got {acc}");

    let cnn = dir.path().join("cnn");
    let mut args = vec![
        "baseline", "--kind", "cnn", "--split-dir", s(&split), "--out", s(&cnn), "--embeddings", s(&fx.embeddings), "--set",
        "use_emotion=false", "--set", "cnn_filters=4",
    ];
    args.extend_from_slice(&TINY);
    run_ok(&args);
    assert!(cnn.join("model.bin").exists());

    let an = dir.path().join("an");
    run_ok(&[
        "analyze", "--corpus", s(&fx.corpus), "--out", s(&an), "--emotion-lexicon", s(&fx.lexicon), "--bad-words",
        s(&fx.bad_words),
    ]);
    for f in ["class_distribution.tsv", "genre_rating.tsv", "emotion_by_class.tsv", "bad_words.tsv", "run_meta.txt"] {
        assert!(an.join(f).exists(), "{f}");
    }
    let dist = std::fs::read_to_string(an.join("class_distribution.tsv")).unwrap();
    assert!(dist.contains("PG-13\t10"), "{dist}");
}
