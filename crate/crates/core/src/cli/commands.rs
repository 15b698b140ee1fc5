use std::fs;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::info;

use super::{AnalyzeArgs, BaselineArgs, BaselineKind, EvaluateArgs, ModelArgs, PredictArgs, RunMeta, SplitArgs, TrainArgs};
use crate::baselines::{fit_thresholds, svm_fit, SvmConfig};
use crate::corpus::{class_distribution, load_corpus, stratified_split, write_corpus, Genre, MovieRecord, Rating, SplitRatios};
use crate::eval::{
    build_report, emotion_by_class, genre_rating_table, write_report, write_tsv, ReportInputs,
};
use crate::features::{FeatureExtractor, Sample};
use crate::lexicon::{load_bad_words, load_emotion_lexicon, BadWordList, EmotionCategory, EmotionLexicon, EmotionVector};
use crate::model::{load_checkpoint, save_checkpoint, train as fit, Encoder, EncoderKind, ModelConfig, RatingClassifier, TrainOutcome};
use crate::text::{load_embeddings, script_tokens, Vocabulary};
use crate::Error;

fn require_file(path: &Path, what: &str) -> anyhow::Result<()> {
    if !path.is_file() {
        bail!("{what} `{}` does not exist or is not a file", path.display());
    }
    Ok(())
}

fn split_file(dir: &Path, name: &str) -> anyhow::Result<PathBuf> {
    let path = dir.join(name);
    require_file(&path, "split file")?;
    Ok(path)
}

fn load_records(path: &Path) -> anyhow::Result<Vec<MovieRecord>> {
    Ok(load_corpus(path, true)
        .with_context(|| format!("loading {}", path.display()))?
        .records)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Defaults, then the config file, then `--seed`, then `--set` overrides.
fn build_config(config: Option<&Path>, seed: Option<u64>, overrides: &[String]) -> anyhow::Result<ModelConfig> {
    let mut cfg = ModelConfig::default();
    if let Some(path) = config {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        cfg.apply_text(&text)
            .with_context(|| format!("in config {}", path.display()))?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .with_context(|| format!("override `{o}` is not KEY=VALUE"))?;
        cfg.set(k, v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn optional_lexicon(path: Option<&PathBuf>) -> anyhow::Result<Option<EmotionLexicon>> {
    path.map(|p| {
        require_file(p, "emotion lexicon")?;
        Ok(load_emotion_lexicon(p)?)
    })
    .transpose()
}

fn optional_bad_words(paths: &[PathBuf]) -> anyhow::Result<Option<BadWordList>> {
    if paths.is_empty() {
        return Ok(None);
    }
    for p in paths {
        require_file(p, "bad-word list")?;
    }
    Ok(Some(load_bad_words(paths)?))
}

pub(super) fn split(a: &SplitArgs, meta: &RunMeta) -> anyhow::Result<()> {
    require_file(&a.corpus, "corpus")?;
    let loaded = load_corpus(&a.corpus, !a.lenient)?;
    if loaded.records.is_empty() {
        return Err(Error::NoRecords.into());
    }
    if loaded.skipped_lines + loaded.duplicate_ids > 0 {
        info!(
            "skipped {} malformed lines and {} duplicate ids",
            loaded.skipped_lines, loaded.duplicate_ids
        );
    }
    let split = stratified_split(&loaded.records, SplitRatios::default(), a.seed)?;
    create_dir(&a.out)?;
    write_corpus(&a.out.join("train.jsonl"), &split.train)?;
    write_corpus(&a.out.join("valid.jsonl"), &split.validation)?;
    write_corpus(&a.out.join("test.jsonl"), &split.test)?;
    info!(
        "split {} records into {}/{}/{}",
        loaded.records.len(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    meta.write(&a.out, "split", Some(a.seed))
}

/// Builds the vocabulary and features from `train`, then trains.
fn fit_model(
    config: &ModelConfig,
    train: &[MovieRecord],
    valid: &[MovieRecord],
    embeddings: &Path,
    lexicon: Option<&EmotionLexicon>,
) -> anyhow::Result<TrainOutcome<f32>> {
    if config.use_emotion && lexicon.is_none() {
        return Err(Error::ConfigMismatch("use_emotion is set but no --emotion-lexicon was given".into()).into());
    }
    let vocab = Vocabulary::build(train, config.min_count)?;
    let (table, coverage) = load_embeddings::<f32>(embeddings, &vocab, config.d_emb)?;
    info!(
        "vocabulary {} words, {} with pretrained vectors, {} zero-initialised",
        vocab.len(),
        coverage.found,
        coverage.missing
    );
    let extractor = FeatureExtractor::new(&vocab, lexicon, config.seq_len);
    let train_samples = extractor.extract_all(train)?;
    let valid_samples = extractor.extract_all(valid)?;
    let model = RatingClassifier::new(config.clone(), vocab.clone(), table)?;
    Ok(fit(model, &train_samples, &valid_samples)?)
}

fn write_history(path: &Path, outcome: &TrainOutcome<f32>) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = outcome
        .history
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                format!("{:.8}", r.train_loss),
                format!("{:.6}", r.valid_f1),
                format!("{:.6}", r.valid_accuracy),
            ]
        })
        .collect();
    write_tsv(path, &["epoch", "train_loss", "valid_weighted_f1", "valid_accuracy"], &rows)?;
    Ok(())
}

fn check_model_args(m: &ModelArgs) -> anyhow::Result<()> {
    require_file(&m.embeddings, "embedding file")?;
    if let Some(c) = &m.config {
        require_file(c, "config file")?;
    }
    Ok(())
}

pub(super) fn train(a: &TrainArgs, meta: &RunMeta) -> anyhow::Result<()> {
    check_model_args(&a.model)?;
    let train_path = split_file(&a.split_dir, "train.jsonl")?;
    let valid_path = split_file(&a.split_dir, "valid.jsonl")?;
    let config = build_config(a.model.config.as_deref(), a.model.seed, &a.model.overrides)?;
    let lexicon = optional_lexicon(a.model.emotion_lexicon.as_ref())?;
    let train = load_records(&train_path)?;
    let valid = load_records(&valid_path)?;

    let outcome = fit_model(&config, &train, &valid, &a.model.embeddings, lexicon.as_ref())?;
    let dir = parent_dir(&a.out);
    create_dir(&dir)?;
    save_checkpoint(&outcome.best, &a.out)?;
    write_history(Path::new(&format!("{}.history.tsv", a.out.display())), &outcome)?;
    info!("saved epoch {} to {}", outcome.best_epoch, a.out.display());
    meta.write(&dir, "train", Some(config.seed))
}

struct Scored {
    records: Vec<MovieRecord>,
    predicted: Vec<Rating>,
    probs: Vec<[f64; Rating::COUNT]>,
    emotions: Option<Vec<EmotionVector>>,
    attention: Option<Vec<Vec<f64>>>,
}

fn score_model(model: &RatingClassifier<f32>, records: Vec<MovieRecord>, lexicon: Option<&EmotionLexicon>) -> anyhow::Result<Scored> {
    model.check_pipeline(lexicon.is_some(), true)?;
    let extractor = FeatureExtractor::new(model.vocab(), lexicon, model.config().seq_len);
    let samples: Vec<Sample> = extractor.extract_all(&records)?;
    let predictions = model.predict(&samples)?;
    let emotions = lexicon.map(|_| samples.iter().map(|s| s.emotion.expect("lexicon given")).collect());
    let attention = match model.encoder {
        Encoder::LstmAttention { .. } => Some(predictions.iter().map(|p| p.attention.clone()).collect()),
        Encoder::Cnn(_) => None,
    };
    Ok(Scored {
        predicted: predictions.iter().map(|p| p.rating).collect(),
        probs: predictions.iter().map(|p| p.probs).collect(),
        records,
        emotions,
        attention,
    })
}

fn write_predictions(path: &Path, records: &[MovieRecord], predicted: &[Rating], probs: Option<&[[f64; Rating::COUNT]]>) -> anyhow::Result<()> {
    let mut header = vec!["id", "gold", "predicted"];
    if probs.is_some() {
        header.extend(["p_G", "p_PG", "p_PG13", "p_R", "p_NC17"]);
    }
    let rows: Vec<Vec<String>> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.id.clone(), r.rating.label().to_string(), predicted[i].label().to_string()];
            if let Some(p) = probs {
                row.extend(p[i].iter().map(|v| format!("{v:.6}")));
            }
            row
        })
        .collect();
    write_tsv(path, &header, &rows)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_full_report(
    out: &Path,
    records: &[MovieRecord],
    predicted: &[Rating],
    emotions: Option<&[EmotionVector]>,
    attention: Option<&[Vec<f64>]>,
    bad_words: Option<&BadWordList>,
    top_k: usize,
) -> anyhow::Result<f64> {
    let report = build_report(&ReportInputs {
        records,
        predicted,
        emotions,
        attention,
        bad_words,
        top_k,
    })?;
    write_report(out, &report)?;
    Ok(report.weighted_f1)
}

pub(super) fn evaluate(a: &EvaluateArgs, meta: &RunMeta) -> anyhow::Result<()> {
    require_file(&a.ckpt, "checkpoint")?;
    let path = split_file(&a.split_dir, a.split.file_name())?;
    let lexicon = optional_lexicon(a.emotion_lexicon.as_ref())?;
    let bad_words = optional_bad_words(&a.bad_words)?;
    let model: RatingClassifier<f32> = load_checkpoint(&a.ckpt)?;
    let scored = score_model(&model, load_records(&path)?, lexicon.as_ref())?;

    create_dir(&a.out)?;
    let f1 = write_full_report(
        &a.out,
        &scored.records,
        &scored.predicted,
        scored.emotions.as_deref(),
        scored.attention.as_deref(),
        bad_words.as_ref(),
        a.top_k,
    )?;
    write_predictions(&a.out.join("predictions.tsv"), &scored.records, &scored.predicted, Some(&scored.probs))?;
    info!("weighted F1 {f1:.4} on {} records", scored.records.len());
    meta.write(&a.out, "evaluate", Some(model.config().seed))
}

/// One line per record: id, rating, then the five class probabilities.
pub(super) fn predict(a: &PredictArgs) -> anyhow::Result<String> {
    require_file(&a.ckpt, "checkpoint")?;
    require_file(&a.input, "input")?;
    let lexicon = optional_lexicon(a.emotion_lexicon.as_ref())?;
    let model: RatingClassifier<f32> = load_checkpoint(&a.ckpt)?;
    let scored = score_model(&model, load_records(&a.input)?, lexicon.as_ref())?;
    let mut out = String::new();
    for ((r, rating), p) in scored.records.iter().zip(&scored.predicted).zip(&scored.probs) {
        let probs: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "{}\t{}\t{}", r.id, rating.label(), probs.join(" "))?;
    }
    Ok(out)
}

pub(super) fn analyze(a: &AnalyzeArgs, meta: &RunMeta) -> anyhow::Result<()> {
    require_file(&a.corpus, "corpus")?;
    let lexicon = optional_lexicon(a.emotion_lexicon.as_ref())?;
    let bad_words = optional_bad_words(&a.bad_words)?;
    let records = load_records(&a.corpus)?;
    create_dir(&a.out)?;

    let dist = class_distribution(&records);
    let total = dist.total().max(1) as f64;
    let rows: Vec<Vec<String>> = Rating::ALL
        .iter()
        .map(|&r| {
            vec![
                r.label().to_string(),
                dist.rating(r).to_string(),
                format!("{:.6}", dist.rating(r) as f64 / total),
            ]
        })
        .collect();
    write_tsv(&a.out.join("class_distribution.tsv"), &["rating", "count", "share"], &rows)?;

    let table = genre_rating_table(&records);
    let mut header = vec!["genre", "total"];
    header.extend(Rating::ALL.iter().map(|r| r.label()));
    let rows: Vec<Vec<String>> = Genre::ALL
        .iter()
        .map(|&g| {
            let mut row = vec![g.label().to_string(), dist.genre(g).to_string()];
            row.extend(table[g.index()].iter().map(|c| c.to_string()));
            row
        })
        .collect();
    write_tsv(&a.out.join("genre_rating.tsv"), &header, &rows)?;

    if let Some(lex) = &lexicon {
        let mut header = vec!["rating", "count"];
        header.extend(EmotionCategory::ALL.iter().map(|c| c.name()));
        let rows: Vec<Vec<String>> = emotion_by_class(&records, lex)
            .into_iter()
            .map(|(r, n, mean)| {
                let mut row = vec![r.label().to_string(), n.to_string()];
                row.extend(mean.0.iter().map(|v| format!("{v:.6}")));
                row
            })
            .collect();
        write_tsv(&a.out.join("emotion_by_class.tsv"), &header, &rows)?;
    }
    if let Some(list) = &bad_words {
        let table = crate::eval::bad_word_table(&records, list, a.top_k);
        crate::eval::write_bad_word_table(&a.out.join("bad_words.tsv"), &table)?;
    }
    meta.write(&a.out, "analyze", None)
}

pub(super) fn baseline(a: &BaselineArgs, meta: &RunMeta) -> anyhow::Result<()> {
    let train_path = split_file(&a.split_dir, "train.jsonl")?;
    let valid_path = split_file(&a.split_dir, "valid.jsonl")?;
    let test_path = split_file(&a.split_dir, "test.jsonl")?;
    let lexicon = optional_lexicon(a.emotion_lexicon.as_ref())?;
    let bad_words = optional_bad_words(&a.bad_words)?;
    if a.kind == BaselineKind::Threshold && bad_words.is_none() {
        bail!("the threshold baseline needs --bad-words");
    }
    if a.kind == BaselineKind::Cnn {
        match &a.embeddings {
            Some(p) => require_file(p, "embedding file")?,
            None => bail!("the cnn baseline needs --embeddings"),
        }
        if let Some(c) = &a.config {
            require_file(c, "config file")?;
        }
    }
    let train = load_records(&train_path)?;
    let valid = load_records(&valid_path)?;
    let test = load_records(&test_path)?;
    create_dir(&a.out)?;

    let emotions_of = |records: &[MovieRecord]| -> Option<Vec<EmotionVector>> {
        lexicon
            .as_ref()
            .map(|lex| records.iter().map(|r| lex.emotion_vector(&script_tokens(r))).collect())
    };

    let (predicted, probs, attention, seed): (Vec<Rating>, Option<Vec<[f64; 5]>>, Option<Vec<Vec<f64>>>, Option<u64>) = match a.kind {
        BaselineKind::Threshold => {
            let list = bad_words.as_ref().expect("checked above");
            let ratio = |r: &MovieRecord| list.ratio(&script_tokens(r));
            let pairs = train
                .iter()
                .map(|r| Ok((ratio(r)?, r.rating)))
                .collect::<crate::Result<Vec<_>>>()?;
            let model = fit_thresholds(&pairs)?;
            let rows = vec![model.thresholds.iter().map(|t| format!("{t:.8}")).collect()];
            write_tsv(&a.out.join("thresholds.tsv"), &["t1", "t2", "t3", "t4"], &rows)?;
            let predicted = test.iter().map(|r| Ok(model.predict(ratio(r)?))).collect::<crate::Result<_>>()?;
            (predicted, None, None, None)
        }
        BaselineKind::Svm => {
            let config = SvmConfig {
                epochs: a.svm_epochs,
                seed: a.seed.unwrap_or(0),
                ..SvmConfig::default()
            };
            let model = svm_fit(&train, &valid, lexicon.as_ref(), &config)?;
            let rows: Vec<Vec<String>> = model
                .grid_scores
                .iter()
                .map(|(c, f)| vec![format!("{c}"), format!("{f:.6}"), (*c == model.c).to_string()])
                .collect();
            write_tsv(&a.out.join("svm_grid.tsv"), &["C", "valid_weighted_f1", "selected"], &rows)?;
            let predicted = test.iter().map(|r| model.predict(r, lexicon.as_ref())).collect();
            (predicted, None, None, Some(config.seed))
        }
        BaselineKind::Cnn => {
            let mut config = build_config(a.config.as_deref(), a.seed, &a.overrides)?;
            config.encoder = EncoderKind::Cnn;
            config.validate()?;
            let embeddings = a.embeddings.as_ref().expect("checked above");
            let outcome = fit_model(&config, &train, &valid, embeddings, lexicon.as_ref())?;
            save_checkpoint(&outcome.best, &a.out.join("model.bin"))?;
            write_history(&a.out.join("history.tsv"), &outcome)?;
            let scored = score_model(&outcome.best, test.clone(), lexicon.as_ref())?;
            (scored.predicted, Some(scored.probs), None, Some(config.seed))
        }
    };

    let emotions = emotions_of(&test);
    let f1 = write_full_report(
        &a.out,
        &test,
        &predicted,
        emotions.as_deref(),
        attention.as_deref(),
        bad_words.as_ref(),
        a.top_k,
    )?;
    write_predictions(&a.out.join("predictions.tsv"), &test, &predicted, probs.as_deref())?;
    info!("{:?} baseline: test weighted F1 {f1:.4}", a.kind);
    meta.write(&a.out, "baseline", seed)
}
