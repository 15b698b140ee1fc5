//! Evaluation report assembly and its tab-separated serialization.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::analysis::{attention_word_report, bad_word_table, emotion_profile, AttentionWords, BadWordClass, ProfileEntry};
use super::metrics::{confusion, per_genre_f1, ConfusionMatrix};
use crate::corpus::{Genre, MovieRecord, Rating};
use crate::lexicon::{BadWordList, EmotionCategory, EmotionVector};
use crate::text::script_tokens;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub confusion: ConfusionMatrix,
    pub per_class_f1: [f64; Rating::COUNT],
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub per_genre_f1: BTreeMap<Genre, f64>,
    pub emotion_profile: Vec<ProfileEntry>,
    pub attention_words: Vec<AttentionWords>,
    pub bad_words: Vec<BadWordClass>,
}

/// Everything a report can be built from. Optional parts yield empty
/// tables.
pub struct ReportInputs<'a> {
    pub records: &'a [MovieRecord],
    pub predicted: &'a [Rating],
    pub emotions: Option<&'a [EmotionVector]>,
    /// per-record weights over the leading script tokens
    pub attention: Option<&'a [Vec<f64>]>,
    pub bad_words: Option<&'a BadWordList>,
    pub top_k: usize,
}

pub fn build_report(inputs: &ReportInputs) -> Result<EvalReport> {
    let records = inputs.records;
    if records.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let gold: Vec<Rating> = records.iter().map(|r| r.rating).collect();
    let m = confusion(&gold, inputs.predicted)?;
    let emotion_profile = match inputs.emotions {
        Some(e) => emotion_profile(&gold, inputs.predicted, e)?,
        None => Vec::new(),
    };
    let attention_words = match inputs.attention {
        Some(weights) => {
            let tokens: Vec<Vec<String>> = records
                .iter()
                .zip(weights)
                .map(|(r, w)| {
                    let mut t = script_tokens(r);
                    t.truncate(w.len());
                    t
                })
                .collect();
            attention_word_report(&tokens, &gold, inputs.predicted, weights, inputs.top_k)?
        }
        None => Vec::new(),
    };
    let bad_words = match inputs.bad_words {
        Some(list) => bad_word_table(records, list, inputs.top_k),
        None => Vec::new(),
    };
    Ok(EvalReport {
        n: records.len(),
        confusion: m,
        per_class_f1: m.f1(),
        weighted_f1: m.weighted_f1(),
        accuracy: m.accuracy(),
        per_genre_f1: per_genre_f1(records, inputs.predicted)?,
        emotion_profile,
        attention_words,
        bad_words,
    })
}

/// Writes a header row and data rows, tab separated.
pub fn write_tsv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join("\t");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join("\t"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut metrics = vec![
        vec!["weighted_f1".into(), num(report.weighted_f1)],
        vec!["accuracy".into(), num(report.accuracy)],
        vec!["n".into(), report.n.to_string()],
    ];
    for r in Rating::ALL {
        metrics.push(vec![format!("f1_{}", r.label()), num(report.per_class_f1[r.index()])]);
    }
    write_tsv(&dir.join("metrics.tsv"), &["metric", "value"], &metrics)?;

    let mut header = vec!["gold\\predicted"];
    header.extend(Rating::ALL.iter().map(|r| r.label()));
    let rows: Vec<Vec<String>> = Rating::ALL
        .iter()
        .map(|g| {
            let mut row = vec![g.label().to_string()];
            row.extend(Rating::ALL.iter().map(|p| report.confusion.get(*g, *p).to_string()));
            row
        })
        .collect();
    write_tsv(&dir.join("confusion.tsv"), &header, &rows)?;

    let rows: Vec<Vec<String>> = report
        .per_genre_f1
        .iter()
        .map(|(g, f)| vec![g.label().to_string(), num(*f)])
        .collect();
    write_tsv(&dir.join("per_genre_f1.tsv"), &["genre", "weighted_f1"], &rows)?;

    let mut header = vec!["rating", "correct", "count"];
    header.extend(EmotionCategory::ALL.iter().map(|c| c.name()));
    let rows: Vec<Vec<String>> = report
        .emotion_profile
        .iter()
        .map(|e| {
            let mut row = vec![e.rating.label().to_string(), e.correct.to_string(), e.count.to_string()];
            row.extend(e.mean.0.iter().map(|&v| num(v)));
            row
        })
        .collect();
    write_tsv(&dir.join("emotion_profile.tsv"), &header, &rows)?;

    let mut rows = Vec::new();
    for a in &report.attention_words {
        for (rank, (w, v)) in a.words.iter().enumerate() {
            rows.push(vec![
                a.rating.label().to_string(),
                a.group.label().to_string(),
                (rank + 1).to_string(),
                w.clone(),
                format!("{v:.8}"),
            ]);
        }
    }
    write_tsv(&dir.join("attention_words.tsv"), &["rating", "group", "rank", "word", "mean_weight"], &rows)?;

    write_bad_word_table(&dir.join("bad_words.tsv"), &report.bad_words)
}

/// Rank 0 rows carry the class's overall negativity.
pub fn write_bad_word_table(path: &Path, table: &[BadWordClass]) -> Result<()> {
    let mut rows = Vec::new();
    for c in table {
        rows.push(vec![
            c.rating.label().to_string(),
            "0".into(),
            "*".into(),
            format!("{:.8}", c.negativity),
        ]);
        for (rank, (w, v)) in c.top.iter().enumerate() {
            rows.push(vec![
                c.rating.label().to_string(),
                (rank + 1).to_string(),
                w.clone(),
                format!("{v:.8}"),
            ]);
        }
    }
    write_tsv(path, &["rating", "rank", "word", "ratio"], &rows)
}
