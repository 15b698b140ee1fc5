use std::collections::BTreeMap;

use crate::corpus::{Genre, MovieRecord, Rating};
use crate::lexicon::{BadWordList, EmotionLexicon, EmotionVector};
use crate::text::script_tokens;
use crate::{Error, Result};

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub rating: Rating,
    pub correct: bool,
    pub count: usize,
    pub mean: EmotionVector,
}

fn aligned(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

fn mean_vector<'a>(vectors: impl Iterator<Item = &'a EmotionVector>) -> (usize, EmotionVector) {
    let mut sum = [0.0; 10];
    let mut n = 0;
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v.0) {
            *s += x;
        }
        n += 1;
    }
    (n, EmotionVector(sum.map(|s| s / n.max(1) as f64)))
}

/// Mean emotion vector per (gold class, prediction correct). Groups with no
/// members are left out.
pub fn emotion_profile(gold: &[Rating], predicted: &[Rating], emotions: &[EmotionVector]) -> Result<Vec<ProfileEntry>> {
    aligned(gold.len(), predicted.len())?;
    aligned(gold.len(), emotions.len())?;
    let mut out = Vec::new();
    for rating in Rating::ALL {
        for correct in [true, false] {
            let members = (0..gold.len())
                .filter(|&i| gold[i] == rating && (predicted[i] == rating) == correct)
                .map(|i| &emotions[i]);
            let (count, mean) = mean_vector(members);
            if count > 0 {
                out.push(ProfileEntry {
                    rating,
                    correct,
                    count,
                    mean,
                });
            }
        }
    }
    Ok(out)
}

/// Mean emotion vector of each class's scripts.
pub fn emotion_by_class(records: &[MovieRecord], lexicon: &EmotionLexicon) -> Vec<(Rating, usize, EmotionVector)> {
    let vectors: Vec<EmotionVector> = records.iter().map(|r| lexicon.emotion_vector(&script_tokens(r))).collect();
    Rating::ALL
        .iter()
        .filter_map(|&rating| {
            let (n, mean) = mean_vector(
                records
                    .iter()
                    .zip(&vectors)
                    .filter(|(r, _)| r.rating == rating)
                    .map(|(_, v)| v),
            );
            (n > 0).then_some((rating, n, mean))
        })
        .collect()
}

/// Movie counts indexed `[genre][rating]`.
pub fn genre_rating_table(records: &[MovieRecord]) -> [[usize; Rating::COUNT]; Genre::COUNT] {
    let mut table = [[0; Rating::COUNT]; Genre::COUNT];
    for r in records {
        for g in &r.genres {
            table[g.index()][r.rating.index()] += 1;
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ErrorGroup {
    /// gold = r and predicted = r
    TruePositive,
    /// exactly one of gold and predicted is r
    Mistaken,
}

impl ErrorGroup {
    pub fn label(self) -> &'static str {
        match self {
            ErrorGroup::TruePositive => "TP",
            ErrorGroup::Mistaken => "FN+FP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWords {
    pub rating: Rating,
    pub group: ErrorGroup,
    /// `(word, mean weight)`, best first
    pub words: Vec<(String, f64)>,
}

/// Highest `k` entries by descending value, ties in word order.
fn top_k(values: BTreeMap<String, f64>, k: usize) -> Vec<(String, f64)> {
    let mut entries: Vec<(String, f64)> = values.into_iter().collect();
    // BTreeMap iteration is already lexicographic and the sort is stable
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));
    entries.truncate(k);
    entries
}

/// Words with the highest mean attention weight per class and group. The
/// mean pools every occurrence of a word across the group's scripts.
/// `tokens[i]` are the surface tokens aligned with `attention[i]`.
pub fn attention_word_report(
    tokens: &[Vec<String>],
    gold: &[Rating],
    predicted: &[Rating],
    attention: &[Vec<f64>],
    k: usize,
) -> Result<Vec<AttentionWords>> {
    aligned(gold.len(), predicted.len())?;
    aligned(gold.len(), tokens.len())?;
    aligned(gold.len(), attention.len())?;
    let mut out = Vec::new();
    for rating in Rating::ALL {
        let mut groups: [BTreeMap<String, (f64, usize)>; 2] = Default::default();
        for i in 0..gold.len() {
            let group = match (gold[i] == rating, predicted[i] == rating) {
                (true, true) => 0,
                (true, false) | (false, true) => 1,
                (false, false) => continue,
            };
            for (word, &w) in tokens[i].iter().zip(&attention[i]) {
                let e = groups[group].entry(word.clone()).or_insert((0.0, 0));
                e.0 += w;
                e.1 += 1;
            }
        }
        for (g, group) in [ErrorGroup::TruePositive, ErrorGroup::Mistaken].into_iter().enumerate() {
            let means = std::mem::take(&mut groups[g])
                .into_iter()
                .map(|(w, (s, n))| (w, s / n as f64))
                .collect();
            out.push(AttentionWords {
                rating,
                group,
                words: top_k(means, k),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BadWordClass {
    pub rating: Rating,
    pub total_tokens: usize,
    /// all bad-word occurrences over all tokens of the class
    pub negativity: f64,
    pub top: Vec<(String, f64)>,
}

/// Per class, merges every script and ranks bad words by
/// occurrences / class token count. Classes without records are left out.
pub fn bad_word_table(records: &[MovieRecord], list: &BadWordList, k: usize) -> Vec<BadWordClass> {
    Rating::ALL
        .iter()
        .filter_map(|&rating| {
            let mut total = 0usize;
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            let mut any = false;
            for r in records.iter().filter(|r| r.rating == rating) {
                any = true;
                let tokens = script_tokens(r);
                total += tokens.len();
                for (w, c) in list.occurrences(&tokens) {
                    *counts.entry(w).or_default() += c;
                }
            }
            if !any {
                return None;
            }
            let denom = total.max(1) as f64;
            let hits: usize = counts.values().sum();
            let ratios = counts.into_iter().map(|(w, c)| (w, c as f64 / denom)).collect();
            Some(BadWordClass {
                rating,
                total_tokens: total,
                negativity: hits as f64 / denom,
                top: top_k(ratios, k),
            })
        })
        .collect()
}
