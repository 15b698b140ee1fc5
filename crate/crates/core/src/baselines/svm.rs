//! One-vs-rest linear SVM trained in the primal with the Pegasos
//! subgradient method.
//!
//! Features: unigram and bigram counts (bigrams never cross utterance
//! boundaries) L2-normalized together, binary genre and director
//! indicators, and the 10 emotion proportions. The index map comes from
//! the training records only.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::{Genre, MovieRecord, Rating};
use crate::eval::weighted_f1;
use crate::lexicon::{EmotionCategory, EmotionLexicon};
use crate::numerics::rng::rng_for;
use crate::text::tokenize;
use crate::{Error, Result};

const SVM_STREAM: u64 = 0x5f3;

/// `(index, value)` pairs in ascending index order.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c_grid: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c_grid: vec![1.0, 10.0, 100.0, 1000.0],
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmFeatureMap {
    lexical: HashMap<String, u32>,
    directors: HashMap<String, u32>,
    use_emotion: bool,
}

fn ngrams(record: &MovieRecord) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for utterance in &record.script {
        let tokens = tokenize(utterance);
        for t in &tokens {
            *counts.entry(format!("u:{t}")).or_default() += 1;
        }
        for w in tokens.windows(2) {
            *counts.entry(format!("b:{} {}", w[0], w[1])).or_default() += 1;
        }
    }
    counts
}

impl SvmFeatureMap {
    /// Indices are assigned in sorted order, so the map does not depend on
    /// the order of `train`.
    pub fn fit(train: &[MovieRecord], use_emotion: bool) -> Self {
        let mut grams = BTreeSet::new();
        let mut directors = BTreeSet::new();
        for r in train {
            grams.extend(ngrams(r).into_keys());
            directors.extend(r.directors.iter().cloned());
        }
        SvmFeatureMap {
            lexical: grams.into_iter().enumerate().map(|(i, g)| (g, i as u32)).collect(),
            directors: directors.into_iter().enumerate().map(|(i, d)| (d, i as u32)).collect(),
            use_emotion,
        }
    }

    fn genre_offset(&self) -> u32 {
        self.lexical.len() as u32
    }

    fn director_offset(&self) -> u32 {
        self.genre_offset() + Genre::COUNT as u32
    }

    fn emotion_offset(&self) -> u32 {
        self.director_offset() + self.directors.len() as u32
    }

    pub fn dim(&self) -> usize {
        self.emotion_offset() as usize + if self.use_emotion { EmotionCategory::COUNT } else { 0 }
    }

    pub fn transform(&self, record: &MovieRecord, lexicon: Option<&EmotionLexicon>) -> SparseVec {
        let mut out: SparseVec = Vec::new();
        let mut lexical: Vec<(u32, f64)> = ngrams(record)
            .into_iter()
            .filter_map(|(g, c)| self.lexical.get(&g).map(|&i| (i, c as f64)))
            .collect();
        let norm = lexical.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            lexical.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        out.extend(lexical);
        let mut genres: Vec<u32> = record.genres.iter().map(|g| self.genre_offset() + g.index() as u32).collect();
        genres.sort_unstable();
        genres.dedup();
        out.extend(genres.into_iter().map(|i| (i, 1.0)));
        let mut dirs: Vec<u32> = record
            .directors
            .iter()
            .filter_map(|d| self.directors.get(d).map(|&i| self.director_offset() + i))
            .collect();
        dirs.sort_unstable();
        dirs.dedup();
        out.extend(dirs.into_iter().map(|i| (i, 1.0)));
        if self.use_emotion {
            if let Some(lex) = lexicon {
                let tokens: Vec<String> = record.script.iter().flat_map(|u| tokenize(u)).collect();
                let e = lex.emotion_vector(&tokens);
                out.extend(
                    e.0.iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(k, &v)| (self.emotion_offset() + k as u32, v)),
                );
            }
        }
        out.sort_by_key(|&(i, _)| i);
        out
    }
}

/// One weight vector per class. The last entry of each is the bias, which
/// is learned as the weight of a constant feature 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOvr {
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
}

fn dot(w: &[f64], x: &SparseVec) -> f64 {
    let bias = w[w.len() - 1];
    x.iter().map(|&(i, v)| w[i as usize] * v).sum::<f64>() + bias
}

fn sq_norm(x: &SparseVec) -> f64 {
    x.iter().map(|(_, v)| v * v).sum::<f64>() + 1.0
}

/// Mean hinge loss of a binary problem with labels in {-1, +1}.
pub fn hinge_loss(w: &[f64], xs: &[SparseVec], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, &y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum::<f64>()
        / xs.len().max(1) as f64
}

fn objective(w: &[f64], xs: &[SparseVec], ys: &[f64], lambda: f64) -> f64 {
    0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>() + hinge_loss(w, xs, ys)
}

/// Pegasos on one binary problem. Returns the epoch-end iterate with the
/// lowest primal objective, starting from the zero vector as a candidate.
fn pegasos(xs: &[SparseVec], ys: &[f64], dim: usize, lambda: f64, epochs: usize, seed: u64) -> Vec<f64> {
    let n = xs.len();
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0;
    let mut v_sq = 0.0;
    let mut best = vec![0.0; dim + 1];
    let mut best_obj = objective(&best, xs, ys, lambda);
    let radius_sq = 1.0 / lambda;
    let mut t = 0u64;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..epochs {
        order.shuffle(&mut rng_for(seed, &[SVM_STREAM, epoch as u64]));
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * scale * dot(&v, &xs[i]);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                scale = 1.0;
                v_sq = 0.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let a = eta * ys[i] / scale;
                let x = &xs[i];
                let vx = dot(&v, x);
                v_sq += 2.0 * a * vx + a * a * sq_norm(x);
                for &(j, val) in x {
                    v[j as usize] += a * val;
                }
                v[dim] += a;
            }
            let w_sq = scale * scale * v_sq;
            if w_sq > radius_sq {
                scale *= (radius_sq / w_sq).sqrt();
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                v_sq *= scale * scale;
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let obj = objective(&w, xs, ys, lambda);
        if obj < best_obj {
            best_obj = obj;
            best = w;
        }
    }
    best
}

impl LinearOvr {
    /// Trains `n_classes` one-vs-rest classifiers with `λ = 1 / (C n)`.
    pub fn fit(xs: &[SparseVec], labels: &[usize], n_classes: usize, dim: usize, c: f64, epochs: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput("feature space"));
        }
        if xs.is_empty() {
            return Err(Error::EmptyInput("SVM training set"));
        }
        if xs.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: labels.len(),
            });
        }
        let lambda = 1.0 / (c * xs.len() as f64);
        let weights = (0..n_classes)
            .map(|k| {
                let ys: Vec<f64> = labels.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
                pegasos(xs, &ys, dim, lambda, epochs, seed)
            })
            .collect();
        Ok(LinearOvr { dim, weights })
    }

    pub fn decision(&self, x: &SparseVec) -> Vec<f64> {
        self.weights.iter().map(|w| dot(w, x)).collect()
    }

    /// Highest decision value, ties to the lower class index.
    pub fn predict(&self, x: &SparseVec) -> usize {
        let d = self.decision(x);
        let mut best = 0;
        for (k, &v) in d.iter().enumerate() {
            if v > d[best] {
                best = k;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub features: SvmFeatureMap,
    pub classifier: LinearOvr,
    pub c: f64,
    /// validation weighted F1 per grid value, in grid order
    pub grid_scores: Vec<(f64, f64)>,
}

impl SvmModel {
    pub fn predict(&self, record: &MovieRecord, lexicon: Option<&EmotionLexicon>) -> Rating {
        Rating::ALL[self.classifier.predict(&self.features.transform(record, lexicon))]
    }
}

/// Fits one model per `C` in the grid and keeps the one with the best
/// validation weighted F1 (earliest grid value on ties). Training records
/// are put in id order first, so the result does not depend on their
/// input order.
pub fn svm_fit(
    train: &[MovieRecord],
    validation: &[MovieRecord],
    lexicon: Option<&EmotionLexicon>,
    config: &SvmConfig,
) -> Result<SvmModel> {
    if config.c_grid.is_empty() {
        return Err(Error::EmptyInput("C grid"));
    }
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let mut sorted: Vec<&MovieRecord> = train.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let owned: Vec<MovieRecord> = sorted.iter().map(|r| (*r).clone()).collect();
    let features = SvmFeatureMap::fit(&owned, lexicon.is_some());
    let xs: Vec<SparseVec> = owned.iter().map(|r| features.transform(r, lexicon)).collect();
    let labels: Vec<usize> = owned.iter().map(|r| r.rating.index()).collect();
    let vx: Vec<SparseVec> = validation.iter().map(|r| features.transform(r, lexicon)).collect();
    let gold: Vec<Rating> = validation.iter().map(|r| r.rating).collect();

    let fitted: Vec<(LinearOvr, f64)> = config
        .c_grid
        .par_iter()
        .map(|&c| {
            let clf = LinearOvr::fit(&xs, &labels, Rating::COUNT, features.dim(), c, config.epochs, config.seed)?;
            let pred: Vec<Rating> = vx.iter().map(|x| Rating::ALL[clf.predict(x)]).collect();
            Ok((clf, weighted_f1(&gold, &pred)?))
        })
        .collect::<Result<_>>()?;
    let grid_scores: Vec<(f64, f64)> = config.c_grid.iter().copied().zip(fitted.iter().map(|f| f.1)).collect();
    let mut best = 0;
    for (i, f) in fitted.iter().enumerate() {
        if f.1 > fitted[best].1 {
            best = i;
        }
    }
    let (classifier, _) = fitted.into_iter().nth(best).expect("grid is non-empty");
    Ok(SvmModel {
        features,
        classifier,
        c: config.c_grid[best],
        grid_scores,
    })
}
