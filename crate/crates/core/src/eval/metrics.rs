use std::collections::BTreeMap;

use crate::corpus::{Genre, MovieRecord, Rating};
use crate::{Error, Result};

const K: usize = Rating::COUNT;

/// Counts indexed `[gold][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[usize; K]; K],
}

impl ConfusionMatrix {
    pub fn get(&self, gold: Rating, predicted: Rating) -> usize {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Gold count per class.
    pub fn support(&self) -> [usize; K] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn predicted_counts(&self) -> [usize; K] {
        let mut out = [0; K];
        for row in &self.counts {
            for (o, &c) in out.iter_mut().zip(row) {
                *o += c;
            }
        }
        out
    }

    /// Each row divided by its gold support; empty rows stay zero.
    pub fn row_normalized(&self) -> [[f64; K]; K] {
        let support = self.support();
        let mut out = [[0.0; K]; K];
        for (g, row) in self.counts.iter().enumerate() {
            if support[g] > 0 {
                for (p, &c) in row.iter().enumerate() {
                    out[g][p] = c as f64 / support[g] as f64;
                }
            }
        }
        out
    }

    /// F1 per class; 0 when precision + recall is 0.
    pub fn f1(&self) -> [f64; K] {
        let support = self.support();
        let predicted = self.predicted_counts();
        let mut out = [0.0; K];
        for c in 0..K {
            let tp = self.counts[c][c] as f64;
            // 2PR/(P+R) = 2tp / (support + predicted)
            let denom = (support[c] + predicted[c]) as f64;
            if tp > 0.0 {
                out[c] = 2.0 * tp / denom;
            }
        }
        out
    }

    pub fn weighted_f1(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        let f1 = self.f1();
        self.support()
            .iter()
            .zip(f1)
            .map(|(&s, f)| s as f64 * f)
            .sum::<f64>()
            / n as f64
    }

    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..K).map(|c| self.counts[c][c]).sum();
        correct as f64 / self.total().max(1) as f64
    }
}

fn check_lengths(gold: &[Rating], predicted: &[Rating]) -> Result<()> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: predicted.len(),
        });
    }
    Ok(())
}

pub fn confusion(gold: &[Rating], predicted: &[Rating]) -> Result<ConfusionMatrix> {
    check_lengths(gold, predicted)?;
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(predicted) {
        m.counts[g.index()][p.index()] += 1;
    }
    Ok(m)
}

/// Support-weighted mean of per-class F1.
pub fn weighted_f1(gold: &[Rating], predicted: &[Rating]) -> Result<f64> {
    if gold.is_empty() {
        check_lengths(gold, predicted)?;
        return Err(Error::EmptyInput("label list"));
    }
    Ok(confusion(gold, predicted)?.weighted_f1())
}

pub fn per_class_f1(gold: &[Rating], predicted: &[Rating]) -> Result<[f64; K]> {
    Ok(confusion(gold, predicted)?.f1())
}

pub fn accuracy(gold: &[Rating], predicted: &[Rating]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::EmptyInput("label list"));
    }
    Ok(confusion(gold, predicted)?.accuracy())
}

/// Weighted F1 restricted to the records of each genre. A movie counts in
/// every one of its genres; genres with no records are omitted.
pub fn per_genre_f1(records: &[MovieRecord], predicted: &[Rating]) -> Result<BTreeMap<Genre, f64>> {
    if records.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: records.len(),
            right: predicted.len(),
        });
    }
    let mut groups: BTreeMap<Genre, ConfusionMatrix> = BTreeMap::new();
    for (r, p) in records.iter().zip(predicted) {
        for &g in &r.genres {
            groups.entry(g).or_default().counts[r.rating.index()][p.index()] += 1;
        }
    }
    Ok(groups.into_iter().map(|(g, m)| (g, m.weighted_f1())).collect())
}
