//! Four ordered cut points on the bad-word ratio. A ratio below `t1` is
//! G, in `[t1, t2)` PG, and so on up to NC-17 at or above `t4`.

use crate::corpus::Rating;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdModel {
    pub thresholds: [f64; 4],
}

impl ThresholdModel {
    pub fn new(thresholds: [f64; 4]) -> Result<Self> {
        if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Config(format!("thresholds {thresholds:?} are not non-decreasing")));
        }
        Ok(ThresholdModel { thresholds })
    }

    pub fn predict(&self, ratio: f64) -> Rating {
        let below = self.thresholds.iter().filter(|&&t| ratio >= t).count();
        Rating::ALL[below]
    }
}

pub fn threshold_predict(model: &ThresholdModel, ratio: f64) -> Rating {
    model.predict(ratio)
}

/// 0, 1, and the midpoint of every pair of consecutive distinct ratios, in
/// ascending order.
pub fn candidate_thresholds(ratios: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut out = vec![0.0];
    out.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(1.0);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

const TIE_EPS: f64 = 1e-12;

/// Prefix counts at each candidate: how many samples (of each class, and
/// overall) have a ratio strictly below it.
struct Prefix {
    below: Vec<[usize; Rating::COUNT]>,
    below_all: Vec<usize>,
    support: [usize; Rating::COUNT],
    n: usize,
}

impl Prefix {
    fn new(train: &[(f64, Rating)], cands: &[f64]) -> Self {
        let mut sorted: Vec<(f64, Rating)> = train.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut below = Vec::with_capacity(cands.len());
        let mut below_all = Vec::with_capacity(cands.len());
        let mut counts = [0; Rating::COUNT];
        let mut k = 0;
        for &c in cands {
            while k < sorted.len() && sorted[k].0 < c {
                counts[sorted[k].1.index()] += 1;
                k += 1;
            }
            below.push(counts);
            below_all.push(k);
        }
        let mut support = [0; Rating::COUNT];
        for (_, r) in train {
            support[r.index()] += 1;
        }
        Prefix {
            below,
            below_all,
            support,
            n: train.len(),
        }
    }

    /// `support · F1 / 2` of `class` when it owns `[lo, hi)`; `None` stands
    /// for an unbounded end.
    fn term(&self, class: usize, lo: Option<usize>, hi: Option<usize>) -> f64 {
        let (tp_lo, p_lo) = lo.map_or((0, 0), |j| (self.below[j][class], self.below_all[j]));
        let (tp_hi, p_hi) = hi.map_or((self.support[class], self.n), |j| (self.below[j][class], self.below_all[j]));
        let tp = tp_hi.saturating_sub(tp_lo);
        if tp == 0 {
            return 0.0;
        }
        let predicted = p_hi - p_lo;
        let s = self.support[class];
        (s * tp) as f64 / (s + predicted) as f64
    }
}

/// Finds the candidate 4-tuple with the highest training weighted F1; among
/// equally good tuples the lexicographically smallest wins.
///
/// Each class's F1 depends only on its own interval, so the score is a sum
/// over adjacent threshold pairs and a dynamic program over candidates
/// gives the same optimum as enumerating every monotone tuple.
pub fn fit_thresholds(train: &[(f64, Rating)]) -> Result<ThresholdModel> {
    if train.is_empty() {
        return Err(Error::EmptyInput("threshold training pairs"));
    }
    if train.iter().any(|(r, _)| !(0.0..=1.0).contains(r)) {
        return Err(Error::Config("bad-word ratios must lie in [0, 1]".into()));
    }
    let cands = candidate_thresholds(&train.iter().map(|p| p.0).collect::<Vec<_>>());
    let m = cands.len();
    let pre = Prefix::new(train, &cands);

    // suffix[i][j]: best total for classes i+1..=4 when threshold i+1 sits at cands[j]
    let mut suffix = vec![vec![0.0; m]; 4];
    for j in 0..m {
        suffix[3][j] = pre.term(4, Some(j), None);
    }
    for i in (0..3).rev() {
        for j in 0..m {
            let mut best = f64::NEG_INFINITY;
            for k in j..m {
                best = best.max(pre.term(i + 1, Some(j), Some(k)) + suffix[i + 1][k]);
            }
            suffix[i][j] = best;
        }
    }

    let optimum = (0..m)
        .map(|j| pre.term(0, None, Some(j)) + suffix[0][j])
        .fold(f64::NEG_INFINITY, f64::max);

    // walk forward taking the smallest index that can still reach the optimum
    let mut chosen = [0usize; 4];
    let mut gained = 0.0;
    let mut prev: Option<usize> = None;
    for i in 0..4 {
        let start = prev.unwrap_or(0);
        let pick = (start..m)
            .find(|&j| {
                let step = pre.term(i, prev, Some(j));
                gained + step + suffix[i][j] >= optimum - TIE_EPS
            })
            .expect("the optimum is reachable");
        gained += pre.term(i, prev, Some(pick));
        chosen[i] = pick;
        prev = Some(pick);
    }
    ThresholdModel::new(chosen.map(|j| cands[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::weighted_f1;
    use Rating::*;

    fn brute_force(train: &[(f64, Rating)]) -> (f64, [f64; 4]) {
        let cands = candidate_thresholds(&train.iter().map(|p| p.0).collect::<Vec<_>>());
        let gold: Vec<Rating> = train.iter().map(|p| p.1).collect();
        let mut best = (f64::NEG_INFINITY, [0.0; 4]);
        let m = cands.len();
        for a in 0..m {
            for b in a..m {
                for c in b..m {
                    for d in c..m {
                        let t = [cands[a], cands[b], cands[c], cands[d]];
                        let model = ThresholdModel { thresholds: t };
                        let pred: Vec<Rating> = train.iter().map(|p| model.predict(p.0)).collect();
                        let f = weighted_f1(&gold, &pred).unwrap();
                        if f > best.0 + 1e-12 {
                            best = (f, t);
                        }
                    }
                }
            }
        }
        best
    }

    fn training_f1(model: &ThresholdModel, train: &[(f64, Rating)]) -> f64 {
        let gold: Vec<Rating> = train.iter().map(|p| p.1).collect();
        let pred: Vec<Rating> = train.iter().map(|p| model.predict(p.0)).collect();
        weighted_f1(&gold, &pred).unwrap()
    }

    #[test]
    fn boundaries_are_half_open() {
        let m = ThresholdModel::new([0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(m.predict(0.0), G);
        assert_eq!(m.predict(0.2), PG13);
        assert_eq!(m.predict(1.0), NC17);
        assert_eq!(m.predict(0.399), R);
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let train = vec![
            (0.001, G),
            (0.002, G),
            (0.011, PG),
            (0.012, PG),
            (0.021, PG13),
            (0.031, R),
            (0.032, R),
            (0.041, NC17),
        ];
        let model = fit_thresholds(&train).unwrap();
        assert_eq!(training_f1(&model, &train), 1.0);
    }

    #[test]
    fn matches_enumeration_including_ties() {
        use crate::numerics::rng::rng_for;
        use rand::Rng;
        for seed in 0..40 {
            let mut rng = rng_for(seed, &[]);
            let n = rng.gen_range(1..=12);
            let train: Vec<(f64, Rating)> = (0..n)
                .map(|_| (rng.gen_range(0..8) as f64 / 100.0, Rating::ALL[rng.gen_range(0..5)]))
                .collect();
            let model = fit_thresholds(&train).unwrap();
            let (best, tuple) = brute_force(&train);
            assert!((training_f1(&model, &train) - best).abs() < 1e-12, "seed {seed}");
            assert_eq!(model.thresholds, tuple, "seed {seed}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_thresholds(&[]).is_err());
        assert!(fit_thresholds(&[(1.5, G)]).is_err());
        assert!(ThresholdModel::new([0.3, 0.2, 0.4, 0.5]).is_err());
    }
}
