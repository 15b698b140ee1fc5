//! Mini-batch training with per-epoch validation and best-checkpoint
//! selection.

use log::{debug, info};

use super::{RatingClassifier, Prediction};
use crate::corpus::Rating;
use crate::eval::weighted_f1;
use crate::features::Sample;
use crate::numerics::rng::{derive_seed, rng_for};
use crate::numerics::{clip_global_norm, Adam, Real};
use crate::{Error, Result};

use rand::seq::SliceRandom;

const SHUFFLE_STREAM: u64 = 0x5_4ff1e;
const DROPOUT_STREAM: u64 = 0xd_0b0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_f1: f64,
    pub valid_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub best: RatingClassifier<T>,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Shuffled mini-batches for one epoch. A trailing batch of one sample is
/// folded into the previous batch so batch statistics are never taken over
/// a single sample.
pub fn epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &[SHUFFLE_STREAM, epoch as u64]));
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size.max(1)).map(|c| c.to_vec()).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let tail = batches.pop().expect("non-empty");
        batches.last_mut().expect("non-empty").extend(tail);
    }
    batches
}

fn score(predictions: &[Prediction], samples: &[Sample]) -> Result<(f64, f64)> {
    let gold: Vec<Rating> = samples.iter().map(|s| s.label).collect();
    let predicted: Vec<Rating> = predictions.iter().map(|p| p.rating).collect();
    let f1 = weighted_f1(&gold, &predicted)?;
    let correct = gold.iter().zip(&predicted).filter(|(g, p)| g == p).count();
    Ok((f1, correct as f64 / gold.len() as f64))
}

/// Runs `config.epochs` epochs of Adam over `train`, scoring `validation`
/// after each one. Returns the parameters of the epoch with the highest
/// validation weighted F1, the earliest such epoch on ties.
pub fn train<T: Real>(
    mut model: RatingClassifier<T>,
    train: &[Sample],
    validation: &[Sample],
) -> Result<TrainOutcome<T>> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let config = model.config().clone();
    let mut adam = Adam::new(config.learning_rate);
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, RatingClassifier<T>)> = None;

    for epoch in 1..=config.epochs {
        let batches = epoch_batches(train.len(), config.batch_size, config.seed, epoch);
        let mut loss_sum = 0.0;
        for (b, indices) in batches.iter().enumerate() {
            let batch: Vec<&Sample> = indices.iter().map(|&i| &train[i]).collect();
            let dropout_seed = derive_seed(config.seed, &[DROPOUT_STREAM, epoch as u64, b as u64]);
            let step = model.backward(&batch, dropout_seed)?;
            let loss = step.loss.to_f64().unwrap_or(f64::NAN);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            loss_sum += loss * batch.len() as f64;
            let mut params = model.parameters_mut();
            clip_global_norm(&mut params, config.clip_norm);
            adam.step(&mut params);
            model.update_running_stats(&step);
        }
        let (valid_f1, valid_accuracy) = score(&model.predict(validation)?, validation)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            valid_f1,
            valid_accuracy,
        };
        debug!("epoch {epoch}: {record:?}");
        history.push(record);
        if best.as_ref().is_none_or(|(_, f1, _)| valid_f1 > *f1) {
            best = Some((epoch, valid_f1, model.clone()));
        }
    }

    let (best_epoch, best_f1, best) = match best {
        Some(b) => b,
        // zero epochs: the untrained model is the only candidate
        None => (0, score(&model.predict(validation)?, validation)?.0, model),
    };
    info!("best validation weighted F1 {best_f1:.4} at epoch {best_epoch}");
    Ok(TrainOutcome {
        best,
        best_epoch,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_every_sample_once() {
        for n in [1, 2, 15, 16, 17, 33] {
            let batches = epoch_batches(n, 16, 3, 1);
            let mut all: Vec<usize> = batches.concat();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            if n > 1 {
                assert!(batches.iter().all(|b| b.len() > 1), "n={n}: {batches:?}");
            }
        }
    }

    #[test]
    fn shuffles_differ_between_epochs() {
        assert_ne!(epoch_batches(40, 40, 0, 1), epoch_batches(40, 40, 0, 2));
        assert_eq!(epoch_batches(40, 8, 9, 4), epoch_batches(40, 8, 9, 4));
    }
}
