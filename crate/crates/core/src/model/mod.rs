//! The rating classifier.
//!
//! Per sample: frozen embedding lookup, an encoder (LSTM + additive
//! attention, or the CNN variant), concatenation with the emotion and
//! genre vectors, then `dense1 -> ReLU -> batch norm -> dropout -> output
//! -> softmax`. Batch normalization couples the samples of a training
//! batch; everything before it runs per sample and in parallel, with
//! gradients reduced in sample order so results do not depend on the
//! thread count.

pub mod attention;
pub mod checkpoint;
pub mod cnn;
pub mod config;
pub mod head;
pub mod lstm;
pub mod train;

pub use attention::Attention;
pub use checkpoint::{load_checkpoint, save_checkpoint, FORMAT_VERSION};
pub use cnn::ConvEncoder;
pub use config::{EncoderKind, ModelConfig};
pub use head::{BatchNorm, Dense};
pub use lstm::Lstm;
pub use train::{train, EpochRecord, TrainOutcome};

use rayon::prelude::*;

use crate::corpus::Rating;
use crate::features::Sample;
use crate::lexicon::EmotionCategory;
use crate::numerics::rng::rng_for;
use crate::numerics::{cross_entropy, softmax, Parameter, Real, Tensor2};
use crate::text::{EmbeddingTable, Vocabulary};
use crate::{Error, Result};

use attention::AttentionCache;
use cnn::ConvCache;
use head::{dropout_mask, BatchNormCache};
use lstm::LstmCache;

const INIT_STREAM: u64 = 0x1417;

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder<T> {
    LstmAttention { lstm: Lstm<T>, attention: Attention<T> },
    Cnn(ConvEncoder<T>),
}

impl<T: Real> Encoder<T> {
    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        match self {
            Encoder::LstmAttention { lstm, attention } => {
                let mut p = lstm.parameters();
                p.extend(attention.parameters());
                p
            }
            Encoder::Cnn(cnn) => cnn.parameters(),
        }
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        match self {
            Encoder::LstmAttention { lstm, attention } => {
                let mut p = lstm.parameters_mut();
                p.extend(attention.parameters_mut());
                p
            }
            Encoder::Cnn(cnn) => cnn.parameters_mut(),
        }
    }

    fn param_count(&self) -> usize {
        match self {
            Encoder::LstmAttention { .. } => Lstm::<T>::PARAMS + Attention::<T>::PARAMS,
            Encoder::Cnn(cnn) => cnn.param_count(),
        }
    }
}

enum EncoderCache<T> {
    Lstm { lstm: LstmCache<T>, attention: AttentionCache<T> },
    Cnn(ConvCache<T>),
}

impl<T: Real> EncoderCache<T> {
    fn output(&self) -> &[T] {
        match self {
            EncoderCache::Lstm { attention, .. } => &attention.pooled,
            EncoderCache::Cnn(c) => &c.pooled,
        }
    }

    fn attention(&self) -> Vec<T> {
        match self {
            EncoderCache::Lstm { attention, .. } => attention.alpha.clone(),
            EncoderCache::Cnn(_) => Vec::new(),
        }
    }
}

/// Everything before batch normalization, for one sample.
struct Trunk<T> {
    cache: EncoderCache<T>,
    fused: Vec<T>,
    pre: Vec<T>,
    act: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch norm; dropout masks drawn from
    /// `dropout_seed` and the sample's position in the batch.
    Train { dropout_seed: u64 },
    /// Running statistics; dropout is the identity.
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward<T> {
    pub logits: Vec<T>,
    pub probs: Vec<T>,
    /// One weight per real token; empty for the CNN encoder.
    pub attention: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub rating: Rating,
    pub probs: [f64; Rating::COUNT],
    pub attention: Vec<f64>,
}

/// Loss and batch-norm statistics of one training batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStep<T> {
    /// mean cross-entropy plus the L2 penalty
    pub loss: T,
    pub data_loss: T,
    pub bn_mean: Vec<T>,
    pub bn_var: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingClassifier<T> {
    config: ModelConfig,
    vocab: Vocabulary,
    embedding: EmbeddingTable<T>,
    pub encoder: Encoder<T>,
    pub dense1: Dense<T>,
    pub batchnorm: BatchNorm<T>,
    pub output: Dense<T>,
}

impl<T: Real> RatingClassifier<T> {
    pub fn new(config: ModelConfig, vocab: Vocabulary, embedding: EmbeddingTable<T>) -> Result<Self> {
        config.validate()?;
        if embedding.dim() != config.d_emb {
            return Err(Error::Shape(format!(
                "embedding dimension {} but config d_emb = {}",
                embedding.dim(),
                config.d_emb
            )));
        }
        if embedding.vocab_size() != vocab.len() {
            return Err(Error::Shape(format!(
                "embedding has {} rows for a vocabulary of {}",
                embedding.vocab_size(),
                vocab.len()
            )));
        }
        let mut rng = rng_for(config.seed, &[INIT_STREAM]);
        let encoder = match config.encoder {
            EncoderKind::LstmAttention => Encoder::LstmAttention {
                lstm: Lstm::new(config.d_emb, config.d_hidden, &mut rng),
                attention: Attention::new(config.d_hidden, config.d_hidden, &mut rng),
            },
            EncoderKind::Cnn => Encoder::Cnn(ConvEncoder::new(
                config.d_emb,
                &config.cnn_widths,
                config.cnn_filters,
                &mut rng,
            )),
        };
        let dense1 = Dense::new("dense1", config.fusion_width(), config.d_dense, &mut rng);
        let batchnorm = BatchNorm::new(config.d_dense, config.bn_momentum, config.bn_eps);
        let output = Dense::new("output", config.d_dense, config.n_classes, &mut rng);
        Ok(RatingClassifier {
            config,
            vocab,
            embedding,
            encoder,
            dense1,
            batchnorm,
            output,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn embedding(&self) -> &EmbeddingTable<T> {
        &self.embedding
    }

    /// Trainable parameters in a fixed order: encoder, dense1, batch-norm
    /// affine terms, output layer.
    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        let mut p = self.encoder.parameters();
        p.extend([
            &self.dense1.w,
            &self.dense1.b,
            &self.batchnorm.gamma,
            &self.batchnorm.beta,
            &self.output.w,
            &self.output.b,
        ]);
        p
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut p = self.encoder.parameters_mut();
        p.extend([
            &mut self.dense1.w,
            &mut self.dense1.b,
            &mut self.batchnorm.gamma,
            &mut self.batchnorm.beta,
            &mut self.output.w,
            &mut self.output.b,
        ]);
        p
    }

    /// `λ Σ ‖W‖²` over weight matrices only.
    pub fn l2_penalty(&self) -> T {
        let total: T = self
            .parameters()
            .iter()
            .filter(|p| p.decay)
            .map(|p| p.value.sum_squares())
            .sum();
        T::lit(self.config.l2_lambda) * total
    }

    /// Same model in another precision.
    pub fn cast<U: Real>(&self) -> RatingClassifier<U> {
        let cast_dense = |d: &Dense<T>| Dense {
            w: d.w.cast(),
            b: d.b.cast(),
        };
        let encoder = match &self.encoder {
            Encoder::LstmAttention { lstm, attention } => Encoder::LstmAttention {
                lstm: Lstm {
                    w_input: lstm.w_input.cast(),
                    w_recurrent: lstm.w_recurrent.cast(),
                    bias: lstm.bias.cast(),
                },
                attention: Attention {
                    w: attention.w.cast(),
                    b: attention.b.cast(),
                    v: attention.v.cast(),
                },
            },
            Encoder::Cnn(cnn) => Encoder::Cnn(ConvEncoder {
                layers: cnn
                    .layers
                    .iter()
                    .map(|l| cnn::ConvLayer {
                        width: l.width,
                        w: l.w.cast(),
                        b: l.b.cast(),
                    })
                    .collect(),
            }),
        };
        RatingClassifier {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            embedding: self.embedding.cast(),
            encoder,
            dense1: cast_dense(&self.dense1),
            batchnorm: BatchNorm {
                gamma: self.batchnorm.gamma.cast(),
                beta: self.batchnorm.beta.cast(),
                running_mean: self.batchnorm.running_mean.cast(),
                running_var: self.batchnorm.running_var.cast(),
                momentum: self.batchnorm.momentum,
                eps: self.batchnorm.eps,
            },
            output: cast_dense(&self.output),
        }
    }

    fn check_sample(&self, s: &Sample) -> Result<()> {
        let n = s.sequence.true_length();
        if n == 0 {
            return Err(Error::EmptyScript(s.id.clone()));
        }
        let vocab = self.vocab.len() as u32;
        if s.sequence.tokens().iter().any(|&i| i >= vocab) {
            return Err(Error::Shape(format!(
                "sample `{}` has token indices outside the model vocabulary",
                s.id
            )));
        }
        if self.config.use_emotion && s.emotion.is_none() {
            return Err(Error::ConfigMismatch(format!(
                "model uses emotion features but sample `{}` has none",
                s.id
            )));
        }
        if self.config.use_genre && s.genre.is_none() {
            return Err(Error::ConfigMismatch(format!(
                "model uses genre features but sample `{}` has none",
                s.id
            )));
        }
        if let Encoder::Cnn(cnn) = &self.encoder {
            if n < cnn.max_width() {
                return Err(Error::Shape(format!(
                    "sample `{}` has {n} tokens, fewer than the widest kernel ({})",
                    s.id,
                    cnn.max_width()
                )));
            }
        }
        Ok(())
    }

    fn trunk(&self, s: &Sample) -> Trunk<T> {
        let tokens = s.sequence.tokens();
        let cache = match &self.encoder {
            Encoder::LstmAttention { lstm, attention } => {
                let l = lstm.forward(&self.embedding, tokens);
                let a = attention.forward(&l.hiddens, l.steps);
                EncoderCache::Lstm { lstm: l, attention: a }
            }
            Encoder::Cnn(cnn) => EncoderCache::Cnn(cnn.forward(&self.embedding, tokens)),
        };
        let mut fused = cache.output().to_vec();
        if self.config.use_emotion {
            let e = s.emotion.as_ref().expect("checked by check_sample");
            fused.extend(e.as_slice().iter().map(|&v| T::lit(v)));
        }
        if self.config.use_genre {
            let g = s.genre.as_ref().expect("checked by check_sample");
            fused.extend(g.to_values::<T>());
        }
        let pre = self.dense1.forward(&fused);
        let act = pre.iter().map(|&v| crate::numerics::relu(v)).collect();
        Trunk { cache, fused, pre, act }
    }

    /// Gradients of the encoder and dense1 parameters for one sample,
    /// given dL/d(ReLU output).
    fn trunk_backward(&self, s: &Sample, trunk: &Trunk<T>, d_act: &[T]) -> Vec<Tensor2<T>> {
        let e = self.encoder.param_count();
        let params = self.parameters();
        let mut grads: Vec<Tensor2<T>> = params[..e + 2]
            .iter()
            .map(|p| Tensor2::zeros(p.value.rows(), p.value.cols()))
            .collect();

        let d_pre: Vec<T> = d_act
            .iter()
            .zip(&trunk.pre)
            .map(|(&d, &p)| if p > T::zero() { d } else { T::zero() })
            .collect();
        let mut d_fused = vec![T::zero(); trunk.fused.len()];
        self.dense1
            .backward(&trunk.fused, &d_pre, &mut grads[e..e + 2], Some(&mut d_fused));
        let d_enc = &d_fused[..self.config.encoder_width()];

        let tokens = s.sequence.tokens();
        match (&self.encoder, &trunk.cache) {
            (Encoder::LstmAttention { lstm, attention }, EncoderCache::Lstm { lstm: lc, attention: ac }) => {
                let (lg, ag) = grads[..e].split_at_mut(Lstm::<T>::PARAMS);
                let d_hiddens = attention.backward(&lc.hiddens, ac, d_enc, ag);
                lstm.backward(&self.embedding, tokens, lc, &d_hiddens, lg);
            }
            (Encoder::Cnn(cnn), EncoderCache::Cnn(cc)) => {
                cnn.backward(&self.embedding, tokens, cc, d_enc, &mut grads[..e]);
            }
            _ => unreachable!("encoder and cache kinds always match"),
        }
        grads
    }

    fn head_infer(&self, trunk: &Trunk<T>) -> Forward<T> {
        let y = self.batchnorm.forward_infer(&trunk.act);
        let logits = self.output.forward(&y);
        let probs = softmax(&logits);
        Forward {
            logits,
            probs,
            attention: trunk.cache.attention(),
        }
    }

    /// Forward pass for a single sample. In train mode the sample forms a
    /// batch of one.
    pub fn forward(&self, sample: &Sample, mode: Mode) -> Result<Forward<T>> {
        Ok(self.forward_batch(&[sample], mode)?.remove(0))
    }

    pub fn forward_batch(&self, batch: &[&Sample], mode: Mode) -> Result<Vec<Forward<T>>> {
        match mode {
            Mode::Infer => {
                for s in batch {
                    self.check_sample(s)?;
                }
                Ok(batch.par_iter().map(|s| self.head_infer(&self.trunk(s))).collect())
            }
            Mode::Train { dropout_seed } => Ok(self.train_pass(batch, dropout_seed, false)?.forwards),
        }
    }

    /// Train-mode loss without gradients.
    pub fn loss(&self, batch: &[&Sample], dropout_seed: u64) -> Result<T> {
        Ok(self.train_pass(batch, dropout_seed, false)?.step.loss)
    }

    /// Train-mode forward and backward over `batch`. Every parameter's
    /// gradient is overwritten with dL/dθ for the batch loss.
    pub fn backward(&mut self, batch: &[&Sample], dropout_seed: u64) -> Result<BatchStep<T>> {
        let pass = self.train_pass(batch, dropout_seed, true)?;
        let grads = pass.grads.expect("requested");
        for (p, g) in self.parameters_mut().into_iter().zip(grads) {
            p.grad = g;
        }
        Ok(pass.step)
    }

    fn train_pass(&self, batch: &[&Sample], dropout_seed: u64, want_grads: bool) -> Result<TrainPass<T>> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        for s in batch {
            self.check_sample(s)?;
        }
        let n = batch.len();
        let inv_n = T::one() / T::lit(n as f64);
        let trunks: Vec<Trunk<T>> = batch.par_iter().map(|s| self.trunk(s)).collect();
        let acts: Vec<Vec<T>> = trunks.iter().map(|t| t.act.clone()).collect();
        let (normed, bn_cache) = self.batchnorm.forward_train(&acts);

        let mut masks = Vec::with_capacity(n);
        let mut dropped = Vec::with_capacity(n);
        let mut forwards = Vec::with_capacity(n);
        let mut data_loss = T::zero();
        for (i, (y, s)) in normed.iter().zip(batch).enumerate() {
            let mask: Vec<T> = dropout_mask(y.len(), self.config.dropout, &mut rng_for(dropout_seed, &[i as u64]));
            let yd: Vec<T> = y.iter().zip(&mask).map(|(&a, &m)| a * m).collect();
            let logits = self.output.forward(&yd);
            let probs = softmax(&logits);
            data_loss += cross_entropy(&probs, s.label.index());
            forwards.push(Forward {
                logits,
                probs,
                attention: trunks[i].cache.attention(),
            });
            masks.push(mask);
            dropped.push(yd);
        }
        data_loss *= inv_n;
        let step = BatchStep {
            loss: data_loss + self.l2_penalty(),
            data_loss,
            bn_mean: bn_cache.mean.clone(),
            bn_var: bn_cache.var.clone(),
        };

        let grads = if want_grads {
            Some(self.gradients(batch, &trunks, &bn_cache, &masks, &dropped, &forwards, inv_n))
        } else {
            None
        };
        Ok(TrainPass { step, forwards, grads })
    }

    #[allow(clippy::too_many_arguments)]
    fn gradients(
        &self,
        batch: &[&Sample],
        trunks: &[Trunk<T>],
        bn_cache: &BatchNormCache<T>,
        masks: &[Vec<T>],
        dropped: &[Vec<T>],
        forwards: &[Forward<T>],
        inv_n: T,
    ) -> Vec<Tensor2<T>> {
        let e = self.encoder.param_count();
        let mut grads: Vec<Tensor2<T>> = self
            .parameters()
            .iter()
            .map(|p| Tensor2::zeros(p.value.rows(), p.value.cols()))
            .collect();

        let mut d_normed = Vec::with_capacity(batch.len());
        for (i, s) in batch.iter().enumerate() {
            let mut d_logits: Vec<T> = forwards[i].probs.iter().map(|&p| p * inv_n).collect();
            d_logits[s.label.index()] -= inv_n;
            let mut d_dropped = vec![T::zero(); dropped[i].len()];
            self.output
                .backward(&dropped[i], &d_logits, &mut grads[e + 4..e + 6], Some(&mut d_dropped));
            d_normed.push(d_dropped.iter().zip(&masks[i]).map(|(&d, &m)| d * m).collect::<Vec<T>>());
        }
        let d_acts = self.batchnorm.backward(bn_cache, &d_normed, &mut grads[e + 2..e + 4]);

        let per_sample: Vec<Vec<Tensor2<T>>> = batch
            .par_iter()
            .zip(trunks.par_iter())
            .zip(d_acts.par_iter())
            .map(|((s, t), d)| self.trunk_backward(s, t, d))
            .collect();
        for sample_grads in &per_sample {
            for (g, sg) in grads.iter_mut().zip(sample_grads) {
                g.axpy(T::one(), sg);
            }
        }

        let two_lambda = T::lit(2.0 * self.config.l2_lambda);
        for (g, p) in grads.iter_mut().zip(self.parameters()) {
            if p.decay {
                g.axpy(two_lambda, &p.value);
            }
        }
        grads
    }

    pub fn update_running_stats(&mut self, step: &BatchStep<T>) {
        self.batchnorm.update_running(&step.bn_mean, &step.bn_var);
    }

    /// Inference over many samples; the predicted class is the argmax,
    /// ties going to the lower rating.
    pub fn predict(&self, samples: &[Sample]) -> Result<Vec<Prediction>> {
        for s in samples {
            self.check_sample(s)?;
        }
        Ok(samples
            .par_iter()
            .map(|s| {
                let f = self.head_infer(&self.trunk(s));
                let mut probs = [0.0; Rating::COUNT];
                for (p, v) in probs.iter_mut().zip(&f.probs) {
                    *p = v.to_f64().unwrap_or(f64::NAN);
                }
                let best = argmax(&f.probs);
                Prediction {
                    id: s.id.clone(),
                    rating: Rating::ALL[best],
                    probs,
                    attention: f.attention.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect(),
                }
            })
            .collect())
    }

    /// Features a caller must provide for this model, as
    /// `(emotion, genre)`.
    pub fn required_features(&self) -> (bool, bool) {
        (self.config.use_emotion, self.config.use_genre)
    }

    /// Fails with a config mismatch when the pipeline cannot supply a
    /// feature the model was trained with.
    pub fn check_pipeline(&self, has_emotion: bool, has_genre: bool) -> Result<()> {
        if self.config.use_emotion && !has_emotion {
            return Err(Error::ConfigMismatch(
                "model was trained with emotion features; an emotion lexicon is required".into(),
            ));
        }
        if self.config.use_genre && !has_genre {
            return Err(Error::ConfigMismatch(
                "model was trained with genre features; genre vectors are required".into(),
            ));
        }
        Ok(())
    }
}

struct TrainPass<T> {
    step: BatchStep<T>,
    forwards: Vec<Forward<T>>,
    grads: Option<Vec<Tensor2<T>>>,
}

pub(crate) fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Names of the emotion components in vector order, for reports.
pub fn emotion_names() -> [&'static str; EmotionCategory::COUNT] {
    EmotionCategory::ALL.map(|c| c.name())
}

/// Adapts a model and a fixed batch to the gradient checker. The dropout
/// seed is held fixed so every evaluation sees the same masks.
pub struct BatchObjective<'a> {
    pub model: &'a mut RatingClassifier<f64>,
    pub batch: Vec<&'a Sample>,
    pub dropout_seed: u64,
}

impl crate::numerics::Objective for BatchObjective<'_> {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
        self.model.parameters_mut()
    }

    fn evaluate(&mut self, with_grad: bool) -> f64 {
        let result = if with_grad {
            self.model.backward(&self.batch, self.dropout_seed).map(|s| s.loss)
        } else {
            self.model.loss(&self.batch, self.dropout_seed)
        };
        result.expect("batch was validated before the check")
    }
}
