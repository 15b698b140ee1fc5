use crate::features::Sample;
use crate::model::{EncoderKind, Encoder, Mode, ModelConfig, RatingClassifier};
use crate::numerics::Real;
use crate::{Error, Result};

/// Convolutional front end that takes the place of LSTM + attention; the
/// fusion and dense stack are shared with the main model.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnConfig {
    pub widths: Vec<usize>,
    pub filters: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            widths: vec![3, 4, 5],
            filters: 100,
        }
    }
}

impl CnnConfig {
    /// `base` with its encoder replaced by this CNN.
    pub fn apply(&self, base: &ModelConfig) -> Result<ModelConfig> {
        let config = ModelConfig {
            encoder: EncoderKind::Cnn,
            cnn_widths: self.widths.clone(),
            cnn_filters: self.filters,
            ..base.clone()
        };
        config.validate()?;
        Ok(config)
    }
}

/// Class probabilities from a CNN-encoded model.
pub fn cnn_forward<T: Real>(model: &RatingClassifier<T>, sample: &Sample, mode: Mode) -> Result<Vec<T>> {
    if !matches!(model.encoder, Encoder::Cnn(_)) {
        return Err(Error::ConfigMismatch("model does not use the CNN encoder".into()));
    }
    Ok(model.forward(sample, mode)?.probs)
}
