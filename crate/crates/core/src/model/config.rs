use std::fmt::Write as _;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    /// LSTM followed by additive attention pooling.
    LstmAttention,
    /// Multi-width 1-d convolution with global max pooling.
    Cnn,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::LstmAttention => "lstm",
            EncoderKind::Cnn => "cnn",
        }
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lstm" | "lstm-attention" => Ok(EncoderKind::LstmAttention),
            "cnn" => Ok(EncoderKind::Cnn),
            other => Err(Error::Config(format!("unknown encoder `{other}`"))),
        }
    }
}

/// Hyperparameters and feature switches of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub seq_len: usize,
    pub d_emb: usize,
    pub d_hidden: usize,
    pub d_dense: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub use_emotion: bool,
    pub use_genre: bool,
    pub seed: u64,
    pub encoder: EncoderKind,
    pub cnn_widths: Vec<usize>,
    pub cnn_filters: usize,
    pub clip_norm: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    pub min_count: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            seq_len: 10_000,
            d_emb: 300,
            d_hidden: 256,
            d_dense: 128,
            n_classes: 5,
            dropout: 0.3,
            learning_rate: 1e-5,
            l2_lambda: 1e-4,
            epochs: 200,
            batch_size: 16,
            use_emotion: true,
            use_genre: true,
            seed: 0,
            encoder: EncoderKind::LstmAttention,
            cnn_widths: vec![3, 4, 5],
            cnn_filters: 100,
            clip_norm: 5.0,
            bn_momentum: 0.9,
            bn_eps: 1e-5,
            min_count: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
    }
}

impl ModelConfig {
    /// Width of the vector fed to the first dense layer.
    pub fn fusion_width(&self) -> usize {
        self.encoder_width() + 10 * self.use_emotion as usize + 24 * self.use_genre as usize
    }

    pub fn encoder_width(&self) -> usize {
        match self.encoder {
            EncoderKind::LstmAttention => self.d_hidden,
            EncoderKind::Cnn => self.cnn_widths.len() * self.cnn_filters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must be in [0, 1)");
        }
        if self.n_classes != 5 {
            return fail("n_classes must be 5");
        }
        if [self.seq_len, self.d_emb, self.d_hidden, self.d_dense, self.batch_size].contains(&0) {
            return fail("dimensions and batch size must be positive");
        }
        if self.encoder == EncoderKind::Cnn {
            if self.cnn_widths.is_empty() || self.cnn_filters == 0 || self.cnn_widths.contains(&0) {
                return fail("cnn needs at least one positive width and filter count");
            }
            if self.cnn_widths.iter().any(|&w| w > self.seq_len) {
                return fail("cnn kernel width exceeds sequence length");
            }
        }
        if !(self.learning_rate > 0.0) || self.l2_lambda < 0.0 || !(self.clip_norm > 0.0) {
            return fail("learning_rate and clip_norm must be positive, l2_lambda non-negative");
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || !(self.bn_eps > 0.0) {
            return fail("bn_momentum must be in [0, 1) and bn_eps positive");
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "seq_len" => self.seq_len = parse(key, value)?,
            "d_emb" => self.d_emb = parse(key, value)?,
            "d_hidden" => self.d_hidden = parse(key, value)?,
            "d_dense" => self.d_dense = parse(key, value)?,
            "n_classes" => self.n_classes = parse(key, value)?,
            "dropout" | "dropout_rate" => self.dropout = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "l2_lambda" => self.l2_lambda = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "use_emotion" => self.use_emotion = parse_bool(key, value)?,
            "use_genre" => self.use_genre = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "encoder" => self.encoder = value.parse()?,
            "cnn_widths" => {
                self.cnn_widths = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "cnn_filters" => self.cnn_filters = parse(key, value)?,
            "clip_norm" => self.clip_norm = parse(key, value)?,
            "bn_momentum" => self.bn_momentum = parse(key, value)?,
            "bn_eps" => self.bn_eps = parse(key, value)?,
            "min_count" => self.min_count = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Overlays a flat `key = value` document (`#` comments allowed).
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ModelConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let widths: Vec<String> = self.cnn_widths.iter().map(|w| w.to_string()).collect();
        // {:?} on floats prints the shortest representation that parses back exactly
        let _ = writeln!(s, "seq_len = {}", self.seq_len);
        let _ = writeln!(s, "d_emb = {}", self.d_emb);
        let _ = writeln!(s, "d_hidden = {}", self.d_hidden);
        let _ = writeln!(s, "d_dense = {}", self.d_dense);
        let _ = writeln!(s, "n_classes = {}", self.n_classes);
        let _ = writeln!(s, "dropout = {:?}", self.dropout);
        let _ = writeln!(s, "learning_rate = {:?}", self.learning_rate);
        let _ = writeln!(s, "l2_lambda = {:?}", self.l2_lambda);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "use_emotion = {}", self.use_emotion);
        let _ = writeln!(s, "use_genre = {}", self.use_genre);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "encoder = {}", self.encoder.name());
        let _ = writeln!(s, "cnn_widths = {}", widths.join(","));
        let _ = writeln!(s, "cnn_filters = {}", self.cnn_filters);
        let _ = writeln!(s, "clip_norm = {:?}", self.clip_norm);
        let _ = writeln!(s, "bn_momentum = {:?}", self.bn_momentum);
        let _ = writeln!(s, "bn_eps = {:?}", self.bn_eps);
        let _ = writeln!(s, "min_count = {}", self.min_count);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reported_setup() {
        let c = ModelConfig::default();
        assert_eq!((c.seq_len, c.d_emb, c.d_hidden, c.n_classes), (10_000, 300, 256, 5));
        assert_eq!(c.dropout, 0.3);
        assert_eq!(c.learning_rate, 1e-5);
        assert_eq!(c.fusion_width(), 256 + 10 + 24);
        c.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut c = ModelConfig::default();
        c.learning_rate = 3.7e-4;
        c.encoder = EncoderKind::Cnn;
        c.cnn_widths = vec![2, 3];
        c.use_genre = false;
        assert_eq!(ModelConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn bad_settings() {
        assert!(ModelConfig::from_text("dropout = 1.0").is_err());
        assert!(ModelConfig::from_text("n_classes = 3").is_err());
        assert!(ModelConfig::from_text("bogus = 1").is_err());
        assert!(ModelConfig::from_text("d_hidden = many").is_err());
        assert!(ModelConfig::from_text("encoder = cnn\nseq_len = 2").is_err());
        let c = ModelConfig::from_text("# comment\nd_hidden = 32 # trailing\n\nuse_emotion = false\n").unwrap();
        assert_eq!(c.d_hidden, 32);
        assert_eq!(c.fusion_width(), 32 + 24);
    }
}
