//! Turns movie records into model-ready samples.

use crate::corpus::{MovieRecord, Rating};
use crate::lexicon::{EmotionLexicon, EmotionVector};
use crate::text::{encode_sequence, genre_multi_hot, script_tokens, GenreVector, TokenSequence, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub sequence: TokenSequence,
    pub emotion: Option<EmotionVector>,
    pub genre: Option<GenreVector>,
    pub label: Rating,
}

pub struct FeatureExtractor<'a> {
    pub vocab: &'a Vocabulary,
    pub lexicon: Option<&'a EmotionLexicon>,
    pub max_length: usize,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(vocab: &'a Vocabulary, lexicon: Option<&'a EmotionLexicon>, max_length: usize) -> Self {
        FeatureExtractor {
            vocab,
            lexicon,
            max_length,
        }
    }

    /// Emotion proportions are computed over the whole script, not only the
    /// encoded prefix.
    pub fn extract(&self, record: &MovieRecord) -> Result<Sample> {
        let tokens = script_tokens(record);
        if tokens.is_empty() {
            return Err(Error::EmptyScript(record.id.clone()));
        }
        Ok(Sample {
            id: record.id.clone(),
            sequence: encode_sequence(&tokens, self.vocab, self.max_length),
            emotion: self.lexicon.map(|lex| lex.emotion_vector(&tokens)),
            genre: Some(genre_multi_hot(&record.genres)?),
            label: record.rating,
        })
    }

    pub fn extract_all(&self, records: &[MovieRecord]) -> Result<Vec<Sample>> {
        records.iter().map(|r| self.extract(r)).collect()
    }
}
