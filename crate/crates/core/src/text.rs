//! Tokenization, vocabulary, fixed-length index sequences, pretrained
//! embeddings and genre multi-hot vectors.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;

use crate::corpus::{Genre, MovieRecord};
use crate::numerics::rng::rng_for;
use crate::numerics::{Real, Tensor2};
use crate::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Lowercases, splits on whitespace and trims punctuation from both ends
/// of every token. Internal apostrophes survive (`don't`).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// All tokens of a script, utterance by utterance.
pub fn script_tokens(record: &MovieRecord) -> Vec<String> {
    record.script.iter().flat_map(|u| tokenize(u)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Words in index order starting at index 2.
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Result<Self> {
        let mut all = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut index = HashMap::new();
        for w in words {
            if w == PAD_TOKEN || w == UNK_TOKEN || index.contains_key(&w) {
                return Err(Error::Config(format!("vocabulary word `{w}` is reserved or repeated")));
            }
            index.insert(w.clone(), all.len() as u32);
            all.push(w);
        }
        Ok(Vocabulary { words: all, index })
    }

    /// Frequency-ranked vocabulary over the given (training) records.
    /// Ties in frequency are ordered lexicographically.
    pub fn build(train: &[MovieRecord], min_count: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        let mut freq: HashMap<String, usize> = HashMap::new();
        for r in train {
            for t in script_tokens(r) {
                *freq.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = freq.into_iter().filter(|(_, c)| *c >= min_count.max(1)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_words(ranked.into_iter().map(|(w, _)| w))
    }

    /// Size including PAD and UNK.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 2
    }

    pub fn index_of(&self, word: &str) -> u32 {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, index: u32) -> Option<&str> {
        self.words.get(index as usize).map(String::as_str)
    }

    /// Corpus words (excluding PAD and UNK) with their indices.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.words.iter().enumerate().skip(2).map(|(i, w)| (w.as_str(), i as u32))
    }

    /// `word<TAB>index` lines, PAD and UNK included.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut words = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let (w, idx) = line.rsplit_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected word<TAB>index".into(),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad index `{idx}`"),
            })?;
            if idx != i {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("index {idx} out of order"),
                });
            }
            words.push(w.to_string());
        }
        if words.len() < 2 || words[0] != PAD_TOKEN || words[1] != UNK_TOKEN {
            return Err(Error::Parse {
                line: 1,
                message: "vocabulary must start with the PAD and UNK entries".into(),
            });
        }
        Self::from_words(words.into_iter().skip(2))
    }
}

/// Right-padded vocabulary indices of a fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    indices: Vec<u32>,
    true_length: usize,
}

impl TokenSequence {
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Non-PAD prefix.
    pub fn tokens(&self) -> &[u32] {
        &self.indices[..self.true_length]
    }

    pub fn true_length(&self) -> usize {
        self.true_length
    }

    pub fn max_length(&self) -> usize {
        self.indices.len()
    }

    pub fn from_indices(indices: Vec<u32>, max_length: usize) -> Self {
        let true_length = indices.len().min(max_length);
        let mut indices = indices;
        indices.truncate(max_length);
        indices.resize(max_length, PAD);
        TokenSequence { indices, true_length }
    }
}

/// Keeps the first `max_length` tokens; unknown words map to UNK.
pub fn encode_sequence<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_length: usize) -> TokenSequence {
    assert!(max_length >= 1, "sequence length must be positive");
    let indices = tokens.iter().take(max_length).map(|t| vocab.index_of(t.as_ref())).collect();
    TokenSequence::from_indices(indices, max_length)
}

/// Frozen `V x d` lookup table whose PAD row is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    table: Tensor2<T>,
}

impl<T: Real> EmbeddingTable<T> {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        EmbeddingTable {
            table: Tensor2::zeros(vocab_size, dim),
        }
    }

    pub fn from_tensor(table: Tensor2<T>) -> Result<Self> {
        if table.rows() < 2 {
            return Err(Error::Shape("embedding table needs PAD and UNK rows".into()));
        }
        if table.row(PAD as usize).iter().any(|&v| v != T::zero()) {
            return Err(Error::Shape("PAD embedding row must be zero".into()));
        }
        Ok(EmbeddingTable { table })
    }

    /// Uniform random rows in `[-scale, scale]` for every corpus word; PAD
    /// and UNK stay zero. Used for synthetic experiments without a
    /// pretrained file.
    pub fn random(vocab_size: usize, dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = rng_for(seed, &[0xE3B]);
        let mut table = Tensor2::zeros(vocab_size, dim);
        for r in 2..vocab_size {
            for v in table.row_mut(r) {
                *v = T::lit(rng.gen_range(-scale..=scale));
            }
        }
        EmbeddingTable { table }
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.table.rows()
    }

    pub fn row(&self, index: u32) -> &[T] {
        self.table.row(index as usize)
    }

    pub fn as_tensor(&self) -> &Tensor2<T> {
        &self.table
    }

    pub fn cast<U: Real>(&self) -> EmbeddingTable<U> {
        EmbeddingTable {
            table: self.table.cast(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingCoverage {
    /// Vocabulary words (PAD and UNK excluded) that received a vector.
    pub found: usize,
    pub missing: usize,
}

/// Reads a `word v1 ... vd` text file. Words containing spaces are handled
/// by taking the last `d` fields as the vector. A `count dim` header line
/// is tolerated.
pub fn load_embeddings<T: Real>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
) -> Result<(EmbeddingTable<T>, EmbeddingCoverage)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = EmbeddingTable::zeros(vocab.len(), dim);
    let mut filled = HashSet::new();

    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split(' ').filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        if i == 0 && fields.len() == 2 && dim != 1 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            continue;
        }
        if fields.len() < dim + 1 {
            return Err(Error::DimensionMismatch {
                line: i + 1,
                expected: dim,
                found: fields.len().saturating_sub(1),
            });
        }
        let split = fields.len() - dim;
        let word = fields[..split].join(" ");
        let idx = vocab.index_of(&word);
        if idx == UNK || filled.contains(&idx) {
            continue;
        }
        let row = table.table.row_mut(idx as usize);
        for (slot, raw) in row.iter_mut().zip(&fields[split..]) {
            *slot = raw.parse::<T>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad number `{raw}`"),
            })?;
        }
        filled.insert(idx);
    }

    let corpus_words = vocab.len() - 2;
    let coverage = EmbeddingCoverage {
        found: filled.len(),
        missing: corpus_words - filled.len(),
    };
    Ok((table, coverage))
}

/// Binary indicator per genre, in [`Genre::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenreVector(pub [bool; Genre::COUNT]);

impl GenreVector {
    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn has(&self, g: Genre) -> bool {
        self.0[g.index()]
    }

    pub fn to_values<T: Real>(&self) -> impl Iterator<Item = T> + '_ {
        self.0.iter().map(|&b| if b { T::one() } else { T::zero() })
    }
}

pub fn genre_multi_hot(genres: &[Genre]) -> Result<GenreVector> {
    if genres.is_empty() {
        return Err(Error::EmptyInput("genre set"));
    }
    let mut v = [false; Genre::COUNT];
    for g in genres {
        v[g.index()] = true;
    }
    Ok(GenreVector(v))
}
