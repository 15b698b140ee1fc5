//! Word-emotion lexicon and bad-word list features.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::text::tokenize;
use crate::{Error, Result};

/// The eight emotions followed by the two sentiments, in vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmotionCategory {
    Anger,
    Anticipation,
    Joy,
    Trust,
    Disgust,
    Sadness,
    Surprise,
    Fear,
    Positive,
    Negative,
}

impl EmotionCategory {
    pub const COUNT: usize = 10;
    pub const ALL: [EmotionCategory; 10] = [
        EmotionCategory::Anger,
        EmotionCategory::Anticipation,
        EmotionCategory::Joy,
        EmotionCategory::Trust,
        EmotionCategory::Disgust,
        EmotionCategory::Sadness,
        EmotionCategory::Surprise,
        EmotionCategory::Fear,
        EmotionCategory::Positive,
        EmotionCategory::Negative,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionCategory::Anger => "anger",
            EmotionCategory::Anticipation => "anticipation",
            EmotionCategory::Joy => "joy",
            EmotionCategory::Trust => "trust",
            EmotionCategory::Disgust => "disgust",
            EmotionCategory::Sadness => "sadness",
            EmotionCategory::Surprise => "surprise",
            EmotionCategory::Fear => "fear",
            EmotionCategory::Positive => "positive",
            EmotionCategory::Negative => "negative",
        }
    }

    fn bit(self) -> u16 {
        1 << self.index()
    }
}

impl fmt::Display for EmotionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_lowercase();
        EmotionCategory::ALL
            .iter()
            .copied()
            .find(|c| c.name() == lower)
            .ok_or_else(|| Error::UnknownCategory(s.to_string()))
    }
}

/// Word to emotion-category set, stored as a 10-bit mask per word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmotionLexicon {
    words: HashMap<String, u16>,
}

impl EmotionLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, category: EmotionCategory) {
        *self.words.entry(word.to_lowercase()).or_insert(0) |= category.bit();
    }

    pub fn categories(&self, word: &str) -> Vec<EmotionCategory> {
        let mask = self.words.get(word).copied().unwrap_or(0);
        EmotionCategory::ALL
            .iter()
            .copied()
            .filter(|c| mask & c.bit() != 0)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Proportion of tokens carrying each category. Tokens must already be
    /// normalized by [`tokenize`].
    pub fn emotion_vector<S: AsRef<str>>(&self, tokens: &[S]) -> EmotionVector {
        let mut counts = [0usize; EmotionCategory::COUNT];
        for t in tokens {
            if let Some(&mask) = self.words.get(t.as_ref()) {
                for (i, c) in counts.iter_mut().enumerate() {
                    if mask & (1 << i) != 0 {
                        *c += 1;
                    }
                }
            }
        }
        let total = tokens.len();
        let mut v = [0.0; EmotionCategory::COUNT];
        if total > 0 {
            for (out, &c) in v.iter_mut().zip(&counts) {
                *out = c as f64 / total as f64;
            }
        }
        EmotionVector(v)
    }
}

/// Reads the word-level NRC layout: `word<TAB>category<TAB>0|1`.
pub fn load_emotion_lexicon(path: &Path) -> Result<EmotionLexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_emotion_lexicon(&text)
}

pub fn parse_emotion_lexicon(text: &str) -> Result<EmotionLexicon> {
    let mut lexicon = EmotionLexicon::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let category: EmotionCategory = fields[1].parse().map_err(|e: Error| parse_err(e.to_string()))?;
        match fields[2].trim() {
            "1" => lexicon.insert(fields[0].trim(), category),
            "0" => {}
            other => return Err(parse_err(format!("flag must be 0 or 1, found `{other}`"))),
        }
    }
    Ok(lexicon)
}

/// Per-category token proportions, in [`EmotionCategory::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmotionVector(pub [f64; EmotionCategory::COUNT]);

impl EmotionVector {
    pub fn get(&self, c: EmotionCategory) -> f64 {
        self.0[c.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Offensive words and phrases, stored as space-joined normalized tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadWordList {
    entries: BTreeSet<String>,
    max_tokens: usize,
}

impl BadWordList {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        let mut max_tokens = 0;
        for e in entries {
            let tokens = tokenize(e.as_ref());
            if tokens.is_empty() {
                continue;
            }
            max_tokens = max_tokens.max(tokens.len());
            set.insert(tokens.join(" "));
        }
        if set.is_empty() {
            return Err(Error::EmptyInput("bad word list"));
        }
        Ok(BadWordList {
            entries: set,
            max_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, entry: &str) -> bool {
        self.entries.contains(entry)
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    /// Non-overlapping matches scanning left to right, longest entry first.
    /// Each match is `(start, token_count)`.
    pub fn matches<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        let mut buf = String::new();
        while i < tokens.len() {
            let longest = self.max_tokens.min(tokens.len() - i);
            let mut matched = 0;
            for len in (1..=longest).rev() {
                buf.clear();
                for (k, t) in tokens[i..i + len].iter().enumerate() {
                    if k > 0 {
                        buf.push(' ');
                    }
                    buf.push_str(t.as_ref());
                }
                if self.entries.contains(&buf) {
                    matched = len;
                    break;
                }
            }
            if matched > 0 {
                out.push((i, matched));
                i += matched;
            } else {
                i += 1;
            }
        }
        out
    }

    /// Occurrence count per matched entry.
    pub fn occurrences<S: AsRef<str>>(&self, tokens: &[S]) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for (start, len) in self.matches(tokens) {
            let entry = tokens[start..start + len]
                .iter()
                .map(|t| t.as_ref())
                .collect::<Vec<_>>()
                .join(" ");
            *counts.entry(entry).or_insert(0) += 1;
        }
        counts
    }

    /// Matched occurrences divided by the token count.
    pub fn ratio<S: AsRef<str>>(&self, tokens: &[S]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("token list"));
        }
        Ok(self.matches(tokens).len() as f64 / tokens.len() as f64)
    }
}

/// Union of one-entry-per-line files; `#` lines and blanks are skipped.
pub fn load_bad_words<P: AsRef<Path>>(paths: &[P]) -> Result<BadWordList> {
    let mut lines = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        lines.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase),
        );
    }
    BadWordList::from_entries(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn flag_rule() {
        let lex = parse_emotion_lexicon("abandon\tfear\t1\nabandon\tjoy\t0\n").unwrap();
        assert_eq!(lex.categories("abandon"), vec![EmotionCategory::Fear]);
        let lex = parse_emotion_lexicon("happy\tjoy\t1\nhappy\tpositive\t1\n").unwrap();
        assert_eq!(lex.categories("happy"), vec![EmotionCategory::Joy, EmotionCategory::Positive]);
        assert!(parse_emotion_lexicon("").unwrap().is_empty());
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(parse_emotion_lexicon("a\tfear\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_emotion_lexicon("a\tfear\t1\nb\tfear\t2\n"), Err(Error::Parse { line: 2, .. })));
        let err = parse_emotion_lexicon("a\tboredom\t1\n").unwrap_err();
        assert!(err.to_string().contains("boredom"));
    }

    #[test]
    fn emotion_counts() {
        let lex = parse_emotion_lexicon(
            "happy\tjoy\t1\nhappy\tpositive\t1\ndead\tsadness\t1\ndead\tfear\t1\ndead\tnegative\t1\n",
        )
        .unwrap();
        let v = lex.emotion_vector(&toks("happy happy dead"));
        assert_eq!(v.get(EmotionCategory::Joy), 2.0 / 3.0);
        assert_eq!(v.get(EmotionCategory::Positive), 2.0 / 3.0);
        assert_eq!(v.get(EmotionCategory::Sadness), 1.0 / 3.0);
        assert_eq!(v.get(EmotionCategory::Fear), 1.0 / 3.0);
        assert_eq!(v.get(EmotionCategory::Negative), 1.0 / 3.0);
        for c in [
            EmotionCategory::Anger,
            EmotionCategory::Anticipation,
            EmotionCategory::Trust,
            EmotionCategory::Disgust,
            EmotionCategory::Surprise,
        ] {
            assert_eq!(v.get(c), 0.0);
        }
        assert_eq!(lex.emotion_vector(&toks("nothing here")), EmotionVector::default());
        let doubled = toks("happy happy dead happy happy dead");
        assert_eq!(lex.emotion_vector(&doubled), v);
    }

    #[test]
    fn bad_word_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        fs::write(&a, "a\nb\n").unwrap();
        fs::write(&b, "b\nc\n").unwrap();
        let list = load_bad_words(&[&a, &b]).unwrap();
        assert_eq!(list.entries().collect::<Vec<_>>(), vec!["a", "b", "c"]);

        fs::write(&a, "Fuck\n").unwrap();
        assert!(load_bad_words(&[&a]).unwrap().contains("fuck"));

        let mut f = fs::File::create(&b).unwrap();
        for l in ["# header", "one", "two", "", "three", "# note", "four", "five", "six", "seven"] {
            writeln!(f, "{l}").unwrap();
        }
        drop(f);
        assert_eq!(load_bad_words(&[&b]).unwrap().len(), 7);

        assert!(matches!(load_bad_words(&[dir.path().join("missing")]), Err(Error::Io { .. })));
    }

    #[test]
    fn ratio_and_phrases() {
        let list = BadWordList::from_entries(["damn", "son of a bitch", "bitch"]).unwrap();
        let mut tokens = vec!["word".to_string(); 196];
        tokens.extend(toks("damn damn bitch damn"));
        assert_eq!(list.ratio(&tokens).unwrap(), 0.02);
        assert_eq!(list.ratio(&toks("clean words only")).unwrap(), 0.0);
        assert!(list.ratio::<String>(&[]).is_err());

        let t = toks("you son of a bitch bitch");
        assert_eq!(list.matches(&t), vec![(1, 4), (5, 1)]);
        let occ = list.occurrences(&t);
        assert_eq!(occ["son of a bitch"], 1);
        assert_eq!(occ["bitch"], 1);
    }
}
