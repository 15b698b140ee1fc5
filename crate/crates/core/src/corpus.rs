//! Movie corpus: data model, line-delimited JSON ingestion, stratified
//! splitting and distribution statistics.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::numerics::rng::rng_for;
use crate::{Error, Result};

const SPLIT_STREAM: u64 = 0x5711;

/// MPAA rating, ordered from most to least suitable for children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rating {
    G,
    PG,
    PG13,
    R,
    NC17,
}

impl Rating {
    pub const COUNT: usize = 5;
    pub const ALL: [Rating; 5] = [Rating::G, Rating::PG, Rating::PG13, Rating::R, Rating::NC17];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Rating> {
        Self::ALL.get(index).copied()
    }

    /// Canonical label used in every file this crate writes.
    pub fn label(self) -> &'static str {
        match self {
            Rating::G => "G",
            Rating::PG => "PG",
            Rating::PG13 => "PG-13",
            Rating::R => "R",
            Rating::NC17 => "NC-17",
        }
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Rating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "G" => Ok(Rating::G),
            "PG" => Ok(Rating::PG),
            "PG-13" | "PG13" => Ok(Rating::PG13),
            "R" => Ok(Rating::R),
            "NC-17" | "NC17" => Ok(Rating::NC17),
            _ => Err(Error::UnknownRating(s.to_string())),
        }
    }
}

macro_rules! genres {
    ($($variant:ident => $label:literal),+ $(,)?) => {
        /// Closed set of genres; the declaration order is the multi-hot order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Genre {
            $($variant),+
        }

        impl Genre {
            pub const ALL: [Genre; 24] = [$(Genre::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $(Genre::$variant => $label),+
                }
            }
        }
    };
}

genres! {
    ScienceFiction => "Science-Fiction",
    Horror => "Horror",
    Crime => "Crime",
    Romance => "Romance",
    News => "News",
    Comedy => "Comedy",
    Thriller => "Thriller",
    Mystery => "Mystery",
    Musical => "Musical",
    Documentary => "Documentary",
    Sport => "Sport",
    Fantasy => "Fantasy",
    Action => "Action",
    Animation => "Animation",
    Adventure => "Adventure",
    History => "History",
    Western => "Western",
    War => "War",
    Short => "Short",
    FilmNoir => "Film-Noir",
    Drama => "Drama",
    Family => "Family",
    Biography => "Biography",
    Music => "Music",
}

impl Genre {
    pub const COUNT: usize = 24;

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        if wanted.eq_ignore_ascii_case("sci-fi") || wanted.eq_ignore_ascii_case("scifi") {
            return Ok(Genre::ScienceFiction);
        }
        if wanted.eq_ignore_ascii_case("film noir") {
            return Ok(Genre::FilmNoir);
        }
        Genre::ALL
            .iter()
            .copied()
            .find(|g| g.label().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::UnknownGenre(s.to_string()))
    }
}

/// One movie: dialogue-only script plus metadata and gold rating.
#[derive(Debug, Clone, PartialEq)]
pub struct MovieRecord {
    pub id: String,
    pub title: String,
    pub script: Vec<String>,
    pub genres: Vec<Genre>,
    pub directors: Vec<String>,
    pub rating: Rating,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    title: String,
    rating: String,
    genres: Vec<String>,
    directors: Vec<String>,
    script: Vec<String>,
}

impl MovieRecord {
    /// The whole script as one string, utterances separated by newlines.
    pub fn script_text(&self) -> String {
        self.script.join("\n")
    }

    fn from_raw(raw: RawRecord) -> Result<Self> {
        let rating = raw.rating.parse()?;
        let mut genres = Vec::with_capacity(raw.genres.len());
        for g in &raw.genres {
            let genre: Genre = g.parse()?;
            if !genres.contains(&genre) {
                genres.push(genre);
            }
        }
        if genres.is_empty() {
            return Err(Error::EmptyInput("genres"));
        }
        if raw.script.iter().all(|u| u.trim().is_empty()) {
            return Err(Error::EmptyInput("script"));
        }
        Ok(MovieRecord {
            id: raw.id,
            title: raw.title,
            script: raw.script,
            genres,
            directors: raw.directors,
            rating,
        })
    }

    fn to_raw(&self) -> RawRecord {
        RawRecord {
            id: self.id.clone(),
            title: self.title.clone(),
            rating: self.rating.label().to_string(),
            genres: self.genres.iter().map(|g| g.label().to_string()).collect(),
            directors: self.directors.clone(),
            script: self.script.clone(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("record serialization cannot fail")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let raw: RawRecord = serde_json::from_str(line)?;
        Self::from_raw(raw)
    }
}

/// Records plus the bookkeeping of a lenient load.
#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub records: Vec<MovieRecord>,
    pub skipped_lines: usize,
    pub duplicate_ids: usize,
}

/// Reads a line-delimited corpus file.
///
/// Strict mode aborts on the first malformed line, duplicate id, or on an
/// empty file. Lenient mode skips malformed lines and keeps the first
/// occurrence of a duplicated id, counting both.
pub fn load_corpus(path: &Path, strict: bool) -> Result<LoadedCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = LoadedCorpus::default();
    let mut seen = HashSet::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = match MovieRecord::from_json_line(&line) {
            Ok(r) => r,
            Err(e) if strict => {
                return Err(Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })
            }
            Err(e) => {
                log::warn!("{}:{line_no}: skipped: {e}", path.display());
                out.skipped_lines += 1;
                continue;
            }
        };
        if !seen.insert(record.id.clone()) {
            if strict {
                return Err(Error::DuplicateId {
                    line: line_no,
                    id: record.id,
                });
            }
            log::warn!("{}:{line_no}: duplicate id `{}` dropped", path.display(), record.id);
            out.duplicate_ids += 1;
            continue;
        }
        out.records.push(record);
    }

    if strict && out.records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(out)
}

pub fn write_corpus(path: &Path, records: &[MovieRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}", r.to_json_line()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidRatios(format!("{parts:?} outside [0, 1]")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidRatios(format!("{parts:?} sum to {sum}")));
        }
        Ok(())
    }

    /// (train, validation, test) member counts for a class of `n` records.
    ///
    /// Validation and test take `floor(ratio * n)` with a minimum of one;
    /// train keeps the remainder.
    pub fn allocate(&self, n: usize) -> (usize, usize, usize) {
        // the epsilon keeps 0.1 * 30 style products from flooring one short
        let share = |r: f64| (((r * n as f64) + 1e-9).floor() as usize).max(1);
        let validation = share(self.validation);
        let test = share(self.test);
        (n - validation - test, validation, test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<MovieRecord>,
    pub validation: Vec<MovieRecord>,
    pub test: Vec<MovieRecord>,
    pub seed: u64,
}

/// Stratifies over the rating. Within each split records keep their
/// original corpus order.
pub fn stratified_split(corpus: &[MovieRecord], ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    ratios.validate()?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); Rating::COUNT];
    for (i, r) in corpus.iter().enumerate() {
        by_class[r.rating.index()].push(i);
    }

    // 0 = train, 1 = validation, 2 = test
    let mut assignment = vec![0u8; corpus.len()];
    for (class, members) in by_class.iter_mut().enumerate() {
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            return Err(Error::SmallClass {
                rating: Rating::ALL[class],
                count: n,
            });
        }
        let mut rng = rng_for(seed, &[SPLIT_STREAM, class as u64]);
        members.shuffle(&mut rng);
        let (train, validation, _) = ratios.allocate(n);
        for (pos, &idx) in members.iter().enumerate() {
            assignment[idx] = if pos < train {
                0
            } else if pos < train + validation {
                1
            } else {
                2
            };
        }
    }

    let pick = |which: u8| -> Vec<MovieRecord> {
        corpus
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| a == which)
            .map(|(r, _)| r.clone())
            .collect()
    };
    Ok(DatasetSplit {
        train: pick(0),
        validation: pick(1),
        test: pick(2),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassDistribution {
    pub ratings: [usize; Rating::COUNT],
    pub genres: [usize; Genre::COUNT],
}

impl ClassDistribution {
    pub fn rating(&self, r: Rating) -> usize {
        self.ratings[r.index()]
    }

    pub fn genre(&self, g: Genre) -> usize {
        self.genres[g.index()]
    }

    pub fn total(&self) -> usize {
        self.ratings.iter().sum()
    }
}

pub fn class_distribution(corpus: &[MovieRecord]) -> ClassDistribution {
    let mut dist = ClassDistribution::default();
    for r in corpus {
        dist.ratings[r.rating.index()] += 1;
        for g in &r.genres {
            dist.genres[g.index()] += 1;
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(id: &str, rating: Rating, genres: &[Genre]) -> MovieRecord {
        MovieRecord {
            id: id.to_string(),
            title: format!("Title {id}"),
            script: vec!["hello there".to_string()],
            genres: genres.to_vec(),
            directors: vec!["Someone".to_string()],
            rating,
        }
    }

    #[test]
    fn rating_synonyms() {
        assert_eq!("PG-13".parse::<Rating>().unwrap(), Rating::PG13);
        assert_eq!("PG13".parse::<Rating>().unwrap(), Rating::PG13);
        assert_eq!("nc-17".parse::<Rating>().unwrap(), Rating::NC17);
        assert_eq!("NC17".parse::<Rating>().unwrap(), Rating::NC17);
        assert!("X".parse::<Rating>().is_err());
        assert!(Rating::G < Rating::PG && Rating::R < Rating::NC17);
    }

    #[test]
    fn genre_set_is_closed() {
        assert_eq!(Genre::ALL.len(), 24);
        for (i, g) in Genre::ALL.iter().enumerate() {
            assert_eq!(g.index(), i);
            assert_eq!(g.label().parse::<Genre>().unwrap(), *g);
        }
        assert_eq!("Sci-Fi".parse::<Genre>().unwrap(), Genre::ScienceFiction);
        assert!(matches!("Telenovela".parse::<Genre>(), Err(Error::UnknownGenre(_))));
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    const FIXTURE: [&str; 3] = [
        r#"{"id":"m1","title":"Tiny Friends","rating":"G","genres":["Animation","Family"],"directors":["A. Director"],"script":["Hello, friend!","Let's play."]}"#,
        r#"{"id":"m2","title":"Summer Camp","rating":"PG","genres":["Comedy"],"directors":[],"script":["Who took my hat?"]}"#,
        r#"{"id":"m3","title":"Night Shift","rating":"R","genres":["Crime","Thriller"],"directors":["B. Director","C. Director"],"script":["Your wife was murdered.","Get down!"]}"#,
    ];

    #[test]
    fn fixture_round_trips_field_by_field() {
        let f = write_lines(&FIXTURE);
        let loaded = load_corpus(f.path(), true).unwrap();
        assert_eq!(loaded.records.len(), 3);
        let ratings: Vec<_> = loaded.records.iter().map(|r| r.rating).collect();
        assert_eq!(ratings, vec![Rating::G, Rating::PG, Rating::R]);
        assert_eq!(loaded.records[0].genres, vec![Genre::Animation, Genre::Family]);
        assert_eq!(loaded.records[2].directors.len(), 2);
        assert_eq!(loaded.records[2].script[0], "Your wife was murdered.");

        for (rec, line) in loaded.records.iter().zip(FIXTURE) {
            assert_eq!(rec.to_json_line(), line);
            assert_eq!(&MovieRecord::from_json_line(&rec.to_json_line()).unwrap(), rec);
        }
    }

    #[test]
    fn empty_file() {
        let f = write_lines(&[]);
        assert!(load_corpus(f.path(), false).unwrap().records.is_empty());
        assert!(matches!(load_corpus(f.path(), true), Err(Error::NoRecords)));
    }

    #[test]
    fn missing_file() {
        let err = load_corpus(Path::new("/nonexistent/corpus.jsonl"), true).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn strict_and_lenient_error_paths() {
        let f = write_lines(&[FIXTURE[0], "{not json", FIXTURE[1], FIXTURE[0]]);
        match load_corpus(f.path(), true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let lenient = load_corpus(f.path(), false).unwrap();
        assert_eq!(lenient.records.len(), 2);
        assert_eq!(lenient.skipped_lines, 1);
        assert_eq!(lenient.duplicate_ids, 1);

        let dup = write_lines(&[FIXTURE[0], FIXTURE[0]]);
        assert!(matches!(load_corpus(dup.path(), true), Err(Error::DuplicateId { line: 2, .. })));

        let bad_genre = FIXTURE[1].replace("Comedy", "Telenovela");
        let f = write_lines(&[&bad_genre]);
        assert!(matches!(load_corpus(f.path(), true), Err(Error::Parse { line: 1, .. })));

        let bad_rating = FIXTURE[1].replace(r#""PG""#, r#""X""#);
        let f = write_lines(&[&bad_rating]);
        let msg = load_corpus(f.path(), true).unwrap_err().to_string();
        assert!(msg.contains("unknown rating"), "{msg}");

        let blank_script = FIXTURE[1].replace("Who took my hat?", "   ");
        let f = write_lines(&[&blank_script]);
        assert!(load_corpus(f.path(), true).is_err());
    }

    #[test]
    fn allocation_rule() {
        let r = SplitRatios::default();
        assert_eq!(r.allocate(14), (12, 1, 1));
        assert_eq!(r.allocate(10), (8, 1, 1));
        assert_eq!(r.allocate(3), (1, 1, 1));
        assert_eq!(r.allocate(92), (74, 9, 9));
        assert_eq!(r.allocate(4030), (3224, 403, 403));
    }

    #[test]
    fn split_single_class_of_ten() {
        let corpus: Vec<_> = (0..10).map(|i| record(&format!("r{i}"), Rating::R, &[Genre::Drama])).collect();
        let split = stratified_split(&corpus, SplitRatios::default(), 3).unwrap();
        assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (8, 1, 1));
    }

    #[test]
    fn split_rejects_tiny_class() {
        let mut corpus: Vec<_> = (0..10).map(|i| record(&format!("r{i}"), Rating::R, &[Genre::Drama])).collect();
        corpus.push(record("g0", Rating::G, &[Genre::Family]));
        corpus.push(record("g1", Rating::G, &[Genre::Family]));
        assert!(matches!(
            stratified_split(&corpus, SplitRatios::default(), 1),
            Err(Error::SmallClass { rating: Rating::G, count: 2 })
        ));
    }

    #[test]
    fn split_rejects_bad_ratios() {
        let corpus: Vec<_> = (0..10).map(|i| record(&format!("r{i}"), Rating::R, &[Genre::Drama])).collect();
        let bad = SplitRatios {
            train: 0.7,
            validation: 0.1,
            test: 0.1,
        };
        assert!(matches!(stratified_split(&corpus, bad, 0), Err(Error::InvalidRatios(_))));
    }

    #[test]
    fn distribution_counts() {
        let empty = class_distribution(&[]);
        assert_eq!(empty.total(), 0);
        assert!(empty.genres.iter().all(|&c| c == 0));

        let corpus = vec![
            record("a", Rating::PG, &[Genre::Drama, Genre::Comedy]),
            record("b", Rating::R, &[Genre::Drama, Genre::Comedy]),
        ];
        let dist = class_distribution(&corpus);
        assert_eq!(dist.genre(Genre::Drama), 2);
        assert_eq!(dist.genre(Genre::Comedy), 2);
        assert_eq!(dist.genre(Genre::Horror), 0);
        assert_eq!(dist.total(), 2);
        assert_eq!(dist.rating(Rating::PG), 1);
    }
}
