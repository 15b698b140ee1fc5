#![allow(dead_code)]

use rand::Rng;
use scriptgauge::corpus::{Genre, MovieRecord, Rating};
use scriptgauge::features::Sample;
use scriptgauge::lexicon::EmotionVector;
use scriptgauge::model::{EncoderKind, ModelConfig, RatingClassifier};
use scriptgauge::numerics::rng::rng_for;
use scriptgauge::numerics::Real;
use scriptgauge::text::{EmbeddingTable, GenreVector, TokenSequence, Vocabulary};

pub fn vocab(n: usize) -> Vocabulary {
    Vocabulary::from_words((0..n).map(|i| format!("w{i}"))).unwrap()
}

pub fn small_config(seed: u64) -> ModelConfig {
    ModelConfig {
        seq_len: 6,
        d_emb: 3,
        d_hidden: 4,
        d_dense: 3,
        dropout: 0.0,
        l2_lambda: 1e-3,
        seed,
        ..ModelConfig::default()
    }
}

pub fn model<T: Real>(config: ModelConfig, vocab_words: usize, emb_seed: u64) -> RatingClassifier<T> {
    let v = vocab(vocab_words);
    let emb = EmbeddingTable::random(v.len(), config.d_emb, 1.0, emb_seed);
    RatingClassifier::new(config, v, emb).unwrap()
}

/// Random sample with tokens drawn from the non-reserved vocabulary.
pub fn random_sample(rng: &mut impl Rng, vocab_len: usize, max_len: usize, min_len: usize, id: usize) -> Sample {
    let n = rng.gen_range(min_len..=max_len);
    let tokens: Vec<u32> = (0..n).map(|_| rng.gen_range(1..vocab_len as u32)).collect();
    let mut emotion = [0.0; 10];
    for e in emotion.iter_mut() {
        *e = rng.gen_range(0.0..0.3);
    }
    let mut genre = [false; Genre::COUNT];
    for g in genre.iter_mut() {
        *g = rng.gen_bool(0.2);
    }
    genre[rng.gen_range(0..Genre::COUNT)] = true;
    Sample {
        id: format!("s{id}"),
        sequence: TokenSequence::from_indices(tokens, max_len),
        emotion: Some(EmotionVector(emotion)),
        genre: Some(GenreVector(genre)),
        label: Rating::ALL[rng.gen_range(0..5)],
    }
}

pub fn random_batch(seed: u64, n: usize, vocab_len: usize, max_len: usize, min_len: usize) -> Vec<Sample> {
    let mut rng = rng_for(seed, &[77]);
    (0..n).map(|i| random_sample(&mut rng, vocab_len, max_len, min_len, i)).collect()
}

pub fn record(id: &str, rating: Rating, genres: &[Genre], script: &[&str]) -> MovieRecord {
    MovieRecord {
        id: id.into(),
        title: format!("Title {id}"),
        script: script.iter().map(|s| s.to_string()).collect(),
        genres: genres.to_vec(),
        directors: vec![format!("dir-{id}")],
        rating,
    }
}

pub fn cnn_config(seed: u64) -> ModelConfig {
    ModelConfig {
        encoder: EncoderKind::Cnn,
        cnn_widths: vec![2, 3],
        cnn_filters: 3,
        ..small_config(seed)
    }
}

pub const CLASS_WORDS: [&str; 5] = ["sunshine", "puppy", "darn", "gunfire", "explicit"];
const FILLER: [&str; 8] = ["the", "door", "walk", "night", "table", "city", "morning", "letter"];

/// Files of a small synthetic corpus whose ratings are signalled by one
/// keyword per class.
pub struct Fixture {
    pub corpus: std::path::PathBuf,
    pub embeddings: std::path::PathBuf,
    pub lexicon: std::path::PathBuf,
    pub bad_words: std::path::PathBuf,
    pub records: Vec<MovieRecord>,
}

pub fn write_fixture(dir: &std::path::Path, per_class: usize, seed: u64) -> Fixture {
    let mut rng = rng_for(seed, &[91]);
    let genres = [Genre::Comedy, Genre::Drama, Genre::Action, Genre::Horror, Genre::Family];
    let mut records = Vec::new();
    for (c, rating) in Rating::ALL.iter().enumerate() {
        for k in 0..per_class {
            let mut words: Vec<&str> = (0..6).map(|_| FILLER[rng.gen_range(0..FILLER.len())]).collect();
            let at = rng.gen_range(0..words.len());
            words.insert(at, CLASS_WORDS[c]);
            let line = words.join(" ");
            let mut r = record(&format!("m{c}_{k:02}"), *rating, &[genres[(c + k) % 5]], &[line.as_str(), "the end"]);
            r.directors = vec![format!("director {}", k % 3)];
            records.push(r);
        }
    }
    let corpus = dir.join("corpus.jsonl");
    let text: String = records.iter().map(|r| r.to_json_line() + "\n").collect();
    std::fs::write(&corpus, text).unwrap();

    let embeddings = dir.join("emb.txt");
    let mut emb = String::new();
    for (i, w) in CLASS_WORDS.iter().chain(FILLER.iter()).chain(["end"].iter()).enumerate() {
        let vals: Vec<String> = (0..4).map(|d| format!("{:.3}", ((i * 7 + d * 3) % 11) as f64 / 10.0 - 0.5)).collect();
        emb.push_str(&format!("{w} {}\n", vals.join(" ")));
    }
    std::fs::write(&embeddings, emb).unwrap();

    let lexicon = dir.join("lexicon.tsv");
    std::fs::write(
        &lexicon,
        "sunshine\tjoy\t1\nsunshine\tpositive\t1\npuppy\ttrust\t1\ngunfire\tfear\t1\ngunfire\tnegative\t1\nnight\tfear\t0\n",
    )
    .unwrap();
    let bad_words = dir.join("bad.txt");
    std::fs::write(&bad_words, "# test list\ndarn\ngunfire\nexplicit\n").unwrap();
    Fixture {
        corpus,
        embeddings,
        lexicon,
        bad_words,
        records,
    }
}
