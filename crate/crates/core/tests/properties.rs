mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use scriptgauge::baselines::{svm_fit, SvmConfig, ThresholdModel};
use scriptgauge::corpus::{stratified_split, Genre, MovieRecord, Rating, SplitRatios};
use scriptgauge::eval::{accuracy, attention_word_report, confusion, per_class_f1, weighted_f1, ErrorGroup};
use scriptgauge::lexicon::{BadWordList, EmotionCategory, EmotionLexicon};
use scriptgauge::model::Mode;
use scriptgauge::text::TokenSequence;

fn ratings(max: usize) -> impl Strategy<Value = Vec<Rating>> {
    proptest::collection::vec((0usize..5).prop_map(|k| Rating::ALL[k]), 1..max)
}

fn corpus_from_sizes(sizes: &[usize]) -> Vec<MovieRecord> {
    let mut out = Vec::new();
    for (c, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            out.push(record(&format!("c{c}_{i}"), Rating::ALL[c], &[Genre::Drama], &["some words here"]));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_and_stratifies(sizes in proptest::collection::vec(prop_oneof![Just(0usize), 3usize..40], 5), seed in any::<u64>()) {
        prop_assume!(sizes.iter().any(|&n| n > 0));
        let corpus = corpus_from_sizes(&sizes);
        let split = stratified_split(&corpus, SplitRatios::default(), seed).unwrap();
        let ids = |rs: &[MovieRecord]| rs.iter().map(|r| r.id.clone()).collect::<BTreeSet<_>>();
        let (a, b, c) = (ids(&split.train), ids(&split.validation), ids(&split.test));
        prop_assert_eq!(a.len() + b.len() + c.len(), corpus.len());
        prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        let all: BTreeSet<_> = a.union(&b).chain(c.iter()).cloned().collect();
        prop_assert_eq!(all, ids(&corpus));
        for (k, &n) in sizes.iter().enumerate().filter(|(_, &n)| n >= 10) {
            let share = |rs: &[MovieRecord]| rs.iter().filter(|r| r.rating.index() == k).count() as f64 / n as f64;
            let nc = n as f64;
            prop_assert!((share(&split.train) - 0.8).abs() <= 2.0 / nc + 1e-12);
            prop_assert!((share(&split.validation) - 0.1).abs() <= 1.0 / nc + 1e-12);
            prop_assert!((share(&split.test) - 0.1).abs() <= 1.0 / nc + 1e-12);
        }
        let again = stratified_split(&corpus, SplitRatios::default(), seed).unwrap();
        prop_assert_eq!(again.test, split.test);
    }

    #[test]
    fn metrics_ignore_joint_permutation(gold in ratings(60), seed in any::<u64>()) {
        let mut rng = scriptgauge::numerics::rng::rng_for(seed, &[]);
        use rand::{seq::SliceRandom, Rng};
        let pred: Vec<Rating> = gold.iter().map(|&g| if rng.gen_bool(0.5) { g } else { Rating::ALL[rng.gen_range(0..5)] }).collect();
        let mut order: Vec<usize> = (0..gold.len()).collect();
        order.shuffle(&mut rng);
        let g2: Vec<Rating> = order.iter().map(|&i| gold[i]).collect();
        let p2: Vec<Rating> = order.iter().map(|&i| pred[i]).collect();
        prop_assert_eq!(confusion(&gold, &pred).unwrap(), confusion(&g2, &p2).unwrap());
        prop_assert!((weighted_f1(&gold, &pred).unwrap() - weighted_f1(&g2, &p2).unwrap()).abs() < 1e-15);
        prop_assert_eq!(accuracy(&gold, &pred).unwrap(), accuracy(&g2, &p2).unwrap());
        prop_assert_eq!(per_class_f1(&gold, &pred).unwrap(), per_class_f1(&g2, &p2).unwrap());
        let cm = confusion(&gold, &pred).unwrap();
        for r in Rating::ALL {
            let row: usize = Rating::ALL.iter().map(|&p| cm.get(r, p)).sum();
            prop_assert_eq!(row, gold.iter().filter(|&&g| g == r).count());
        }
        prop_assert_eq!(weighted_f1(&gold, &gold).unwrap(), 1.0);
    }

    #[test]
    fn threshold_prediction_is_monotone(mut t in proptest::array::uniform4(0.0f64..1.0), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        t.sort_by(f64::total_cmp);
        let m = ThresholdModel::new(t).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.predict(lo) <= m.predict(hi));
    }

    #[test]
    fn emotion_vector_ignores_token_order(words in proptest::collection::vec(0usize..12, 1..60), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut lexicon = EmotionLexicon::new();
        for k in 0..6 {
            lexicon.insert(&format!("w{k}"), EmotionCategory::ALL[k]);
            lexicon.insert(&format!("w{k}"), EmotionCategory::ALL[9 - k]);
        }
        let tokens: Vec<String> = words.iter().map(|k| format!("w{k}")).collect();
        let mut shuffled = tokens.clone();
        shuffled.shuffle(&mut scriptgauge::numerics::rng::rng_for(seed, &[]));
        let v = lexicon.emotion_vector(&tokens);
        prop_assert_eq!(v, lexicon.emotion_vector(&shuffled));
        prop_assert!(v.0.iter().all(|&e| (0.0..=1.0).contains(&e)));
    }

    #[test]
    fn inserting_a_bad_word_adds_one_match(words in proptest::collection::vec(0usize..8, 1..40), at in 0usize..40, which in 0usize..3) {
        let list = BadWordList::from_entries(["w0", "w1", "w2"]).unwrap();
        let tokens: Vec<String> = words.iter().map(|k| format!("w{k}")).collect();
        let before = list.matches(&tokens).len();
        let mut more = tokens.clone();
        more.insert(at.min(tokens.len()), format!("w{which}"));
        prop_assert_eq!(list.matches(&more).len(), before + 1);
        prop_assert!(list.ratio(&more).unwrap() * more.len() as f64 > list.ratio(&tokens).unwrap() * tokens.len() as f64);
    }

    #[test]
    fn error_groups_are_disjoint(gold in ratings(40), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = scriptgauge::numerics::rng::rng_for(seed, &[]);
        let pred: Vec<Rating> = gold.iter().map(|&g| if rng.gen_bool(0.5) { g } else { Rating::ALL[rng.gen_range(0..5)] }).collect();
        let tokens: Vec<Vec<String>> = (0..gold.len()).map(|i| vec![format!("s{i}")]).collect();
        let attention: Vec<Vec<f64>> = vec![vec![1.0]; gold.len()];
        let report = attention_word_report(&tokens, &gold, &pred, &attention, usize::MAX).unwrap();
        for r in Rating::ALL {
            let group = |g: ErrorGroup| -> BTreeSet<String> {
                report.iter().filter(|e| e.rating == r && e.group == g).flat_map(|e| e.words.iter().map(|w| w.0.clone())).collect()
            };
            let (tp, mistaken) = (group(ErrorGroup::TruePositive), group(ErrorGroup::Mistaken));
            prop_assert!(tp.is_disjoint(&mistaken));
            let touched: BTreeSet<String> = (0..gold.len()).filter(|&i| gold[i] == r || pred[i] == r).map(|i| format!("s{i}")).collect();
            let union: BTreeSet<String> = tp.union(&mistaken).cloned().collect();
            prop_assert_eq!(union, touched);
        }
    }

    #[test]
    fn cnn_output_ignores_padding(seed in 0u64..1000, extra in 1usize..30) {
        let m = model::<f64>(cnn_config(seed), 7, seed);
        let s = random_batch(seed, 1, m.vocab().len(), 6, 3).remove(0);
        let mut padded = s.clone();
        padded.sequence = TokenSequence::from_indices(s.sequence.tokens().to_vec(), 6 + extra);
        prop_assert_eq!(m.forward(&s, Mode::Infer).unwrap(), m.forward(&padded, Mode::Infer).unwrap());
    }

    #[test]
    fn lstm_output_ignores_padding(seed in 0u64..1000, extra in 1usize..30) {
        let m = model::<f32>(small_config(seed), 7, seed);
        let s = random_batch(seed, 1, m.vocab().len(), 6, 1).remove(0);
        let mut padded = s.clone();
        padded.sequence = TokenSequence::from_indices(s.sequence.tokens().to_vec(), 6 + extra);
        let a = m.forward(&s, Mode::Infer).unwrap();
        let b = m.forward(&padded, Mode::Infer).unwrap();
        prop_assert_eq!(a.attention, b.attention);
        prop_assert_eq!(a.probs, b.probs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn svm_ignores_training_order(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let dir = tempfile::tempdir().unwrap();
        let fx = write_fixture(dir.path(), 6, seed % 50);
        let split = stratified_split(&fx.records, SplitRatios::default(), 1).unwrap();
        let config = SvmConfig { c_grid: vec![1.0, 100.0], epochs: 10, seed: 3 };
        let a = svm_fit(&split.train, &split.validation, None, &config).unwrap();
        let mut shuffled = split.train.clone();
        shuffled.shuffle(&mut scriptgauge::numerics::rng::rng_for(seed, &[]));
        let b = svm_fit(&shuffled, &split.validation, None, &config).unwrap();
        for r in &split.test {
            let x = a.features.transform(r, None);
            prop_assert_eq!(a.classifier.decision(&x), b.classifier.decision(&b.features.transform(r, None)));
        }
    }
}
