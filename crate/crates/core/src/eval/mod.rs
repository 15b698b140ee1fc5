//! Metrics and analysis tables.

mod analysis;
mod metrics;
mod report;

pub use analysis::{
    attention_word_report, bad_word_table, emotion_by_class, emotion_profile, genre_rating_table, AttentionWords,
    BadWordClass, ErrorGroup, ProfileEntry, DEFAULT_TOP_K,
};
pub use metrics::{accuracy, confusion, per_class_f1, per_genre_f1, weighted_f1, ConfusionMatrix};
pub use report::{build_report, write_bad_word_table, write_report, write_tsv, EvalReport, ReportInputs};
