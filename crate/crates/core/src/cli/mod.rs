//! Command-line front end: `split`, `train`, `evaluate`, `predict`,
//! `analyze` and `baseline`.

mod commands;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::model::FORMAT_VERSION;

#[derive(Debug, Parser)]
#[command(name = "scriptgauge", version, about = "Predict age-suitability ratings from movie scripts")]
pub struct Cli {
    /// Worker threads (1 gives bitwise-reproducible runs; results are
    /// identical for any value).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified train/validation/test split of a corpus file.
    Split(SplitArgs),
    /// Train the attention LSTM and save the best checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on one split and write the report tables.
    Evaluate(EvaluateArgs),
    /// Print the predicted rating and class probabilities per record.
    Predict(PredictArgs),
    /// Corpus statistics: class and genre distributions, emotion and
    /// bad-word tables.
    Analyze(AnalyzeArgs),
    /// Fit and evaluate a comparison system.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip malformed lines and duplicate ids instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Word-per-line embedding file.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub emotion_lexicon: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config override, applied last; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory holding train.jsonl and valid.jsonl.
    #[arg(long)]
    pub split_dir: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl SplitName {
    pub fn file_name(self) -> &'static str {
        match self {
            SplitName::Train => "train.jsonl",
            SplitName::Valid => "valid.jsonl",
            SplitName::Test => "test.jsonl",
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub split_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitName,
    #[arg(long)]
    pub emotion_lexicon: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub bad_words: Vec<PathBuf>,
    #[arg(long, default_value_t = crate::eval::DEFAULT_TOP_K)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Records in corpus format.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub emotion_lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub emotion_lexicon: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub bad_words: Vec<PathBuf>,
    #[arg(long, default_value_t = crate::eval::DEFAULT_TOP_K)]
    pub top_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    Threshold,
    Svm,
    Cnn,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub kind: BaselineKind,
    #[arg(long)]
    pub split_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Required for the threshold baseline; adds the bad-word table to
    /// every report.
    #[arg(long, num_args = 1..)]
    pub bad_words: Vec<PathBuf>,
    #[arg(long)]
    pub emotion_lexicon: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// SVM epoch budget per classifier.
    #[arg(long, default_value_t = 100)]
    pub svm_epochs: usize,
    /// Model config for the CNN baseline.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Embeddings for the CNN baseline.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value_t = crate::eval::DEFAULT_TOP_K)]
    pub top_k: usize,
}

/// Parses `args` (program name first) and runs the command, writing
/// command output such as predictions to `out`.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> anyhow::Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args)?;
    execute(cli, &args, out)
}

/// Runs an already parsed command line. `raw` is recorded in run
/// metadata.
pub fn execute(cli: Cli, raw: &[OsString], out: &mut dyn Write) -> anyhow::Result<()> {
    let threads = match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => n,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building the worker pool")?;
    let meta = RunMeta {
        args: raw.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
    };
    let printed = pool.install(|| match cli.command {
        Command::Split(a) => commands::split(&a, &meta).map(|_| String::new()),
        Command::Train(a) => commands::train(&a, &meta).map(|_| String::new()),
        Command::Evaluate(a) => commands::evaluate(&a, &meta).map(|_| String::new()),
        Command::Predict(a) => commands::predict(&a),
        Command::Analyze(a) => commands::analyze(&a, &meta).map(|_| String::new()),
        Command::Baseline(a) => commands::baseline(&a, &meta).map(|_| String::new()),
    })?;
    out.write_all(printed.as_bytes())?;
    Ok(())
}

pub(crate) struct RunMeta {
    args: Vec<String>,
}

impl RunMeta {
    /// Writes `run_meta.txt` into `dir`.
    pub(crate) fn write(&self, dir: &Path, verb: &str, seed: Option<u64>) -> anyhow::Result<()> {
        let mut text = String::new();
        text.push_str(&format!("verb\t{verb}\n"));
        text.push_str(&format!("args\t{}\n", self.args.join(" ")));
        match seed {
            Some(s) => text.push_str(&format!("seed\t{s}\n")),
            None => text.push_str("seed\tnone\n"),
        }
        text.push_str(&format!("scriptgauge_version\t{}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("checkpoint_format\t{FORMAT_VERSION}\n"));
        text.push_str("corpus_format\tjsonl-1\n");
        text.push_str("report_format\ttsv-1\n");
        let path = dir.join("run_meta.txt");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
