//! Command-line front end: `pretrain`, `train`, `tag`, `eval`, `inspect`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    build_vocabulary, merged_languages, read_corpus, write_corpus, Corpus, Granularity, LabelSet,
    Normalizer, Schema, Sentence, TagSet, Token,
};
use crate::embeddings::{pretrain_skipgram, write_text_embeddings, SkipgramConfig, TextEmbeddings};
use crate::error::{Error, Result};
use crate::eval::score;
use crate::models::{inspect_bytes, CellKind, ModelConfig, TaggerModel};
use crate::numerics::SeededRng;
use crate::training::{format_epoch_log, TrainConfig, Trainer};
use crate::Tagger;

#[derive(Debug, Parser)]
#[command(
    name = "cmtag",
    version,
    about = "Windowed recurrent POS tagger for code-mixed social-media text",
    after_help = "Every subcommand accepts --config FILE: flat key=value lines (# starts a comment) \
                  using the long flag names. Flags given on the command line override the file."
)]
pub struct Cli {
    /// Log progress to stderr [default: off].
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pre-train skip-gram word vectors and write them in word2vec text format.
    Pretrain(PretrainArgs),
    /// Train a tagger and write the best-dev checkpoint.
    Train(TrainArgs),
    /// Tag a corpus with a trained model.
    Tag(TagArgs),
    /// Score predicted tags against gold tags.
    Eval(EvalArgs),
    /// Describe a model file and verify its checksum.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PretrainArgs {
    /// Training corpus (its surface forms are the pre-training text).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Column layout of the corpus.
    #[arg(long, default_value = "surface,lang,tag")]
    pub schema: Schema,
    /// Additional raw text, one whitespace-tokenized sentence per line [default: none].
    #[arg(long)]
    pub extra_text: Option<PathBuf>,
    /// Output embedding file.
    #[arg(long)]
    pub output: PathBuf,
    /// Summary log file [default: <output>.log].
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Vector dimensionality.
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    /// Context words on each side.
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    /// Negative samples per context word.
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    /// Passes over the text.
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Initial learning rate (decays linearly).
    #[arg(long, default_value_t = 0.025)]
    pub learning_rate: f64,
    /// Frequent-word subsampling threshold (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub subsample: f64,
    /// Minimum word frequency for a vector.
    #[arg(long, default_value_t = 1)]
    pub min_freq: usize,
    /// Replacement token for hashtags.
    #[arg(long, default_value = crate::corpus::DEFAULT_HASHTAG_TOKEN)]
    pub hashtag_token: String,
    /// Random seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Training corpus.
    #[arg(long)]
    pub train: PathBuf,
    /// Development corpus for checkpoint selection [default: none, keep the last epoch].
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Column layout of the corpora.
    #[arg(long, default_value = "surface,lang,tag")]
    pub schema: Schema,
    /// Tagset granularity recorded in the model (coarse or fine).
    #[arg(long, default_value = "coarse", value_parser = parse_granularity)]
    pub granularity: Granularity,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Epoch log file [default: <model>.epochs.tsv].
    #[arg(long)]
    pub epoch_log: Option<PathBuf>,
    /// Write 0 in the epoch log's seconds column so logs of repeated runs compare byte for byte [default: off].
    #[arg(long)]
    pub no_timing: bool,
    /// Recurrent cell: elman, lstm, deep-lstm or gru.
    #[arg(long, default_value = "gru")]
    pub cell: CellKind,
    /// Pre-trained word vectors (word2vec text) [default: none, random init].
    #[arg(long)]
    pub pretrained: Option<PathBuf>,
    /// Feed language-label embeddings alongside word embeddings [default: off].
    #[arg(long)]
    pub lang_feature: bool,
    /// Word embedding dimensionality.
    #[arg(long, default_value_t = 100)]
    pub word_dim: usize,
    /// Hidden layer size.
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    /// Upper layer size of deep-lstm.
    #[arg(long, default_value_t = 100)]
    pub upper_hidden: usize,
    /// Context window width (odd).
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Language embedding dimensionality.
    #[arg(long, default_value_t = 16)]
    pub lang_dim: usize,
    /// Minimum training frequency for a vocabulary entry.
    #[arg(long, default_value_t = 1)]
    pub min_freq: usize,
    /// Training epochs.
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    /// Truncated BPTT depth.
    #[arg(long, default_value_t = 7)]
    pub bptt: usize,
    /// Adadelta decay rate.
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    /// Adadelta epsilon.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Global gradient-norm clip [default: none].
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Replacement token for hashtags.
    #[arg(long, default_value = crate::corpus::DEFAULT_HASHTAG_TOKEN)]
    pub hashtag_token: String,
    /// Random seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TagArgs {
    /// Model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus to tag; a tag column, if present, is replaced.
    #[arg(long)]
    pub input: PathBuf,
    /// Column layout of the input.
    #[arg(long, default_value = "surface,lang")]
    pub schema: Schema,
    /// Output corpus (surface, lang if present, predicted tag).
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    /// Gold corpus.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted corpus.
    #[arg(long)]
    pub predicted: PathBuf,
    /// Column layout of both corpora.
    #[arg(long, default_value = "surface,lang,tag")]
    pub schema: Schema,
    /// Human-readable report [default: <predicted>.report.txt].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Machine-readable key=value report [default: <predicted>.report.kv].
    #[arg(long)]
    pub kv: Option<PathBuf>,
    /// Number of confusion pairs to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct InspectArgs {
    /// Model file.
    pub model: PathBuf,
}

fn parse_granularity(s: &str) -> std::result::Result<Granularity, String> {
    match s.to_ascii_lowercase().as_str() {
        "coarse" | "cg" => Ok(Granularity::Coarse),
        "fine" | "fg" => Ok(Granularity::Fine),
        _ => Err(format!(
            "invalid granularity {s:?}; expected coarse or fine"
        )),
    }
}

/// Exit status for user and configuration errors.
pub const EXIT_USER: i32 = 1;
/// Exit status for internal failures.
pub const EXIT_INTERNAL: i32 = 2;

/// Replaces `--config FILE` with the file's settings, placed right after
/// the subcommand so later command-line flags win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let pos = args.iter().position(|a| {
        a.to_str()
            .is_some_and(|s| s == "--config" || s.starts_with("--config="))
    });
    let Some(pos) = pos else {
        return Ok(args);
    };
    let mut args = args;
    let flag = args.remove(pos).into_string().unwrap_or_default();
    let path = match flag.strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => {
            if pos >= args.len() {
                return Err(Error::Config("--config needs a file path".into()));
            }
            PathBuf::from(args.remove(pos))
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut inserted = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            source_name: path.display().to_string(),
            line: i + 1,
            message: format!("expected key=value, found {line:?}"),
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match value {
            "true" => inserted.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                inserted.push(OsString::from(format!("--{key}")));
                inserted.push(OsString::from(value));
            }
        }
    }
    // Settings go after the subcommand name, the first non-flag argument.
    let sub = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(args.len(), |p| p + 2);
    let tail = args.split_off(sub.min(args.len()));
    args.extend(inserted);
    args.extend(tail);
    Ok(args)
}

/// Parses and runs a command line; returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USER;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return 0;
                }
                _ => e.render().to_string(),
            };
            let _ = write!(err, "{shown}");
            return EXIT_USER;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USER
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Pretrain(a) => cmd_pretrain(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Tag(a) => cmd_tag(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
    }
}

/// `path` with `.ext` appended to the full file name.
fn suffixed(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Raw text, one sentence per line, tokens split on whitespace.
fn read_raw_text(path: &Path) -> Result<Vec<Sentence>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Sentence::new(l.split_whitespace().map(Token::new).collect()))
        .collect())
}

pub fn cmd_pretrain(a: &PretrainArgs, out: &mut dyn Write) -> Result<()> {
    let normalizer = Normalizer::with_hashtag_token(&a.hashtag_token)?;
    let mut corpus = read_corpus(&a.corpus, a.schema, None)?;
    if corpus.sentences.is_empty() {
        return Err(Error::NoSentences(a.corpus.display().to_string()));
    }
    if let Some(extra) = &a.extra_text {
        corpus.sentences.extend(read_raw_text(extra)?);
    }
    let cfg = SkipgramConfig {
        dim: a.dim,
        radius: a.radius,
        negatives: a.negatives,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        subsample: a.subsample,
    };
    let vocab = build_vocabulary(&corpus, a.min_freq, &normalizer);
    let mut rng = SeededRng::new(a.seed).substream("pretrain");
    let table = pretrain_skipgram::<f32>(&corpus, &vocab, &normalizer, &cfg, &mut rng)?;
    write_text_embeddings(&table, &vocab, &a.output)?;
    let summary = format!(
        "sentences\t{}\ntokens\t{}\nvectors\t{}\ndim\t{}\nseed\t{}\n",
        corpus.sentence_count(),
        corpus.token_count(),
        vocab.len() - crate::corpus::RESERVED.len(),
        a.dim,
        a.seed
    );
    write_file(
        &a.log.clone().unwrap_or_else(|| suffixed(&a.output, "log")),
        &summary,
    )?;
    let _ = writeln!(
        out,
        "wrote {} vectors of dimension {} to {}",
        vocab.len() - crate::corpus::RESERVED.len(),
        a.dim,
        a.output.display()
    );
    Ok(())
}

pub fn model_config(a: &TrainArgs) -> ModelConfig {
    ModelConfig {
        cell: a.cell,
        word_dim: a.word_dim,
        hidden: a.hidden,
        window: a.window,
        num_tags: 1,
        lang_feature: a.lang_feature,
        lang_dim: a.lang_dim,
        upper_hidden: a.upper_hidden,
    }
}

pub fn train_config(a: &TrainArgs) -> TrainConfig {
    TrainConfig {
        epochs: a.epochs,
        bptt: a.bptt,
        rho: a.rho,
        epsilon: a.epsilon,
        seed: a.seed,
        clip_norm: a.clip_norm,
    }
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let tcfg = train_config(a);
    tcfg.validate()?;
    let mut cfg = model_config(a);
    cfg.num_tags = 1;
    cfg.validate()?;
    let normalizer = Normalizer::with_hashtag_token(&a.hashtag_token)?;
    let mut train = read_corpus(&a.train, a.schema, None)?;
    if train.sentences.is_empty() {
        return Err(Error::NoSentences(a.train.display().to_string()));
    }
    let mut dev = a
        .dev
        .as_ref()
        .map(|p| read_corpus(p, a.schema, None))
        .transpose()?;
    if a.lang_feature && !train.has_languages() {
        return Err(Error::Config(format!(
            "--lang-feature needs a language column, but {} has none (schema {})",
            a.train.display(),
            a.schema
        )));
    }
    // Model inventories cover both splits so dev always encodes.
    let corpora: Vec<&Corpus> = std::iter::once(&train).chain(dev.as_ref()).collect();
    let tagset = TagSet {
        granularity: a.granularity,
        labels: LabelSet::sorted(
            corpora
                .iter()
                .flat_map(|c| c.tagset.labels.labels().iter().cloned()),
        ),
    };
    let languages = merged_languages(corpora);
    for c in std::iter::once(&mut train).chain(dev.as_mut()) {
        c.tagset = tagset.clone();
        c.languages = languages.clone();
    }
    let pretrained = a
        .pretrained
        .as_ref()
        .map(|p| TextEmbeddings::read(p))
        .transpose()?;
    let mut init = SeededRng::new(a.seed).substream("init");
    let model = TaggerModel::<f32>::for_corpus(
        cfg,
        &train,
        normalizer,
        a.min_freq,
        pretrained.as_ref(),
        &mut init,
    )?;
    log::info!(
        "{} tagger: {} words, {} tags, {} languages, {} parameters",
        model.config.cell,
        model.vocab.len(),
        model.tagset.len(),
        model.languages.len(),
        model.params.scalar_count()
    );
    let mut trainer = Trainer::new(model, &train, dev.as_ref(), tcfg)?;
    trainer.run()?;
    let outcome = trainer.finish();
    outcome.model.save(&a.model)?;
    let log_path = a
        .epoch_log
        .clone()
        .unwrap_or_else(|| suffixed(&a.model, "epochs.tsv"));
    write_file(&log_path, &format_epoch_log(&outcome.log, !a.no_timing))?;
    let last = outcome.log.last().expect("at least one epoch");
    let _ = writeln!(
        out,
        "trained {} epochs; kept epoch {}{}; model written to {}",
        outcome.log.len(),
        outcome.best_epoch,
        outcome.log[outcome.best_epoch - 1]
            .dev_f1
            .map_or_else(String::new, |f| format!(" (dev F1 {f:.4})")),
        a.model.display()
    );
    log::info!("final train loss {:.6}", last.train_loss);
    Ok(())
}

pub fn cmd_tag(a: &TagArgs, out: &mut dyn Write) -> Result<()> {
    let model = Tagger::load(&a.model)?;
    let mut input = read_corpus(&a.input, a.schema, None)?;
    if model.config.lang_feature && !input.has_languages() {
        return Err(Error::Config(format!(
            "model uses the language feature; {} needs a language column",
            a.input.display()
        )));
    }
    if let Some(lang) = input
        .languages
        .labels()
        .iter()
        .find(|l| model.config.lang_feature && !model.languages.contains(l))
    {
        return Err(Error::UnknownLanguage {
            lang: lang.clone(),
            line: None,
        });
    }
    input.tagset = model.tagset.clone();
    let tagged = model.tag_corpus(&input)?;
    write_corpus(&tagged, &a.output)?;
    let _ = writeln!(
        out,
        "tagged {} sentences ({} tokens) into {}",
        tagged.sentence_count(),
        tagged.token_count(),
        a.output.display()
    );
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    if !a.schema.tag {
        return Err(Error::Config(
            "eval needs a schema with a tag column".into(),
        ));
    }
    let gold = read_corpus(&a.gold, a.schema, None)?;
    let predicted = read_corpus(&a.predicted, a.schema, None)?;
    let report = score(&gold, &predicted)?;
    let text = report.to_text(a.top);
    let text_path = a
        .report
        .clone()
        .unwrap_or_else(|| suffixed(&a.predicted, "report.txt"));
    let kv_path =
        a.kv.clone()
            .unwrap_or_else(|| suffixed(&a.predicted, "report.kv"));
    write_file(&text_path, &text)?;
    write_file(&kv_path, &report.to_key_value(a.top))?;
    let _ = write!(out, "{text}");
    Ok(())
}

pub fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = fs::read(&a.model).map_err(|e| Error::io(&a.model, e))?;
    let report = inspect_bytes(&bytes);
    let _ = write!(out, "{}", report.text);
    match report.failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_settings_precede_command_line_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        fs::write(&cfg, "# experiment\ntrain = a.tsv\nmodel=m.bin\ncell = lstm\nepochs=3 # short\nlang_feature = true\nno-timing=false\n").unwrap();
        let args = os(&[
            "cmtag",
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--cell",
            "gru",
        ]);
        let expanded = expand_config(args).unwrap();
        assert_eq!(
            expanded,
            os(&[
                "cmtag",
                "train",
                "--train",
                "a.tsv",
                "--model",
                "m.bin",
                "--cell",
                "lstm",
                "--epochs",
                "3",
                "--lang-feature",
                "--cell",
                "gru"
            ])
        );
        let cli = Cli::try_parse_from(expanded).unwrap();
        let Command::Train(t) = cli.command else {
            panic!()
        };
        assert_eq!(t.cell, CellKind::Gru);
        assert_eq!(t.epochs, 3);
        assert!(t.lang_feature);
        assert!(!t.no_timing);
    }

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let cli = Cli::try_parse_from(["cmtag", "train", "--train", "a", "--model", "m"]).unwrap();
        let Command::Train(t) = cli.command else {
            panic!()
        };
        assert_eq!(
            (t.word_dim, t.hidden, t.window, t.bptt, t.epochs),
            (100, 100, 5, 7, 50)
        );
        assert_eq!((t.rho, t.epsilon, t.seed), (0.95, 1e-6, 1));
        assert_eq!(t.cell, CellKind::Gru);
        assert!(!t.lang_feature && t.pretrained.is_none() && t.clip_norm.is_none());
    }

    #[test]
    fn bad_config_line_is_a_user_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.conf");
        fs::write(&cfg, "cell gru\n").unwrap();
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(
            ["cmtag", "train", "--config", cfg.to_str().unwrap()],
            &mut o,
            &mut e,
        );
        assert_eq!(code, EXIT_USER);
        assert!(String::from_utf8(e).unwrap().contains("key=value"));
    }
}
