//! Word and language vector tables, and skip-gram pre-training.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Normalizer, Vocabulary, UNK};
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, gaussian_init, sigmoid_scalar, Matrix, Scalar, SeededRng};

/// One dense row per id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<S> {
    table: Matrix<S>,
}

impl<S: Scalar> EmbeddingTable<S> {
    /// Rows drawn i.i.d. from N(0, 1e-4).
    pub fn init_random(vocab_size: usize, dim: usize, rng: &mut SeededRng) -> Self {
        EmbeddingTable {
            table: gaussian_init(vocab_size, dim, rng),
        }
    }

    pub fn from_matrix(table: Matrix<S>) -> Self {
        EmbeddingTable { table }
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn len(&self) -> usize {
        self.table.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.table.rows() == 0
    }

    pub fn lookup(&self, id: usize) -> Result<&[S]> {
        if id >= self.len() {
            return Err(Error::OutOfRange {
                what: "embedding table",
                index: id,
                len: self.len(),
            });
        }
        Ok(self.table.row(id))
    }

    /// Unchecked row access for hot paths.
    #[inline]
    pub fn row(&self, id: usize) -> &[S] {
        self.table.row(id)
    }

    #[inline]
    pub fn row_mut(&mut self, id: usize) -> &mut [S] {
        self.table.row_mut(id)
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.table
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix<S> {
        &mut self.table
    }

    pub fn into_matrix(self) -> Matrix<S> {
        self.table
    }
}

/// Skip-gram with negative sampling hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipgramConfig {
    pub dim: usize,
    /// Context words considered on each side of the center word.
    pub radius: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly towards zero.
    pub learning_rate: f64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        SkipgramConfig {
            dim: 100,
            radius: 2,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            subsample: 0.0,
        }
    }
}

impl SkipgramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.radius == 0 || self.negatives == 0 {
            return Err(Error::Config(
                "skip-gram dim, radius and negatives must all be >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("skip-gram learning rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Draws ids from the unigram distribution raised to the 3/4 power.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
    ids: Vec<usize>,
}

impl NegativeSampler {
    pub const POWER: f64 = 0.75;

    /// `counts[id]` is the corpus frequency of `id`; zero-count ids are never drawn.
    pub fn new(counts: &[usize]) -> Option<Self> {
        let mut cumulative = Vec::new();
        let mut ids = Vec::new();
        let mut total = 0.0;
        for (id, &c) in counts.iter().enumerate() {
            if c > 0 {
                total += (c as f64).powf(Self::POWER);
                cumulative.push(total);
                ids.push(id);
            }
        }
        if ids.is_empty() {
            return None;
        }
        for c in cumulative.iter_mut() {
            *c /= total;
        }
        Some(NegativeSampler { cumulative, ids })
    }

    /// Exact probability of drawing `id`.
    pub fn probability(&self, id: usize) -> f64 {
        match self.ids.iter().position(|&i| i == id) {
            Some(0) => self.cumulative[0],
            Some(k) => self.cumulative[k] - self.cumulative[k - 1],
            None => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        let u = rng.uniform();
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.ids[k.min(self.ids.len() - 1)]
    }
}

/// Trains input-side word vectors with skip-gram and negative sampling over
/// the normalized token streams of `corpus`.
///
/// Single-threaded, so the result is a pure function of the seed.
pub fn pretrain_skipgram<S: Scalar>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    normalizer: &Normalizer,
    cfg: &SkipgramConfig,
    rng: &mut SeededRng,
) -> Result<EmbeddingTable<S>> {
    cfg.validate()?;
    if corpus.token_count() == 0 {
        return Err(Error::EmptyCorpus(
            "pre-training corpus has no tokens".into(),
        ));
    }
    let mut init_rng = rng.substream("pretrain-init");
    let mut sample_rng = rng.substream("negative-sampling");
    let mut input = EmbeddingTable::<S>::init_random(vocab.len(), cfg.dim, &mut init_rng);
    let mut output = Matrix::<S>::zeros(vocab.len(), cfg.dim);

    let streams: Vec<Vec<usize>> = corpus
        .sentences
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .map(|t| vocab.id(normalizer.normalize(&t.surface)))
                .filter(|&id| id != UNK)
                .collect()
        })
        .collect();
    let mut counts = vec![0usize; vocab.len()];
    for &id in streams.iter().flatten() {
        counts[id] += 1;
    }
    let total_words: usize = counts.iter().sum();
    let Some(sampler) = NegativeSampler::new(&counts) else {
        return Ok(input);
    };

    let total_steps = (cfg.epochs * total_words).max(1) as f64;
    let mut step = 0usize;
    let mut grad_in = vec![S::zero(); cfg.dim];
    for _ in 0..cfg.epochs {
        for stream in &streams {
            let kept: Vec<usize> = if cfg.subsample > 0.0 {
                stream
                    .iter()
                    .copied()
                    .filter(|&id| {
                        let ratio = cfg.subsample * total_words as f64 / counts[id] as f64;
                        let keep = ratio.sqrt() + ratio;
                        keep >= 1.0 || sample_rng.uniform() < keep
                    })
                    .collect()
            } else {
                stream.clone()
            };
            for (pos, &center) in kept.iter().enumerate() {
                let progress = step as f64 / total_steps;
                let lr = S::of(cfg.learning_rate * (1.0 - progress).max(1e-4));
                step += 1;
                let lo = pos.saturating_sub(cfg.radius);
                let hi = (pos + cfg.radius).min(kept.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = kept[ctx_pos];
                    grad_in.iter_mut().for_each(|g| *g = S::zero());
                    for n in 0..=cfg.negatives {
                        let (target, label) = if n == 0 {
                            (context, S::one())
                        } else {
                            let t = sampler.sample(&mut sample_rng);
                            if t == context {
                                continue;
                            }
                            (t, S::zero())
                        };
                        let score = dot(input.row(center), output.row(target));
                        let g = (label - sigmoid_scalar(score)) * lr;
                        axpy(g, output.row(target), &mut grad_in);
                        axpy(g, input.row(center), output.row_mut(target));
                    }
                    axpy(S::one(), &grad_in, input.row_mut(center));
                }
            }
        }
    }
    Ok(input)
}

/// Parsed word2vec-style text file.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbeddings {
    pub dim: usize,
    pub entries: Vec<(String, Vec<f64>)>,
}

impl TextEmbeddings {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Lines `word v1 … vD`, optionally preceded by a `count dim` header.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();
        let mut declared: Option<(usize, usize)> = None;
        if let Some((_, first)) = lines.peek() {
            let parts: Vec<&str> = first.split_whitespace().collect();
            if parts.len() == 2 {
                if let (Ok(count), Ok(dim)) = (parts[0].parse(), parts[1].parse()) {
                    declared = Some((count, dim));
                    lines.next();
                }
            }
        }
        let mut dim = declared.map(|d| d.1);
        let mut entries = Vec::new();
        for (idx, line) in lines {
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap_or_default().to_string();
            let values = parts
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| bad(idx + 1, format!("unreadable float {p:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(bad(
                        idx + 1,
                        format!("expected {d} values for {word:?}, found {}", values.len()),
                    ))
                }
                _ => {}
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(bad(idx + 1, format!("non-finite value for {word:?}")));
            }
            entries.push((word, values));
        }
        let dim = dim.unwrap_or(0);
        if dim == 0 {
            return Err(bad(1, "no embedding vectors".into()));
        }
        if let Some((count, _)) = declared {
            if count != entries.len() {
                log::warn!(
                    "{source_name}: header declares {count} vectors, file has {}",
                    entries.len()
                );
            }
        }
        Ok(TextEmbeddings { dim, entries })
    }

    /// In-memory equivalent of writing `table` and reading it back; values
    /// are rounded to f32 as in the file.
    pub fn from_table<S: Scalar>(table: &EmbeddingTable<S>, vocab: &Vocabulary) -> Self {
        let entries = vocab
            .words()
            .iter()
            .enumerate()
            .filter(|&(id, _)| !Vocabulary::is_reserved(id))
            .map(|(id, w)| {
                let row = table
                    .row(id)
                    .iter()
                    .map(|v| v.to_f32_rounded() as f64)
                    .collect();
                (w.clone(), row)
            })
            .collect();
        TextEmbeddings {
            dim: table.dim(),
            entries,
        }
    }

    /// Table over `vocab`: rows for words in the file are copied, the rest are
    /// Gaussian-initialized. Returns the table and the in-vocabulary words
    /// that had no vector.
    pub fn to_table<S: Scalar>(
        &self,
        vocab: &Vocabulary,
        rng: &mut SeededRng,
    ) -> (EmbeddingTable<S>, Vec<String>) {
        let mut table = EmbeddingTable::init_random(vocab.len(), self.dim, rng);
        let mut found = vec![false; vocab.len()];
        for (word, values) in &self.entries {
            if let Some(id) = vocab.get(word) {
                for (dst, &v) in table.row_mut(id).iter_mut().zip(values) {
                    *dst = S::of(v);
                }
                found[id] = true;
            }
        }
        let missing: Vec<String> = vocab
            .words()
            .iter()
            .enumerate()
            .filter(|&(id, _)| !found[id] && !Vocabulary::is_reserved(id))
            .map(|(_, w)| w.clone())
            .collect();
        if !missing.is_empty() {
            log::warn!(
                "{} vocabulary words have no pre-trained vector and were randomly initialized (first: {:?})",
                missing.len(),
                missing[0]
            );
        }
        (table, missing)
    }
}

/// Reads a word2vec text file into a table indexed by `vocab`.
pub fn load_text_embeddings<S: Scalar>(
    path: &Path,
    vocab: &Vocabulary,
    rng: &mut SeededRng,
) -> Result<EmbeddingTable<S>> {
    Ok(TextEmbeddings::read(path)?.to_table(vocab, rng).0)
}

/// word2vec text format with a `count dim` header; reserved ids are skipped.
pub fn format_text_embeddings<S: Scalar>(table: &EmbeddingTable<S>, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    let words: Vec<(usize, &String)> = vocab
        .words()
        .iter()
        .enumerate()
        .filter(|&(id, _)| !Vocabulary::is_reserved(id))
        .collect();
    let _ = writeln!(out, "{} {}", words.len(), table.dim());
    for (id, w) in words {
        out.push_str(w);
        for v in table.row(id) {
            // Shortest round-trip representation of the stored f32.
            let _ = write!(out, " {}", v.to_f32_rounded());
        }
        out.push('\n');
    }
    out
}

pub fn write_text_embeddings<S: Scalar>(
    table: &EmbeddingTable<S>,
    vocab: &Vocabulary,
    path: &Path,
) -> Result<()> {
    fs::write(path, format_text_embeddings(table, vocab)).map_err(|e| Error::io(path, e))
}

pub fn cosine<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    let na = dot(a, a).to_f64_lossless().sqrt();
    let nb = dot(b, b).to_f64_lossless().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b).to_f64_lossless() / (na * nb)
}
