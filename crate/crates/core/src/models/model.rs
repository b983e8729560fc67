use crate::corpus::{
    build_vocabulary, Corpus, EncodedSentence, Encoder, LabelSet, Normalizer, Sentence, TagSet,
    Vocabulary, PAD_L, PAD_R,
};
use crate::embeddings::{EmbeddingTable, TextEmbeddings};
use crate::error::{Error, Result};
use crate::numerics::{softmax_in_place, Scalar, SeededRng, ShapeError, Vector};

use super::cells::{HiddenState, StepCache};
use super::config::ModelConfig;
use super::params::{OutputLayer, Params};

/// Vocabulary ids feeding one window: `window` word ids and, with the
/// language feature, `window` language-table rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowIds {
    pub words: Vec<usize>,
    pub lang_rows: Option<Vec<usize>>,
}

/// Row of the language table that pads the sentence boundaries.
pub const LANG_PAD_ROW: usize = 0;

/// Everything computed by one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace<S> {
    pub windows: Vec<WindowIds>,
    pub inputs: Vec<Vec<S>>,
    pub caches: Vec<StepCache<S>>,
    /// Tag distribution per token.
    pub probs: Vec<Vec<S>>,
}

/// A windowed recurrent tagger with its lexicon.
#[derive(Debug, Clone)]
pub struct TaggerModel<S> {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub tagset: TagSet,
    pub languages: LabelSet,
    pub normalizer: Normalizer,
    pub params: Params<S>,
}

impl<S: Scalar> PartialEq for TaggerModel<S> {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.vocab == other.vocab
            && self.tagset == other.tagset
            && self.languages == other.languages
            && self.normalizer.spec() == other.normalizer.spec()
            && self.params == other.params
    }
}

impl<S: Scalar> TaggerModel<S> {
    /// Freshly initialized model; `config.num_tags` is taken from `tagset`.
    pub fn new(
        mut config: ModelConfig,
        vocab: Vocabulary,
        tagset: TagSet,
        languages: LabelSet,
        normalizer: Normalizer,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        config.num_tags = tagset.len();
        config.validate()?;
        if tagset.is_empty() {
            return Err(Error::Config("tagset is empty".into()));
        }
        if config.lang_feature && languages.is_empty() {
            return Err(Error::Config(
                "language feature requested but the corpus has no language labels".into(),
            ));
        }
        let params = Params::init(&config, vocab.len(), languages.len(), rng);
        Ok(TaggerModel {
            config,
            vocab,
            tagset,
            languages,
            normalizer,
            params,
        })
    }

    /// Model whose vocabulary (words seen at least `min_freq` times after
    /// normalization), tagset and language set come from `train`.
    ///
    /// With `pretrained`, every word of the embedding file joins the
    /// vocabulary and the word table starts from the file's vectors; rows
    /// without a vector keep their random initialization.
    pub fn for_corpus(
        config: ModelConfig,
        train: &Corpus,
        normalizer: Normalizer,
        min_freq: usize,
        pretrained: Option<&TextEmbeddings>,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if train.sentences.is_empty() {
            return Err(Error::EmptyCorpus("training corpus".into()));
        }
        let mut vocab = build_vocabulary(train, min_freq, &normalizer);
        if let Some(emb) = pretrained {
            if emb.dim != config.word_dim {
                return Err(Error::Config(format!(
                    "pre-trained vectors have dimension {}, model word dimension is {}",
                    emb.dim, config.word_dim
                )));
            }
            vocab.extend(emb.entries.iter().map(|(w, _)| w.as_str()));
        }
        let mut model = Self::new(
            config,
            vocab,
            train.tagset.clone(),
            train.languages.clone(),
            normalizer,
            rng,
        )?;
        if let Some(emb) = pretrained {
            let (table, _) = emb.to_table(&model.vocab, rng);
            model.set_word_embeddings(table)?;
        }
        Ok(model)
    }

    /// Replaces the word table, e.g. with pre-trained vectors.
    pub fn set_word_embeddings(&mut self, table: EmbeddingTable<S>) -> Result<()> {
        if table.len() != self.vocab.len() || table.dim() != self.config.word_dim {
            return Err(Error::Config(format!(
                "word table is {}x{}, model expects {}x{}",
                table.len(),
                table.dim(),
                self.vocab.len(),
                self.config.word_dim
            )));
        }
        self.params.words = table;
        Ok(())
    }

    pub fn encoder(&self) -> Encoder<'_> {
        Encoder {
            vocab: &self.vocab,
            normalizer: &self.normalizer,
            tagset: &self.tagset,
            languages: self.config.lang_feature.then_some(&self.languages),
        }
    }

    pub fn encode(&self, s: &Sentence, with_tags: bool) -> Result<EncodedSentence> {
        self.encoder().encode(s, with_tags)
    }

    /// Checks that an encoded sentence can be fed to this model.
    pub fn check_encoded(&self, enc: &EncodedSentence) -> Result<()> {
        if let Some(&bad) = enc.words.iter().find(|&&w| w >= self.vocab.len()) {
            return Err(Error::OutOfRange {
                what: "model vocabulary",
                index: bad,
                len: self.vocab.len(),
            });
        }
        match (&enc.langs, self.config.lang_feature) {
            (None, true) => {
                return Err(Error::Structure(
                    "model uses the language feature but the sentence has no language ids".into(),
                ))
            }
            (Some(langs), true) => {
                if langs.len() != enc.words.len() {
                    return Err(Error::Structure(
                        "language ids and words differ in length".into(),
                    ));
                }
                if let Some(&bad) = langs.iter().find(|&&l| l >= self.languages.len()) {
                    return Err(Error::OutOfRange {
                        what: "model language set",
                        index: bad,
                        len: self.languages.len(),
                    });
                }
            }
            _ => {}
        }
        if let Some(tags) = &enc.tags {
            if tags.len() != enc.words.len() {
                return Err(Error::Structure(
                    "tag ids and words differ in length".into(),
                ));
            }
            if let Some(&bad) = tags.iter().find(|&&t| t >= self.tagset.len()) {
                return Err(Error::OutOfRange {
                    what: "tagset",
                    index: bad,
                    len: self.tagset.len(),
                });
            }
        }
        Ok(())
    }

    /// Ids of the `window` slots centred on position `t`; slots before the
    /// start use PAD_L and slots after the end use PAD_R.
    pub fn window_ids(&self, enc: &EncodedSentence, t: usize) -> Result<WindowIds> {
        let n = enc.len();
        if t >= n {
            return Err(Error::OutOfRange {
                what: "sentence",
                index: t,
                len: n,
            });
        }
        let k = self.config.half_window() as isize;
        let slot = |offset: isize| -> Option<usize> {
            let p = t as isize + offset;
            (p >= 0 && (p as usize) < n).then_some(p as usize)
        };
        let words = (-k..=k)
            .map(|o| match slot(o) {
                Some(p) => enc.words[p],
                None if o < 0 => PAD_L,
                None => PAD_R,
            })
            .collect();
        let lang_rows = match (&enc.langs, self.config.lang_feature) {
            (Some(langs), true) => Some(
                (-k..=k)
                    .map(|o| slot(o).map_or(LANG_PAD_ROW, |p| langs[p] + 1))
                    .collect(),
            ),
            (None, true) => {
                return Err(Error::Structure(
                    "model uses the language feature but the sentence has no language ids".into(),
                ))
            }
            _ => None,
        };
        Ok(WindowIds { words, lang_rows })
    }

    /// Concatenated word embeddings of the window, followed by the window's
    /// language embeddings when the language feature is on.
    pub fn input_for(&self, ids: &WindowIds) -> Vec<S> {
        let mut x = Vec::with_capacity(self.config.input_dim());
        for &w in &ids.words {
            x.extend_from_slice(self.params.words.row(w));
        }
        if let (Some(rows), Some(table)) = (&ids.lang_rows, &self.params.langs) {
            for &r in rows {
                x.extend_from_slice(table.row(r));
            }
        }
        x
    }

    pub fn assemble_window(&self, enc: &EncodedSentence, t: usize) -> Result<Vector<S>> {
        self.check_encoded(enc)?;
        Ok(Vector(self.input_for(&self.window_ids(enc, t)?)))
    }

    pub fn initial_state(&self) -> HiddenState<S> {
        self.params.cell.initial_state()
    }

    /// Runs the cell over the sentence from a zero state.
    pub fn forward_trace(&self, enc: &EncodedSentence) -> Result<ForwardTrace<S>> {
        self.check_encoded(enc)?;
        let n = enc.len();
        let mut trace = ForwardTrace {
            windows: Vec::with_capacity(n),
            inputs: Vec::with_capacity(n),
            caches: Vec::with_capacity(n),
            probs: Vec::with_capacity(n),
        };
        let mut state = self.initial_state();
        for t in 0..n {
            let ids = self.window_ids(enc, t)?;
            let x = self.input_for(&ids);
            let cache = self.params.cell.forward(&x, &state);
            state = cache.state();
            let mut p = self.params.output.logits(cache.top());
            softmax_in_place(&mut p);
            trace.windows.push(ids);
            trace.inputs.push(x);
            trace.caches.push(cache);
            trace.probs.push(p);
        }
        Ok(trace)
    }

    /// One tag distribution per token.
    pub fn forward_sentence(&self, enc: &EncodedSentence) -> Result<Vec<Vector<S>>> {
        Ok(self
            .forward_trace(enc)?
            .probs
            .into_iter()
            .map(Vector)
            .collect())
    }

    /// Argmax tag ids; ties go to the lowest index.
    pub fn predict_ids(&self, enc: &EncodedSentence) -> Result<Vec<usize>> {
        Ok(self
            .forward_sentence(enc)?
            .iter()
            .map(|p| argmax(p))
            .collect())
    }

    /// Copy of `s` with predicted tags.
    pub fn predict_tags(&self, s: &Sentence) -> Result<Sentence> {
        let enc = self.encode(s, false)?;
        let ids = self.predict_ids(&enc)?;
        let labels = self.encoder().decode_tags(&ids)?;
        let mut out = s.clone();
        for (tok, label) in out.tokens.iter_mut().zip(labels) {
            tok.tag = Some(label);
        }
        Ok(out)
    }

    /// Tags every sentence of `c`; the result carries the model's tagset.
    pub fn tag_corpus(&self, c: &Corpus) -> Result<Corpus> {
        let sentences = c
            .sentences
            .iter()
            .map(|s| self.predict_tags(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus {
            sentences,
            tagset: self.tagset.clone(),
            languages: c.languages.clone(),
            provenance: c.provenance.clone(),
        })
    }

    /// Same model at another precision.
    pub fn cast<T: Scalar>(&self) -> TaggerModel<T> {
        TaggerModel {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            tagset: self.tagset.clone(),
            languages: self.languages.clone(),
            normalizer: self.normalizer.clone(),
            params: self.params.cast(),
        }
    }
}

/// `softmax(W_hy h + b_y)`.
pub fn output_distribution<S: Scalar>(
    o: &OutputLayer<S>,
    h: &[S],
) -> Result<Vector<S>, ShapeError> {
    if h.len() != o.w_hy.cols() || o.b_y.len() != o.w_hy.rows() {
        return Err(ShapeError {
            op: "output_distribution",
            left_rows: o.w_hy.rows(),
            left_cols: o.w_hy.cols(),
            right: format!("hidden of length {}", h.len()),
        });
    }
    let mut p = o.logits(h);
    softmax_in_place(&mut p);
    Ok(Vector(p))
}

/// Index of the largest entry, first one on ties.
pub fn argmax<S: Scalar>(v: &[S]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
