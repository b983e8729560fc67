use std::fmt::Write as _;
use std::time::Instant;

use crate::corpus::{Corpus, EncodedSentence};
use crate::error::{Error, Result};
use crate::models::TaggerModel;
use crate::numerics::{Scalar, SeededRng};

use super::adadelta::{adadelta_update, AdadeltaState};
use super::backward::{accumulate_gradients, GradientSet};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Truncated BPTT depth `k`.
    pub bptt: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Rescale the sentence gradient to at most this global L2 norm.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            bptt: 7,
            rho: 0.95,
            epsilon: 1e-6,
            seed: 1,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.bptt == 0 {
            return Err(Error::Config("BPTT depth must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "clip norm must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-token cross-entropy over the epoch's updates.
    pub train_loss: f64,
    pub dev_f1: Option<f64>,
    pub seconds: f64,
}

impl EpochRecord {
    /// `epoch TAB train_loss TAB dev_f1 TAB seconds`; with `timing` off the
    /// seconds column is written as 0 so logs of identical runs compare equal.
    pub fn log_line(&self, timing: bool) -> String {
        let f1 = self
            .dev_f1
            .map_or_else(|| "-".to_string(), |f| format!("{f:.6}"));
        let secs = if timing { self.seconds } else { 0.0 };
        format!(
            "{}\t{:.6}\t{}\t{:.3}",
            self.epoch, self.train_loss, f1, secs
        )
    }
}

pub fn format_epoch_log(records: &[EpochRecord], timing: bool) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(out, "{}", r.log_line(timing));
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    /// Best-dev checkpoint, or the final model when there is no dev set.
    pub model: TaggerModel<S>,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Epoch-at-a-time trainer: seeded shuffle, one Adadelta step per sentence.
pub struct Trainer<S> {
    model: TaggerModel<S>,
    cfg: TrainConfig,
    train: Vec<EncodedSentence>,
    dev: Vec<EncodedSentence>,
    state: AdadeltaState<S>,
    grads: GradientSet<S>,
    shuffle: SeededRng,
    order: Vec<usize>,
    log: Vec<EpochRecord>,
    best: Option<(f64, usize, TaggerModel<S>)>,
}

impl<S: Scalar> Trainer<S> {
    pub fn new(
        model: TaggerModel<S>,
        train: &Corpus,
        dev: Option<&Corpus>,
        cfg: TrainConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let train = encode_all(&model, train, "training")?;
        if train.is_empty() {
            return Err(Error::EmptyCorpus(
                "training corpus has no non-empty sentences".into(),
            ));
        }
        let dev = match dev {
            Some(d) => encode_all(&model, d, "dev")?,
            None => Vec::new(),
        };
        let state = AdadeltaState::new(&model.params);
        let grads = model.params.zeros_like();
        let shuffle = SeededRng::new(cfg.seed).substream("shuffle");
        let order = (0..train.len()).collect();
        Ok(Trainer {
            model,
            cfg,
            train,
            dev,
            state,
            grads,
            shuffle,
            order,
            log: Vec::new(),
            best: None,
        })
    }

    pub fn model(&self) -> &TaggerModel<S> {
        &self.model
    }

    pub fn log(&self) -> &[EpochRecord] {
        &self.log
    }

    pub fn epochs_done(&self) -> usize {
        self.log.len()
    }

    pub fn train_sentences(&self) -> &[EncodedSentence] {
        &self.train
    }

    /// One pass over the shuffled training set.
    pub fn run_epoch(&mut self) -> Result<EpochRecord> {
        self.run_epoch_with(|_, _| {})
    }

    /// Like [`run_epoch`](Self::run_epoch), calling `after_update(model,
    /// updates_so_far)` after every sentence.
    pub fn run_epoch_with(
        &mut self,
        mut after_update: impl FnMut(&TaggerModel<S>, usize),
    ) -> Result<EpochRecord> {
        let started = Instant::now();
        self.shuffle.shuffle(&mut self.order);
        let mut loss = 0.0;
        let mut tokens = 0;
        for (done, &i) in self.order.iter().enumerate() {
            let enc = &self.train[i];
            let gold = enc.tags.as_deref().expect("training sentences carry tags");
            let trace = self.model.forward_trace(enc)?;
            self.grads.fill_zero();
            let l =
                accumulate_gradients(&self.model, &trace, gold, self.cfg.bptt, &mut self.grads)?;
            loss += l.total;
            tokens += l.tokens;
            if let Some(max) = self.cfg.clip_norm {
                clip_global_norm(&mut self.grads, max);
            }
            adadelta_update(
                &mut self.model.params,
                &self.grads,
                &mut self.state,
                self.cfg.rho,
                self.cfg.epsilon,
            )?;
            after_update(&self.model, done + 1);
        }
        let epoch = self.log.len() + 1;
        let dev_f1 = if self.dev.is_empty() {
            None
        } else {
            Some(accuracy(&self.model, &self.dev)?)
        };
        if let Some(f1) = dev_f1 {
            if self.best.as_ref().map_or(true, |(b, _, _)| f1 > *b) {
                self.best = Some((f1, epoch, self.model.clone()));
            }
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss / tokens.max(1) as f64,
            dev_f1,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!("{}", record.log_line(true));
        self.log.push(record.clone());
        Ok(record)
    }

    /// Runs the remaining configured epochs.
    pub fn run(&mut self) -> Result<()> {
        while self.log.len() < self.cfg.epochs {
            self.run_epoch()?;
        }
        Ok(())
    }

    pub fn finish(self) -> TrainOutcome<S> {
        match self.best {
            Some((_, best_epoch, model)) => TrainOutcome {
                model,
                best_epoch,
                log: self.log,
            },
            None => TrainOutcome {
                model: self.model,
                best_epoch: self.log.len(),
                log: self.log,
            },
        }
    }
}

/// Trains for `cfg.epochs` epochs and returns the best-dev checkpoint.
pub fn train<S: Scalar>(
    model: TaggerModel<S>,
    train: &Corpus,
    dev: Option<&Corpus>,
    cfg: TrainConfig,
) -> Result<TrainOutcome<S>> {
    let mut trainer = Trainer::new(model, train, dev, cfg)?;
    trainer.run()?;
    Ok(trainer.finish())
}

fn encode_all<S: Scalar>(
    model: &TaggerModel<S>,
    c: &Corpus,
    what: &str,
) -> Result<Vec<EncodedSentence>> {
    if c.sentences.is_empty() {
        return Err(Error::EmptyCorpus(format!("{what} corpus")));
    }
    c.sentences
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| model.encode(s, true))
        .collect()
}

/// Token accuracy of the model on tagged sentences (micro F1 under one tag
/// per token).
pub fn accuracy<S: Scalar>(model: &TaggerModel<S>, sentences: &[EncodedSentence]) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for enc in sentences {
        let gold = enc
            .tags
            .as_deref()
            .ok_or_else(|| Error::Structure("accuracy needs tagged sentences".into()))?;
        let pred = model.predict_ids(enc)?;
        correct += pred.iter().zip(gold).filter(|(p, g)| p == g).count();
        total += gold.len();
    }
    Ok(if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    })
}

/// Mean per-token loss of the model on tagged sentences.
pub fn mean_loss<S: Scalar>(model: &TaggerModel<S>, sentences: &[EncodedSentence]) -> Result<f64> {
    let mut loss = 0.0;
    let mut tokens = 0;
    for enc in sentences {
        let gold = enc
            .tags
            .as_deref()
            .ok_or_else(|| Error::Structure("loss needs tagged sentences".into()))?;
        let probs = model.forward_sentence(enc)?;
        let l = super::loss::cross_entropy(&probs, gold)?;
        loss += l.total;
        tokens += l.tokens;
    }
    Ok(loss / tokens.max(1) as f64)
}

fn clip_global_norm<S: Scalar>(grads: &mut GradientSet<S>, max: f64) {
    let norm = grads
        .tensors()
        .iter()
        .flat_map(|t| t.data.iter())
        .map(|v| {
            let v = v.to_f64_lossless();
            v * v
        })
        .sum::<f64>()
        .sqrt();
    if norm > max {
        let scale = S::of(max / norm);
        for (_, data) in grads.tensors_mut() {
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }
}
