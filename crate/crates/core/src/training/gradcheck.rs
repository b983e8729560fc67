//! Central finite differences against [`backward_tbptt`].
//!
//! The numeric side evaluates the same truncated computation the analytic
//! side differentiates: for the loss at `t`, the state entering step
//! `t−k+1` comes from the unperturbed model and only the last `k` steps are
//! rerun with perturbed parameters.

use std::collections::BTreeSet;

use crate::corpus::EncodedSentence;
use crate::error::Result;
use crate::models::{HiddenState, TaggerModel};
use crate::numerics::SeededRng;

use super::backward::backward_tbptt;

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Loss of the depth-`k` truncated graph, with frozen states taken from
/// `base` and everything inside the window computed by `model`.
pub fn truncated_loss(
    model: &TaggerModel<f64>,
    base: &[HiddenState<f64>],
    enc: &EncodedSentence,
    gold: &[usize],
    k: usize,
) -> Result<f64> {
    Ok(truncated_token_losses(model, base, enc, gold, k)?
        .iter()
        .sum())
}

/// Per-token terms of [`truncated_loss`]. Differencing these term by term
/// keeps the rounding error of the finite difference near one ulp of a
/// single token's loss rather than of the sentence total.
pub fn truncated_token_losses(
    model: &TaggerModel<f64>,
    base: &[HiddenState<f64>],
    enc: &EncodedSentence,
    gold: &[usize],
    k: usize,
) -> Result<Vec<f64>> {
    let mut losses = Vec::with_capacity(enc.len());
    for t in 0..enc.len() {
        let start = (t + 1).saturating_sub(k);
        let mut state = if start == 0 {
            model.initial_state()
        } else {
            base[start - 1].clone()
        };
        let mut top = Vec::new();
        for s in start..=t {
            let x = model.input_for(&model.window_ids(enc, s)?);
            let cache = model.params.cell.forward(&x, &state);
            state = cache.state();
            top = cache.top().to_vec();
        }
        let z = model.params.output.logits(&top);
        losses.push(log_sum_exp(&z) - z[gold[t]]);
    }
    Ok(losses)
}

/// Compares analytic and numeric gradients on `samples` random scalars.
/// Embedding samples are drawn from rows the sentence actually touches.
pub fn gradient_check(
    model: &TaggerModel<f64>,
    enc: &EncodedSentence,
    gold: &[usize],
    k: usize,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<GradCheckReport> {
    let analytic = backward_tbptt(model, enc, gold, k)?.grads;
    let base: Vec<HiddenState<f64>> = model
        .forward_trace(enc)?
        .caches
        .iter()
        .map(|c| c.state())
        .collect();

    let windows: Vec<_> = (0..enc.len())
        .map(|t| model.window_ids(enc, t))
        .collect::<Result<_>>()?;
    let word_rows: Vec<usize> = windows
        .iter()
        .flat_map(|w| w.words.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let lang_rows: Vec<usize> = windows
        .iter()
        .flat_map(|w| w.lang_rows.iter().flatten().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let grad_tensors = analytic.tensors();
    let tensor_names: Vec<String> = grad_tensors.iter().map(|t| t.name.clone()).collect();
    let mut probe = model.clone();
    let mut entries = Vec::with_capacity(samples);
    for _ in 0..samples {
        let ti = rng.below(tensor_names.len());
        let g = &grad_tensors[ti];
        let index = match g.name.as_str() {
            "words" => pick_in_rows(&word_rows, g.shape[1], rng),
            "langs" => pick_in_rows(&lang_rows, g.shape[1], rng),
            _ => rng.below(g.data.len()),
        };
        let original = value_at(&probe, ti, index);
        set_value(&mut probe, ti, index, original + FD_STEP);
        let plus = truncated_token_losses(&probe, &base, enc, gold, k)?;
        set_value(&mut probe, ti, index, original - FD_STEP);
        let minus = truncated_token_losses(&probe, &base, enc, gold, k)?;
        set_value(&mut probe, ti, index, original);
        let numeric = plus.iter().zip(&minus).map(|(p, m)| p - m).sum::<f64>() / (2.0 * FD_STEP);
        let a = g.data[index];
        entries.push(GradCheckEntry {
            tensor: g.name.clone(),
            index,
            analytic: a,
            numeric,
            rel_error: relative_error(a, numeric),
        });
    }
    let max_rel_error = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        entries,
        max_rel_error,
    })
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn pick_in_rows(rows: &[usize], dim: usize, rng: &mut SeededRng) -> usize {
    let r = rows[rng.below(rows.len())];
    r * dim + rng.below(dim)
}

fn value_at(model: &TaggerModel<f64>, tensor: usize, index: usize) -> f64 {
    model.params.tensors()[tensor].data[index]
}

fn set_value(model: &mut TaggerModel<f64>, tensor: usize, index: usize, v: f64) {
    model.params.tensors_mut()[tensor].1[index] = v;
}
