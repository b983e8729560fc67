//! Hand-derived truncated BPTT.
//!
//! The loss at position `t` sends gradient back through the cell steps
//! `t, t−1, …, t−k+1`; the state entering step `t−k+1` is a constant.
//! Gate pre-activation deltas are summed per step over all losses, and the
//! weight, bias and input gradients are formed once per step from those sums.

use crate::corpus::EncodedSentence;
use crate::error::{Error, Result};
use crate::models::{
    CellParams, ElmanCache, ForwardTrace, Gate, GruCache, LstmCache, LstmParams, Params, StepCache,
    TaggerModel,
};
use crate::numerics::{axpy, Scalar};

use super::loss::{cross_entropy, Loss};

/// Gradient of the sentence loss, one buffer per parameter tensor.
pub type GradientSet<S> = Params<S>;

#[derive(Debug, Clone)]
pub struct Backprop<S> {
    pub loss: Loss,
    pub grads: GradientSet<S>,
}

/// Forward pass plus truncated backward pass over one sentence.
pub fn backward_tbptt<S: Scalar>(
    model: &TaggerModel<S>,
    enc: &EncodedSentence,
    gold: &[usize],
    k: usize,
) -> Result<Backprop<S>> {
    let trace = model.forward_trace(enc)?;
    let mut grads = model.params.zeros_like();
    let loss = accumulate_gradients(model, &trace, gold, k, &mut grads)?;
    Ok(Backprop { loss, grads })
}

/// Adds the gradient of the traced sentence's loss into `grads`.
pub fn accumulate_gradients<S: Scalar>(
    model: &TaggerModel<S>,
    trace: &ForwardTrace<S>,
    gold: &[usize],
    k: usize,
    grads: &mut GradientSet<S>,
) -> Result<Loss> {
    if k == 0 {
        return Err(Error::Config("BPTT depth must be at least 1".into()));
    }
    let loss = cross_entropy(&trace.probs, gold)?;
    let n = gold.len();
    if n == 0 {
        return Ok(loss);
    }

    // Output layer; dtop[t] is the loss-t gradient at the top hidden state.
    let out = &model.params.output;
    let mut dtop = Vec::with_capacity(n);
    for t in 0..n {
        let mut dy = trace.probs[t].clone();
        dy[gold[t]] -= S::one();
        let h = trace.caches[t].top();
        grads.output.w_hy.add_outer(&dy, h);
        axpy(S::one(), &dy, &mut grads.output.b_y);
        let mut dh = vec![S::zero(); h.len()];
        out.w_hy.matvec_t_acc(&dy, &mut dh);
        dtop.push(dh);
    }

    let input_dim = trace.inputs[0].len();
    let mut dx = vec![vec![S::zero(); input_dim]; n];
    match (&model.params.cell, &mut grads.cell) {
        (CellParams::Elman(p), CellParams::Elman(g)) => {
            let caches: Vec<&ElmanCache<S>> = trace.caches.iter().map(elman).collect();
            let hidden = p.hidden.hidden();
            let mut acc = vec![vec![S::zero(); hidden]; n];
            for t in 0..n {
                let lo = window_start(t, k);
                let mut dh = dtop[t].clone();
                for s in (lo..=t).rev() {
                    let h = &caches[s].h;
                    let a: Vec<S> = (0..hidden)
                        .map(|i| dh[i] * h[i] * (S::one() - h[i]))
                        .collect();
                    add_into(&mut acc[s], &a);
                    if s > lo {
                        dh = vec![S::zero(); hidden];
                        p.hidden.w_h.matvec_t_acc(&a, &mut dh);
                    }
                }
            }
            finish_gate(
                &p.hidden,
                &mut g.hidden,
                &acc,
                &trace.inputs,
                |s| &caches[s].h_prev,
                &mut dx,
            );
        }
        (CellParams::Lstm(p), CellParams::Lstm(g)) => {
            let caches: Vec<&LstmCache<S>> = trace.caches.iter().map(lstm).collect();
            let mut acc = LstmDeltas::zeros(n, p.hidden());
            for t in 0..n {
                let lo = window_start(t, k);
                let mut dh = dtop[t].clone();
                let mut dc = vec![S::zero(); p.hidden()];
                for s in (lo..=t).rev() {
                    let (local, dc_prev) = lstm_local(caches[s], &dh, &dc);
                    acc.add(s, &local);
                    if s > lo {
                        dh = lstm_dh_prev(p, &local);
                        dc = dc_prev;
                    }
                }
            }
            finish_lstm(p, g, &acc, &trace.inputs, |s| &caches[s].h_prev, &mut dx);
        }
        (CellParams::Gru(p), CellParams::Gru(g)) => {
            let caches: Vec<&GruCache<S>> = trace.caches.iter().map(gru).collect();
            let hidden = p.update.hidden();
            let mut acc_r = vec![vec![S::zero(); hidden]; n];
            let mut acc_z = vec![vec![S::zero(); hidden]; n];
            let mut acc_h = vec![vec![S::zero(); hidden]; n];
            for t in 0..n {
                let lo = window_start(t, k);
                let mut dh = dtop[t].clone();
                for s in (lo..=t).rev() {
                    let c = caches[s];
                    let one = S::one();
                    let mut a_z = vec![S::zero(); hidden];
                    let mut a_h = vec![S::zero(); hidden];
                    for i in 0..hidden {
                        let dz = dh[i] * (c.h_prev[i] - c.candidate[i]);
                        a_z[i] = dz * c.z[i] * (one - c.z[i]);
                        let dcand = dh[i] * (one - c.z[i]);
                        a_h[i] = dcand * (one - c.candidate[i] * c.candidate[i]);
                    }
                    let mut d_reset_h = vec![S::zero(); hidden];
                    p.candidate.w_h.matvec_t_acc(&a_h, &mut d_reset_h);
                    let a_r: Vec<S> = (0..hidden)
                        .map(|i| d_reset_h[i] * c.h_prev[i] * c.r[i] * (one - c.r[i]))
                        .collect();
                    add_into(&mut acc_r[s], &a_r);
                    add_into(&mut acc_z[s], &a_z);
                    add_into(&mut acc_h[s], &a_h);
                    if s > lo {
                        let mut prev: Vec<S> = (0..hidden)
                            .map(|i| dh[i] * c.z[i] + d_reset_h[i] * c.r[i])
                            .collect();
                        p.reset.w_h.matvec_t_acc(&a_r, &mut prev);
                        p.update.w_h.matvec_t_acc(&a_z, &mut prev);
                        dh = prev;
                    }
                }
            }
            finish_gate(
                &p.reset,
                &mut g.reset,
                &acc_r,
                &trace.inputs,
                |s| &caches[s].h_prev,
                &mut dx,
            );
            finish_gate(
                &p.update,
                &mut g.update,
                &acc_z,
                &trace.inputs,
                |s| &caches[s].h_prev,
                &mut dx,
            );
            finish_gate(
                &p.candidate,
                &mut g.candidate,
                &acc_h,
                &trace.inputs,
                |s| &caches[s].reset_h,
                &mut dx,
            );
        }
        (CellParams::DeepLstm(p), CellParams::DeepLstm(g)) => {
            let caches: Vec<_> = trace
                .caches
                .iter()
                .map(|c| match c {
                    StepCache::DeepLstm(d) => d,
                    _ => unreachable!("cache kind differs from cell kind"),
                })
                .collect();
            let h1 = p.lower.hidden();
            let h2 = p.upper.hidden();
            let mut acc_lo = LstmDeltas::zeros(n, h1);
            let mut acc_up = LstmDeltas::zeros(n, h2);
            // Gradient at the upper layer's input, summed per step.
            let mut dup_in = vec![vec![S::zero(); h2]; n];
            for t in 0..n {
                let lo = window_start(t, k);
                let mut dh2 = dtop[t].clone();
                let mut dc2 = vec![S::zero(); h2];
                let mut dh1 = vec![S::zero(); h1];
                let mut dc1 = vec![S::zero(); h1];
                for s in (lo..=t).rev() {
                    let c = caches[s];
                    let (up, dc2_prev) = lstm_local(&c.upper, &dh2, &dc2);
                    acc_up.add(s, &up);
                    let mut dx2 = vec![S::zero(); h2];
                    for (gate, a) in p.upper.gates().into_iter().zip(&up) {
                        gate.w_x.matvec_t_acc(a, &mut dx2);
                    }
                    add_into(&mut dup_in[s], &dx2);
                    p.interlayer.matvec_t_acc(&dx2, &mut dh1);
                    let (low, dc1_prev) = lstm_local(&c.lower, &dh1, &dc1);
                    acc_lo.add(s, &low);
                    if s > lo {
                        dh2 = lstm_dh_prev(&p.upper, &up);
                        dc2 = dc2_prev;
                        dh1 = lstm_dh_prev(&p.lower, &low);
                        dc1 = dc1_prev;
                    }
                }
            }
            let upper_inputs: Vec<Vec<S>> = caches.iter().map(|c| c.upper_input.clone()).collect();
            let mut unused = vec![vec![S::zero(); h2]; n];
            finish_lstm(
                &p.upper,
                &mut g.upper,
                &acc_up,
                &upper_inputs,
                |s| &caches[s].upper.h_prev,
                &mut unused,
            );
            for s in 0..n {
                g.interlayer.add_outer(&dup_in[s], &caches[s].lower.h);
            }
            finish_lstm(
                &p.lower,
                &mut g.lower,
                &acc_lo,
                &trace.inputs,
                |s| &caches[s].lower.h_prev,
                &mut dx,
            );
        }
        _ => unreachable!("gradient buffer kind differs from cell kind"),
    }

    scatter_inputs(model, trace, &dx, grads);
    Ok(loss)
}

/// First step that loss `t` still reaches with depth `k`.
#[inline]
fn window_start(t: usize, k: usize) -> usize {
    (t + 1).saturating_sub(k)
}

#[inline]
fn add_into<S: Scalar>(acc: &mut [S], v: &[S]) {
    axpy(S::one(), v, acc);
}

fn elman<S>(c: &StepCache<S>) -> &ElmanCache<S> {
    match c {
        StepCache::Elman(c) => c,
        _ => unreachable!("cache kind differs from cell kind"),
    }
}

fn lstm<S>(c: &StepCache<S>) -> &LstmCache<S> {
    match c {
        StepCache::Lstm(c) => c,
        _ => unreachable!("cache kind differs from cell kind"),
    }
}

fn gru<S>(c: &StepCache<S>) -> &GruCache<S> {
    match c {
        StepCache::Gru(c) => c,
        _ => unreachable!("cache kind differs from cell kind"),
    }
}

/// Per-step pre-activation deltas of the four LSTM gates (i, o, f, j).
struct LstmDeltas<S> {
    gates: [Vec<Vec<S>>; 4],
}

impl<S: Scalar> LstmDeltas<S> {
    fn zeros(n: usize, hidden: usize) -> Self {
        let z = || vec![vec![S::zero(); hidden]; n];
        LstmDeltas {
            gates: [z(), z(), z(), z()],
        }
    }

    fn add(&mut self, s: usize, local: &[Vec<S>; 4]) {
        for (acc, a) in self.gates.iter_mut().zip(local) {
            add_into(&mut acc[s], a);
        }
    }
}

/// Gate deltas of one LSTM step given the gradients arriving at `h` and `c`,
/// plus the gradient passed on to `c_prev`.
fn lstm_local<S: Scalar>(c: &LstmCache<S>, dh: &[S], dc: &[S]) -> ([Vec<S>; 4], Vec<S>) {
    let n = dh.len();
    let one = S::one();
    let mut a = [
        vec![S::zero(); n],
        vec![S::zero(); n],
        vec![S::zero(); n],
        vec![S::zero(); n],
    ];
    let mut dc_prev = vec![S::zero(); n];
    for k in 0..n {
        let d_o = dh[k] * c.tanh_c[k];
        let dct = dc[k] + dh[k] * c.o[k] * (one - c.tanh_c[k] * c.tanh_c[k]);
        a[0][k] = dct * c.j[k] * c.i[k] * (one - c.i[k]);
        a[1][k] = d_o * c.o[k] * (one - c.o[k]);
        a[2][k] = dct * c.c_prev[k] * c.f[k] * (one - c.f[k]);
        a[3][k] = dct * c.i[k] * (one - c.j[k] * c.j[k]);
        dc_prev[k] = dct * c.f[k];
    }
    (a, dc_prev)
}

fn lstm_dh_prev<S: Scalar>(p: &LstmParams<S>, local: &[Vec<S>; 4]) -> Vec<S> {
    let mut dh = vec![S::zero(); p.hidden()];
    for (gate, a) in p.gates().into_iter().zip(local) {
        gate.w_h.matvec_t_acc(a, &mut dh);
    }
    dh
}

fn finish_lstm<'a, S: Scalar>(
    p: &LstmParams<S>,
    g: &mut LstmParams<S>,
    acc: &LstmDeltas<S>,
    inputs: &[Vec<S>],
    h_prev: impl Fn(usize) -> &'a [S] + Copy,
    dx: &mut [Vec<S>],
) where
    S: 'a,
{
    for ((pg, gg), a) in p.gates().into_iter().zip(g.gates_mut()).zip(&acc.gates) {
        finish_gate(pg, gg, a, inputs, h_prev, dx);
    }
}

/// Weight, bias and input gradients of one gate from its summed deltas.
fn finish_gate<'a, S: Scalar>(
    p: &Gate<S>,
    g: &mut Gate<S>,
    acc: &[Vec<S>],
    inputs: &[Vec<S>],
    h_in: impl Fn(usize) -> &'a [S],
    dx: &mut [Vec<S>],
) where
    S: 'a,
{
    for (s, a) in acc.iter().enumerate() {
        g.w_x.add_outer(a, &inputs[s]);
        g.w_h.add_outer(a, h_in(s));
        add_into(&mut g.b, a);
        p.w_x.matvec_t_acc(a, &mut dx[s]);
    }
}

/// Routes input gradients to the embedding rows of each window slot.
fn scatter_inputs<S: Scalar>(
    model: &TaggerModel<S>,
    trace: &ForwardTrace<S>,
    dx: &[Vec<S>],
    grads: &mut GradientSet<S>,
) {
    let wd = model.config.word_dim;
    let ld = model.config.lang_dim;
    for (ids, d) in trace.windows.iter().zip(dx) {
        for (slot, &w) in ids.words.iter().enumerate() {
            add_into(grads.words.row_mut(w), &d[slot * wd..(slot + 1) * wd]);
        }
        if let (Some(rows), Some(table)) = (&ids.lang_rows, grads.langs.as_mut()) {
            let base = ids.words.len() * wd;
            for (slot, &r) in rows.iter().enumerate() {
                add_into(
                    table.row_mut(r),
                    &d[base + slot * ld..base + (slot + 1) * ld],
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Granularity, LabelSet, Normalizer, TagSet, Vocabulary};
    use crate::models::{CellKind, ModelConfig};
    use crate::numerics::SeededRng;
    use crate::training::{gradient_check, truncated_loss};

    fn model(cell: CellKind, lang: bool, seed: u64) -> TaggerModel<f64> {
        let cfg = ModelConfig {
            cell,
            word_dim: 5,
            hidden: 5,
            window: 3,
            lang_feature: lang,
            lang_dim: 3,
            upper_hidden: 4,
            ..Default::default()
        };
        let mut rng = SeededRng::new(seed);
        let mut m = TaggerModel::new(
            cfg,
            Vocabulary::from_words(["a", "b", "c", "d", "e", "f", "g"]),
            TagSet::new(Granularity::Coarse, ["N", "V", "X", "P"]),
            LabelSet::new(["en", "hi"]),
            Normalizer::default(),
            &mut rng,
        )
        .unwrap();
        for (_, data) in m.params.tensors_mut() {
            data.iter_mut().for_each(|v| *v = rng.normal(0.0, 0.6));
        }
        m
    }

    fn sentence(
        m: &TaggerModel<f64>,
        n: usize,
        rng: &mut SeededRng,
    ) -> (EncodedSentence, Vec<usize>) {
        let words = (0..n).map(|_| rng.below(m.vocab.len())).collect();
        let langs = m
            .config
            .lang_feature
            .then(|| (0..n).map(|_| rng.below(2)).collect());
        let tags: Vec<usize> = (0..n).map(|_| rng.below(m.tagset.len())).collect();
        (
            EncodedSentence {
                words,
                langs,
                tags: Some(tags.clone()),
            },
            tags,
        )
    }

    #[test]
    fn analytic_matches_finite_differences() {
        for cell in CellKind::ALL {
            for lang in [false, true] {
                for k in [1, 2, 7] {
                    let m = model(cell, lang, 3);
                    let mut rng = SeededRng::new(9);
                    let (enc, gold) = sentence(&m, 6, &mut rng);
                    let r = gradient_check(&m, &enc, &gold, k, 200, &mut rng).unwrap();
                    let w = r.worst().unwrap();
                    assert!(
                        r.max_rel_error < 1e-4,
                        "{cell} lang={lang} k={k}: {} [{}] analytic {} numeric {}",
                        w.tensor,
                        w.index,
                        w.analytic,
                        w.numeric
                    );
                }
            }
        }
    }

    #[test]
    fn deep_truncation_equals_full_bptt() {
        for cell in CellKind::ALL {
            let m = model(cell, true, 5);
            let mut rng = SeededRng::new(2);
            let (enc, gold) = sentence(&m, 6, &mut rng);
            let a = backward_tbptt(&m, &enc, &gold, 6).unwrap().grads;
            let b = backward_tbptt(&m, &enc, &gold, 50).unwrap().grads;
            assert!(a == b, "{cell}");
        }
    }

    #[test]
    fn truncation_changes_recurrent_gradient() {
        let m = model(CellKind::Elman, false, 4);
        let mut rng = SeededRng::new(1);
        let (enc, gold) = sentence(&m, 2, &mut rng);
        let full = backward_tbptt(&m, &enc, &gold, 2).unwrap().grads;
        let cut = backward_tbptt(&m, &enc, &gold, 1).unwrap().grads;
        // Token 1's loss no longer reaches step 0. Step 0 sees W_hh only
        // through the zero initial state, so only W_xh, b and the
        // embeddings notice.
        let CellParams::Elman(c) = &cut.cell else {
            unreachable!()
        };
        let CellParams::Elman(f) = &full.cell else {
            unreachable!()
        };
        assert!(c.hidden.b != f.hidden.b);
        assert!(c.hidden.w_x != f.hidden.w_x);
        assert!(c.hidden.w_h == f.hidden.w_h);
        let base: Vec<_> = m
            .forward_trace(&enc)
            .unwrap()
            .caches
            .iter()
            .map(|c| c.state())
            .collect();
        let l1 = truncated_loss(&m, &base, &enc, &gold, 1).unwrap();
        let l2 = truncated_loss(&m, &base, &enc, &gold, 2).unwrap();
        assert!(
            (l1 - l2).abs() < 1e-12,
            "truncation must not change the loss value"
        );
    }

    #[test]
    fn confident_correct_predictions_give_zero_gradient() {
        for cell in CellKind::ALL {
            let mut m = model(cell, true, 8);
            m.params.output.w_hy.fill_zero();
            m.params.output.b_y.iter_mut().for_each(|b| *b = 0.0);
            m.params.output.b_y[2] = 1000.0;
            let mut rng = SeededRng::new(3);
            let (enc, _) = sentence(&m, 5, &mut rng);
            let gold = vec![2; 5];
            let bp = backward_tbptt(&m, &enc, &gold, 7).unwrap();
            assert_eq!(bp.loss.total, 0.0);
            assert!(
                bp.grads
                    .tensors()
                    .iter()
                    .all(|t| t.data.iter().all(|&v| v == 0.0)),
                "{cell}"
            );
        }
    }

    #[test]
    fn pad_rows_receive_gradient() {
        let m = model(CellKind::Gru, false, 2);
        let mut rng = SeededRng::new(4);
        let (enc, gold) = sentence(&m, 3, &mut rng);
        let g = backward_tbptt(&m, &enc, &gold, 7).unwrap().grads;
        for pad in [crate::corpus::PAD_L, crate::corpus::PAD_R] {
            assert!(g.words.row(pad).iter().any(|&v| v != 0.0));
        }
    }
}
