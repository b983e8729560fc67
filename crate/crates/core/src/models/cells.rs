//! Recurrent cells: Elman, LSTM, two-layer LSTM and GRU.
//!
//! Each step returns a cache holding every intermediate the backward pass
//! needs; the new hidden state is read off the cache.

use crate::error::Result;
use crate::numerics::{
    gaussian_init, orthogonal_init, sigmoid_scalar, Matrix, Scalar, SeededRng, ShapeError, Vector,
};

/// Input weights, recurrent weights and bias of one gate or candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate<S> {
    pub w_x: Matrix<S>,
    pub w_h: Matrix<S>,
    pub b: Vector<S>,
}

impl<S: Scalar> Gate<S> {
    /// Square matrices orthogonal, others Gaussian, bias zero.
    pub fn init(hidden: usize, input: usize, rng: &mut SeededRng) -> Self {
        let w_x = if hidden == input {
            orthogonal_init(hidden, rng)
        } else {
            gaussian_init(hidden, input, rng)
        };
        Gate {
            w_x,
            w_h: orthogonal_init(hidden, rng),
            b: Vector::zeros(hidden),
        }
    }

    pub fn zeros(hidden: usize, input: usize) -> Self {
        Gate {
            w_x: Matrix::zeros(hidden, input),
            w_h: Matrix::zeros(hidden, hidden),
            b: Vector::zeros(hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.rows()
    }

    pub fn input(&self) -> usize {
        self.w_x.cols()
    }

    /// `W_x x + W_h h + b`.
    #[inline]
    pub fn preactivation(&self, x: &[S], h: &[S]) -> Vec<S> {
        let mut a = self.b.to_vec();
        self.w_x.matvec_acc(x, &mut a);
        self.w_h.matvec_acc(h, &mut a);
        a
    }

    fn check(&self, op: &'static str, x: usize, h: usize) -> Result<(), ShapeError> {
        if self.w_x.cols() != x || self.w_h.cols() != h || self.w_x.rows() != self.w_h.rows() {
            return Err(ShapeError {
                op,
                left_rows: self.w_x.rows(),
                left_cols: self.w_x.cols(),
                right: format!("input {x}, hidden {h}"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElmanParams<S> {
    pub hidden: Gate<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<S> {
    pub input: Gate<S>,
    pub output: Gate<S>,
    pub forget: Gate<S>,
    /// New memory content `j`.
    pub content: Gate<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<S> {
    pub reset: Gate<S>,
    pub update: Gate<S>,
    pub candidate: Gate<S>,
}

/// Two stacked LSTMs joined by a matrix transform of the lower output.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepLstmParams<S> {
    pub lower: LstmParams<S>,
    pub interlayer: Matrix<S>,
    pub upper: LstmParams<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellParams<S> {
    Elman(ElmanParams<S>),
    Lstm(LstmParams<S>),
    DeepLstm(DeepLstmParams<S>),
    Gru(GruParams<S>),
}

/// `h` and, for LSTM layers, the memory `c` of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState<S> {
    pub h: Vec<S>,
    pub c: Vec<S>,
}

/// Recurrent state; one entry per layer, the last is the top layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState<S> {
    pub layers: Vec<LayerState<S>>,
}

impl<S: Scalar> HiddenState<S> {
    pub fn top(&self) -> &[S] {
        &self.layers.last().expect("state has a layer").h
    }

    pub fn scale(&mut self, by: S) {
        for l in &mut self.layers {
            l.h.iter_mut().for_each(|v| *v *= by);
            l.c.iter_mut().for_each(|v| *v *= by);
        }
    }
}

#[derive(Debug, Clone)]
pub struct ElmanCache<S> {
    pub h_prev: Vec<S>,
    pub h: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct LstmCache<S> {
    pub h_prev: Vec<S>,
    pub c_prev: Vec<S>,
    pub i: Vec<S>,
    pub o: Vec<S>,
    pub f: Vec<S>,
    pub j: Vec<S>,
    pub c: Vec<S>,
    pub tanh_c: Vec<S>,
    pub h: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct GruCache<S> {
    pub h_prev: Vec<S>,
    pub r: Vec<S>,
    pub z: Vec<S>,
    pub candidate: Vec<S>,
    /// `r ⊙ h_prev`, the recurrent input of the candidate.
    pub reset_h: Vec<S>,
    pub h: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct DeepLstmCache<S> {
    pub lower: LstmCache<S>,
    pub upper_input: Vec<S>,
    pub upper: LstmCache<S>,
}

#[derive(Debug, Clone)]
pub enum StepCache<S> {
    Elman(ElmanCache<S>),
    Lstm(LstmCache<S>),
    DeepLstm(DeepLstmCache<S>),
    Gru(GruCache<S>),
}

impl<S: Scalar> StepCache<S> {
    pub fn state(&self) -> HiddenState<S> {
        let plain = |h: &[S]| LayerState {
            h: h.to_vec(),
            c: Vec::new(),
        };
        let lstm = |c: &LstmCache<S>| LayerState {
            h: c.h.clone(),
            c: c.c.clone(),
        };
        let layers = match self {
            StepCache::Elman(c) => vec![plain(&c.h)],
            StepCache::Gru(c) => vec![plain(&c.h)],
            StepCache::Lstm(c) => vec![lstm(c)],
            StepCache::DeepLstm(c) => vec![lstm(&c.lower), lstm(&c.upper)],
        };
        HiddenState { layers }
    }

    pub fn top(&self) -> &[S] {
        match self {
            StepCache::Elman(c) => &c.h,
            StepCache::Gru(c) => &c.h,
            StepCache::Lstm(c) => &c.h,
            StepCache::DeepLstm(c) => &c.upper.h,
        }
    }
}

#[inline]
fn sigm_in_place<S: Scalar>(v: &mut [S]) {
    v.iter_mut().for_each(|x| *x = sigmoid_scalar(*x));
}

#[inline]
fn tanh_in_place<S: Scalar>(v: &mut [S]) {
    v.iter_mut().for_each(|x| *x = x.tanh());
}

impl<S: Scalar> ElmanParams<S> {
    pub fn init(hidden: usize, input: usize, rng: &mut SeededRng) -> Self {
        ElmanParams {
            hidden: Gate::init(hidden, input, rng),
        }
    }

    pub fn forward(&self, x: &[S], h_prev: &[S]) -> ElmanCache<S> {
        let mut h = self.hidden.preactivation(x, h_prev);
        sigm_in_place(&mut h);
        ElmanCache {
            h_prev: h_prev.to_vec(),
            h,
        }
    }
}

impl<S: Scalar> LstmParams<S> {
    pub fn init(hidden: usize, input: usize, rng: &mut SeededRng) -> Self {
        LstmParams {
            input: Gate::init(hidden, input, rng),
            output: Gate::init(hidden, input, rng),
            forget: Gate::init(hidden, input, rng),
            content: Gate::init(hidden, input, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.input.hidden()
    }

    pub fn gates(&self) -> [&Gate<S>; 4] {
        [&self.input, &self.output, &self.forget, &self.content]
    }

    pub fn gates_mut(&mut self) -> [&mut Gate<S>; 4] {
        [
            &mut self.input,
            &mut self.output,
            &mut self.forget,
            &mut self.content,
        ]
    }

    pub fn forward(&self, x: &[S], h_prev: &[S], c_prev: &[S]) -> LstmCache<S> {
        let mut i = self.input.preactivation(x, h_prev);
        sigm_in_place(&mut i);
        let mut o = self.output.preactivation(x, h_prev);
        sigm_in_place(&mut o);
        let mut f = self.forget.preactivation(x, h_prev);
        sigm_in_place(&mut f);
        let mut j = self.content.preactivation(x, h_prev);
        tanh_in_place(&mut j);
        let c: Vec<S> = (0..i.len())
            .map(|k| c_prev[k] * f[k] + i[k] * j[k])
            .collect();
        let tanh_c: Vec<S> = c.iter().map(|v| v.tanh()).collect();
        let h = tanh_c.iter().zip(&o).map(|(&t, &g)| t * g).collect();
        LstmCache {
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            o,
            f,
            j,
            c,
            tanh_c,
            h,
        }
    }

    fn check(&self, x: usize, h: usize) -> Result<(), ShapeError> {
        for g in self.gates() {
            g.check("lstm_step", x, h)?;
        }
        Ok(())
    }
}

impl<S: Scalar> GruParams<S> {
    pub fn init(hidden: usize, input: usize, rng: &mut SeededRng) -> Self {
        GruParams {
            reset: Gate::init(hidden, input, rng),
            update: Gate::init(hidden, input, rng),
            candidate: Gate::init(hidden, input, rng),
        }
    }

    pub fn gates(&self) -> [&Gate<S>; 3] {
        [&self.reset, &self.update, &self.candidate]
    }

    pub fn gates_mut(&mut self) -> [&mut Gate<S>; 3] {
        [&mut self.reset, &mut self.update, &mut self.candidate]
    }

    /// `h = z ⊙ h_prev + (1 − z) ⊙ h̃`; the update gate keeps the old state.
    pub fn forward(&self, x: &[S], h_prev: &[S]) -> GruCache<S> {
        let mut r = self.reset.preactivation(x, h_prev);
        sigm_in_place(&mut r);
        let mut z = self.update.preactivation(x, h_prev);
        sigm_in_place(&mut z);
        let reset_h: Vec<S> = r.iter().zip(h_prev).map(|(&a, &b)| a * b).collect();
        let mut candidate = self.candidate.preactivation(x, &reset_h);
        tanh_in_place(&mut candidate);
        let h = (0..z.len())
            .map(|k| z[k] * h_prev[k] + (S::one() - z[k]) * candidate[k])
            .collect();
        GruCache {
            h_prev: h_prev.to_vec(),
            r,
            z,
            candidate,
            reset_h,
            h,
        }
    }
}

impl<S: Scalar> DeepLstmParams<S> {
    /// `upper_hidden` is both the upper layer's size and the width of the
    /// transformed lower output.
    pub fn init(hidden: usize, upper_hidden: usize, input: usize, rng: &mut SeededRng) -> Self {
        let lower = LstmParams::init(hidden, input, rng);
        let interlayer = gaussian_init(upper_hidden, hidden, rng);
        let upper = LstmParams::init(upper_hidden, upper_hidden, rng);
        DeepLstmParams {
            lower,
            interlayer,
            upper,
        }
    }

    pub fn forward(&self, x: &[S], prev: &HiddenState<S>) -> DeepLstmCache<S> {
        let lo = &prev.layers[0];
        let up = &prev.layers[1];
        let lower = self.lower.forward(x, &lo.h, &lo.c);
        let mut upper_input = vec![S::zero(); self.interlayer.rows()];
        self.interlayer.matvec_acc(&lower.h, &mut upper_input);
        let upper = self.upper.forward(&upper_input, &up.h, &up.c);
        DeepLstmCache {
            lower,
            upper_input,
            upper,
        }
    }
}

impl<S: Scalar> CellParams<S> {
    pub fn init(cfg: &crate::models::ModelConfig, rng: &mut SeededRng) -> Self {
        use crate::models::CellKind;
        let input = cfg.input_dim();
        match cfg.cell {
            CellKind::Elman => CellParams::Elman(ElmanParams::init(cfg.hidden, input, rng)),
            CellKind::Lstm => CellParams::Lstm(LstmParams::init(cfg.hidden, input, rng)),
            CellKind::Gru => CellParams::Gru(GruParams::init(cfg.hidden, input, rng)),
            CellKind::DeepLstm => CellParams::DeepLstm(DeepLstmParams::init(
                cfg.hidden,
                cfg.upper_hidden,
                input,
                rng,
            )),
        }
    }

    /// All-zero initial state shaped for this cell.
    pub fn initial_state(&self) -> HiddenState<S> {
        let layer = |n: usize, memory: bool| LayerState {
            h: vec![S::zero(); n],
            c: if memory {
                vec![S::zero(); n]
            } else {
                Vec::new()
            },
        };
        let layers = match self {
            CellParams::Elman(p) => vec![layer(p.hidden.hidden(), false)],
            CellParams::Gru(p) => vec![layer(p.reset.hidden(), false)],
            CellParams::Lstm(p) => vec![layer(p.hidden(), true)],
            CellParams::DeepLstm(p) => {
                vec![layer(p.lower.hidden(), true), layer(p.upper.hidden(), true)]
            }
        };
        HiddenState { layers }
    }

    /// Unchecked step; shapes must already agree.
    pub fn forward(&self, x: &[S], prev: &HiddenState<S>) -> StepCache<S> {
        match self {
            CellParams::Elman(p) => StepCache::Elman(p.forward(x, &prev.layers[0].h)),
            CellParams::Gru(p) => StepCache::Gru(p.forward(x, &prev.layers[0].h)),
            CellParams::Lstm(p) => {
                let l = &prev.layers[0];
                StepCache::Lstm(p.forward(x, &l.h, &l.c))
            }
            CellParams::DeepLstm(p) => StepCache::DeepLstm(p.forward(x, prev)),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            CellParams::Elman(p) => p.hidden.input(),
            CellParams::Gru(p) => p.reset.input(),
            CellParams::Lstm(p) => p.input.input(),
            CellParams::DeepLstm(p) => p.lower.input.input(),
        }
    }
}

fn check_state<S: Scalar>(
    op: &'static str,
    state: &HiddenState<S>,
    expected: &HiddenState<S>,
) -> Result<(), ShapeError> {
    let same = state.layers.len() == expected.layers.len()
        && state
            .layers
            .iter()
            .zip(&expected.layers)
            .all(|(a, b)| a.h.len() == b.h.len() && a.c.len() == b.c.len());
    if same {
        Ok(())
    } else {
        let shape = |s: &HiddenState<S>| {
            s.layers
                .iter()
                .map(|l| format!("h{} c{}", l.h.len(), l.c.len()))
                .collect::<Vec<_>>()
                .join(" / ")
        };
        Err(ShapeError {
            op,
            left_rows: expected.layers.len(),
            left_cols: expected.top().len(),
            right: format!("state [{}], expected [{}]", shape(state), shape(expected)),
        })
    }
}

fn check_input<S: Scalar>(
    op: &'static str,
    cell: &CellParams<S>,
    x: &[S],
) -> Result<(), ShapeError> {
    if x.len() != cell.input_dim() {
        return Err(ShapeError {
            op,
            left_rows: cell.initial_state().top().len(),
            left_cols: cell.input_dim(),
            right: format!("input of length {}", x.len()),
        });
    }
    Ok(())
}

/// `h_t = sigm(W_xh x_t + W_hh h_{t−1} + b_h)`.
pub fn elman_step<S: Scalar>(
    p: &ElmanParams<S>,
    x: &[S],
    h_prev: &[S],
) -> Result<Vec<S>, ShapeError> {
    p.hidden.check("elman_step", x.len(), h_prev.len())?;
    Ok(p.forward(x, h_prev).h)
}

/// One LSTM step; returns `(h_t, c_t)`.
pub fn lstm_step<S: Scalar>(
    p: &LstmParams<S>,
    x: &[S],
    h_prev: &[S],
    c_prev: &[S],
) -> Result<(Vec<S>, Vec<S>), ShapeError> {
    p.check(x.len(), h_prev.len())?;
    if c_prev.len() != h_prev.len() {
        return Err(ShapeError {
            op: "lstm_step",
            left_rows: h_prev.len(),
            left_cols: x.len(),
            right: format!("memory of length {}", c_prev.len()),
        });
    }
    let cache = p.forward(x, h_prev, c_prev);
    Ok((cache.h, cache.c))
}

pub fn gru_step<S: Scalar>(p: &GruParams<S>, x: &[S], h_prev: &[S]) -> Result<Vec<S>, ShapeError> {
    for g in p.gates() {
        g.check("gru_step", x.len(), h_prev.len())?;
    }
    Ok(p.forward(x, h_prev).h)
}

/// Two-layer step; returns the new per-layer state and the top `h`.
pub fn deep_lstm_step<S: Scalar>(
    p: &DeepLstmParams<S>,
    x: &[S],
    prev: &HiddenState<S>,
) -> Result<(HiddenState<S>, Vec<S>), ShapeError> {
    let cell = CellParams::DeepLstm(p.clone());
    check_input("deep_lstm_step", &cell, x)?;
    check_state("deep_lstm_step", prev, &cell.initial_state())?;
    p.lower.check(x.len(), prev.layers[0].h.len())?;
    p.upper.check(p.interlayer.rows(), prev.layers[1].h.len())?;
    let cache = StepCache::DeepLstm(p.forward(x, prev));
    let top = cache.top().to_vec();
    Ok((cache.state(), top))
}

/// Checked step for any cell kind.
pub fn cell_step<S: Scalar>(
    cell: &CellParams<S>,
    x: &[S],
    prev: &HiddenState<S>,
) -> Result<HiddenState<S>, ShapeError> {
    check_input("cell_step", cell, x)?;
    check_state("cell_step", prev, &cell.initial_state())?;
    Ok(cell.forward(x, prev).state())
}
