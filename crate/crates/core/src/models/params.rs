use crate::embeddings::EmbeddingTable;
use crate::numerics::{gaussian_init, Matrix, Scalar, SeededRng, Vector};

use super::cells::{CellParams, DeepLstmParams, ElmanParams, Gate, GruParams, LstmParams};
use super::config::ModelConfig;

/// `y = softmax(W_hy h + b_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputLayer<S> {
    pub w_hy: Matrix<S>,
    pub b_y: Vector<S>,
}

impl<S: Scalar> OutputLayer<S> {
    pub fn init(tags: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        OutputLayer {
            w_hy: gaussian_init(tags, hidden, rng),
            b_y: Vector::zeros(tags),
        }
    }

    /// Unnormalized scores for every tag.
    pub fn logits(&self, h: &[S]) -> Vec<S> {
        let mut out = self.b_y.to_vec();
        self.w_hy.matvec_acc(h, &mut out);
        out
    }
}

/// Every trainable tensor of a tagger. Also used, zero-filled, as the
/// gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<S> {
    /// Word rows, including UNK and the two boundary pads.
    pub words: EmbeddingTable<S>,
    /// Row 0 is the boundary pad; language `k` lives in row `k + 1`.
    pub langs: Option<EmbeddingTable<S>>,
    pub cell: CellParams<S>,
    pub output: OutputLayer<S>,
}

/// Name, shape and values of one tensor in manifest order.
pub struct TensorRef<'a, S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [S],
}

impl<S: Scalar> Params<S> {
    pub fn init(
        cfg: &ModelConfig,
        vocab_size: usize,
        num_langs: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let words = EmbeddingTable::init_random(vocab_size, cfg.word_dim, rng);
        let langs = cfg
            .lang_feature
            .then(|| EmbeddingTable::init_random(num_langs + 1, cfg.lang_dim, rng));
        let cell = CellParams::init(cfg, rng);
        let output = OutputLayer::init(cfg.num_tags, cfg.top_hidden(), rng);
        Params {
            words,
            langs,
            cell,
            output,
        }
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill_zero();
        z
    }

    pub fn fill_zero(&mut self) {
        for (_, data) in self.tensors_mut() {
            data.iter_mut().for_each(|v| *v = S::zero());
        }
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_, S>> {
        let mut out = Vec::new();
        walk(self, &mut |name, shape, data| {
            out.push(TensorRef {
                name: name.to_string(),
                shape: shape.to_vec(),
                data,
            })
        });
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [S])> {
        let mut out = Vec::new();
        walk_mut(self, &mut out);
        out
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    pub fn cast<T: Scalar>(&self) -> Params<T> {
        Params::<T> {
            words: EmbeddingTable::from_matrix(self.words.matrix().cast()),
            langs: self
                .langs
                .as_ref()
                .map(|t| EmbeddingTable::from_matrix(t.matrix().cast())),
            cell: cast_cell(&self.cell),
            output: OutputLayer {
                w_hy: self.output.w_hy.cast(),
                b_y: Vector(
                    self.output
                        .b_y
                        .iter()
                        .map(|v| T::of(v.to_f64_lossless()))
                        .collect(),
                ),
            },
        }
    }
}

fn gate_names(prefix: &str, suffix: &str) -> [String; 3] {
    [
        format!("{prefix}W_x{suffix}"),
        format!("{prefix}W_h{suffix}"),
        format!("{prefix}b_{suffix}"),
    ]
}

fn walk_gate<'a, S: Scalar>(
    g: &'a Gate<S>,
    prefix: &str,
    suffix: &str,
    f: &mut dyn FnMut(&str, &[usize], &'a [S]),
) {
    let [wx, wh, b] = gate_names(prefix, suffix);
    f(&wx, &[g.w_x.rows(), g.w_x.cols()], g.w_x.as_slice());
    f(&wh, &[g.w_h.rows(), g.w_h.cols()], g.w_h.as_slice());
    f(&b, &[g.b.len()], &g.b);
}

const LSTM_SUFFIXES: [&str; 4] = ["i", "o", "f", "j"];
const GRU_SUFFIXES: [&str; 3] = ["r", "z", "h"];

fn walk<'a, S: Scalar>(p: &'a Params<S>, f: &mut dyn FnMut(&str, &[usize], &'a [S])) {
    let w = p.words.matrix();
    f("words", &[w.rows(), w.cols()], w.as_slice());
    if let Some(l) = &p.langs {
        let m = l.matrix();
        f("langs", &[m.rows(), m.cols()], m.as_slice());
    }
    match &p.cell {
        CellParams::Elman(c) => walk_gate(&c.hidden, "cell.", "h", f),
        CellParams::Lstm(c) => {
            for (g, s) in c.gates().into_iter().zip(LSTM_SUFFIXES) {
                walk_gate(g, "cell.", s, f);
            }
        }
        CellParams::Gru(c) => {
            for (g, s) in c.gates().into_iter().zip(GRU_SUFFIXES) {
                walk_gate(g, "cell.", s, f);
            }
        }
        CellParams::DeepLstm(c) => {
            for (g, s) in c.lower.gates().into_iter().zip(LSTM_SUFFIXES) {
                walk_gate(g, "cell.lower.", s, f);
            }
            let m = &c.interlayer;
            f("cell.interlayer", &[m.rows(), m.cols()], m.as_slice());
            for (g, s) in c.upper.gates().into_iter().zip(LSTM_SUFFIXES) {
                walk_gate(g, "cell.upper.", s, f);
            }
        }
    }
    let o = &p.output;
    f(
        "output.W_hy",
        &[o.w_hy.rows(), o.w_hy.cols()],
        o.w_hy.as_slice(),
    );
    f("output.b_y", &[o.b_y.len()], &o.b_y);
}

fn push_gate<'a, S: Scalar>(
    g: &'a mut Gate<S>,
    prefix: &str,
    suffix: &str,
    out: &mut Vec<(String, &'a mut [S])>,
) {
    let [wx, wh, b] = gate_names(prefix, suffix);
    out.push((wx, g.w_x.as_mut_slice()));
    out.push((wh, g.w_h.as_mut_slice()));
    out.push((b, &mut g.b.0));
}

fn walk_mut<'a, S: Scalar>(p: &'a mut Params<S>, out: &mut Vec<(String, &'a mut [S])>) {
    out.push(("words".into(), p.words.matrix_mut().as_mut_slice()));
    if let Some(l) = &mut p.langs {
        out.push(("langs".into(), l.matrix_mut().as_mut_slice()));
    }
    match &mut p.cell {
        CellParams::Elman(c) => push_gate(&mut c.hidden, "cell.", "h", out),
        CellParams::Lstm(c) => {
            for (g, s) in c.gates_mut().into_iter().zip(LSTM_SUFFIXES) {
                push_gate(g, "cell.", s, out);
            }
        }
        CellParams::Gru(c) => {
            for (g, s) in c.gates_mut().into_iter().zip(GRU_SUFFIXES) {
                push_gate(g, "cell.", s, out);
            }
        }
        CellParams::DeepLstm(c) => {
            for (g, s) in c.lower.gates_mut().into_iter().zip(LSTM_SUFFIXES) {
                push_gate(g, "cell.lower.", s, out);
            }
            out.push(("cell.interlayer".into(), c.interlayer.as_mut_slice()));
            for (g, s) in c.upper.gates_mut().into_iter().zip(LSTM_SUFFIXES) {
                push_gate(g, "cell.upper.", s, out);
            }
        }
    }
    out.push(("output.W_hy".into(), p.output.w_hy.as_mut_slice()));
    out.push(("output.b_y".into(), &mut p.output.b_y.0));
}

fn cast_gate<S: Scalar, T: Scalar>(g: &Gate<S>) -> Gate<T> {
    Gate {
        w_x: g.w_x.cast(),
        w_h: g.w_h.cast(),
        b: Vector(g.b.iter().map(|v| T::of(v.to_f64_lossless())).collect()),
    }
}

fn cast_lstm<S: Scalar, T: Scalar>(p: &LstmParams<S>) -> LstmParams<T> {
    LstmParams {
        input: cast_gate(&p.input),
        output: cast_gate(&p.output),
        forget: cast_gate(&p.forget),
        content: cast_gate(&p.content),
    }
}

fn cast_cell<S: Scalar, T: Scalar>(c: &CellParams<S>) -> CellParams<T> {
    match c {
        CellParams::Elman(p) => CellParams::Elman(ElmanParams {
            hidden: cast_gate(&p.hidden),
        }),
        CellParams::Lstm(p) => CellParams::Lstm(cast_lstm(p)),
        CellParams::Gru(p) => CellParams::Gru(GruParams {
            reset: cast_gate(&p.reset),
            update: cast_gate(&p.update),
            candidate: cast_gate(&p.candidate),
        }),
        CellParams::DeepLstm(p) => CellParams::DeepLstm(DeepLstmParams {
            lower: cast_lstm(&p.lower),
            interlayer: p.interlayer.cast(),
            upper: cast_lstm(&p.upper),
        }),
    }
}
