//! Part-of-speech tagging for code-mixed social-media text with windowed
//! recurrent taggers (Elman, LSTM, two-layer LSTM, GRU).
//!
//! The numeric core is generic over [`numerics::Scalar`] (`f32` or `f64`).
//! Training and tagging use `f32`; gradient checks use `f64`.

pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod models;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};

pub type Matrix32 = numerics::Matrix<f32>;
pub type Matrix64 = numerics::Matrix<f64>;
pub type Vector32 = numerics::Vector<f32>;
pub type Vector64 = numerics::Vector<f64>;
pub type Tagger = models::TaggerModel<f32>;
pub type Tagger64 = models::TaggerModel<f64>;
pub type Params32 = models::Params<f32>;
pub type Params64 = models::Params<f64>;
pub type Embeddings32 = embeddings::EmbeddingTable<f32>;
