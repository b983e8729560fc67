//! Recurrent cells, window assembly, output layer, forward pass, and model files.

mod cells;
mod config;
mod file;
mod model;
mod params;

pub use cells::{
    cell_step, deep_lstm_step, elman_step, gru_step, lstm_step, CellParams, DeepLstmCache,
    DeepLstmParams, ElmanCache, ElmanParams, Gate, GruCache, GruParams, HiddenState, LayerState,
    LstmCache, LstmParams, StepCache,
};
pub use config::{CellKind, ModelConfig};
pub use file::{
    inspect_bytes, InspectReport, ManifestEntry, ModelFileError, ModelHeader, MAGIC, VERSION,
};
pub use model::{argmax, output_distribution, ForwardTrace, TaggerModel, WindowIds, LANG_PAD_ROW};
pub use params::{OutputLayer, Params, TensorRef};
