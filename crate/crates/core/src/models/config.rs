use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Elman,
    Lstm,
    DeepLstm,
    Gru,
}

impl CellKind {
    pub const ALL: [CellKind; 4] = [
        CellKind::Elman,
        CellKind::Lstm,
        CellKind::DeepLstm,
        CellKind::Gru,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Elman => "elman",
            CellKind::Lstm => "lstm",
            CellKind::DeepLstm => "deep-lstm",
            CellKind::Gru => "gru",
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CellKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                format!(
                    "invalid cell {s:?}; valid cells are: {}",
                    CellKind::ALL.map(CellKind::name).join(", ")
                )
            })
    }
}

/// Architecture hyper-parameters of a tagger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub cell: CellKind,
    pub word_dim: usize,
    pub hidden: usize,
    /// Context window width, odd.
    pub window: usize,
    pub num_tags: usize,
    pub lang_feature: bool,
    pub lang_dim: usize,
    /// Hidden size of the upper layer of a two-layer LSTM.
    pub upper_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            cell: CellKind::Gru,
            word_dim: 100,
            hidden: 100,
            window: 5,
            num_tags: 1,
            lang_feature: false,
            lang_dim: 16,
            upper_hidden: 100,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::Config(format!(
                "window must be odd and >= 1, got {}",
                self.window
            )));
        }
        let dims = [
            ("word_dim", self.word_dim),
            ("hidden", self.hidden),
            ("num_tags", self.num_tags),
            ("lang_dim", self.lang_dim),
            ("upper_hidden", self.upper_hidden),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Context words on each side of the target.
    pub fn half_window(&self) -> usize {
        (self.window - 1) / 2
    }

    /// Length of the cell input vector.
    pub fn input_dim(&self) -> usize {
        let lang = if self.lang_feature {
            self.window * self.lang_dim
        } else {
            0
        };
        self.window * self.word_dim + lang
    }

    /// Hidden size seen by the output layer.
    pub fn top_hidden(&self) -> usize {
        match self.cell {
            CellKind::DeepLstm => self.upper_hidden,
            _ => self.hidden,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_published_setup() {
        let c = ModelConfig::default();
        assert_eq!((c.word_dim, c.hidden, c.window), (100, 100, 5));
        assert_eq!(c.input_dim(), 500);
        assert_eq!(c.half_window(), 2);
    }

    #[test]
    fn language_block_extends_input() {
        let c = ModelConfig {
            lang_feature: true,
            ..Default::default()
        };
        assert_eq!(c.input_dim(), 500 + 5 * 16);
    }

    #[test]
    fn even_window_rejected() {
        let c = ModelConfig {
            window: 4,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn cell_names_parse() {
        for k in CellKind::ALL {
            assert_eq!(k.name().parse::<CellKind>().unwrap(), k);
        }
        let err = "rnn".parse::<CellKind>().unwrap_err();
        assert!(err.contains("elman, lstm, deep-lstm, gru"));
    }
}
