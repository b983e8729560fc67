//! Binary model file.
//!
//! Layout:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `CMRT` |
//! | 1 | version `0x01` |
//! | 4 | header length `L`, u32 little-endian |
//! | L | UTF-8 JSON header: config, vocabulary, tagset, languages, normalizer, parameter manifest |
//! | 4·N | parameters in manifest order, row-major, IEEE-754 f32 little-endian |
//! | 4 | CRC-32 (IEEE) of the parameter payload, u32 little-endian |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabelSet, Normalizer, NormalizerSpec, TagSet, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, SeededRng};

use super::config::ModelConfig;
use super::model::TaggerModel;

pub const MAGIC: &[u8; 4] = b"CMRT";
pub const VERSION: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelFileError {
    #[error("magic: not a model file (expected \"CMRT\")")]
    BadMagic,
    #[error("version: unsupported format version {0:#04x} (expected 0x01)")]
    Version(u8),
    #[error("header: {0}")]
    Header(String),
    #[error("checksum: payload CRC {computed:#010x} does not match stored {stored:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("checksum: file ends before the checksum")]
    ChecksumMissing,
    #[error("payload: manifest needs {expected} bytes, payload has {found}")]
    PayloadLength { expected: usize, found: usize },
}

impl ModelFileError {
    /// Name of the file section that failed.
    pub fn section(&self) -> &'static str {
        match self {
            ModelFileError::BadMagic => "magic",
            ModelFileError::Version(_) => "version",
            ModelFileError::Header(_) => "header",
            ModelFileError::Checksum { .. } | ModelFileError::ChecksumMissing => "checksum",
            ModelFileError::PayloadLength { .. } => "payload",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ManifestEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelHeader {
    pub scalar: String,
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub tagset: TagSet,
    pub languages: LabelSet,
    pub normalizer: NormalizerSpec,
    pub parameters: Vec<ManifestEntry>,
}

impl<S: Scalar> TaggerModel<S> {
    fn header(&self) -> ModelHeader {
        ModelHeader {
            scalar: "f32".into(),
            config: self.config.clone(),
            vocabulary: self.vocab.clone(),
            tagset: self.tagset.clone(),
            languages: self.languages.clone(),
            normalizer: self.normalizer.spec().clone(),
            parameters: self
                .params
                .tensors()
                .into_iter()
                .map(|t| ManifestEntry {
                    name: t.name,
                    shape: t.shape,
                })
                .collect(),
        }
    }

    /// Serializes the model; parameters are stored as f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let mut payload = Vec::with_capacity(self.params.scalar_count() * 4);
        for t in self.params.tensors() {
            for v in t.data {
                payload.extend_from_slice(&v.to_f32_rounded().to_le_bytes());
            }
        }
        let mut out = Vec::with_capacity(13 + header.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, payload) = split_file(bytes)?;
        let normalizer = Normalizer::from_spec(&header.normalizer)
            .map_err(|e| ModelFileError::Header(format!("normalizer: {e}")))?;
        // Initialization values are overwritten below; only shapes matter.
        let mut model = TaggerModel::<S>::new(
            header.config.clone(),
            header.vocabulary.clone(),
            header.tagset.clone(),
            header.languages.clone(),
            normalizer,
            &mut SeededRng::new(0),
        )
        .map_err(|e| ModelFileError::Header(format!("config: {e}")))?;
        if model.config != header.config {
            return Err(ModelFileError::Header("config disagrees with tagset size".into()).into());
        }
        let expected: Vec<ManifestEntry> = model
            .params
            .tensors()
            .into_iter()
            .map(|t| ManifestEntry {
                name: t.name,
                shape: t.shape,
            })
            .collect();
        if expected != header.parameters {
            return Err(ModelFileError::Header(
                "parameter manifest does not match the configuration".into(),
            )
            .into());
        }
        let mut values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        for (_, data) in model.params.tensors_mut() {
            for (dst, v) in data.iter_mut().zip(values.by_ref()) {
                *dst = S::of(v as f64);
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Validates framing and checksum; returns the header and raw payload.
fn split_file(bytes: &[u8]) -> Result<(ModelHeader, &[u8]), ModelFileError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = *bytes.get(4).ok_or(ModelFileError::Version(0))?;
    if version != VERSION {
        return Err(ModelFileError::Version(version));
    }
    let len_bytes: [u8; 4] = bytes
        .get(5..9)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| ModelFileError::Header("file ends inside the header length".into()))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let header_end = 9usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| ModelFileError::Header("file ends inside the header".into()))?;
    let header: ModelHeader = serde_json::from_slice(&bytes[9..header_end])
        .map_err(|e| ModelFileError::Header(e.to_string()))?;
    if header.scalar != "f32" {
        return Err(ModelFileError::Header(format!(
            "unsupported payload scalar {:?}",
            header.scalar
        )));
    }
    let rest = &bytes[header_end..];
    if rest.len() < 4 {
        return Err(ModelFileError::ChecksumMissing);
    }
    let (payload, crc) = rest.split_at(rest.len() - 4);
    let stored = u32::from_le_bytes([crc[0], crc[1], crc[2], crc[3]]);
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(ModelFileError::Checksum { stored, computed });
    }
    let expected: usize = header
        .parameters
        .iter()
        .map(ManifestEntry::len)
        .sum::<usize>()
        * 4;
    if expected != payload.len() {
        return Err(ModelFileError::PayloadLength {
            expected,
            found: payload.len(),
        });
    }
    Ok((header, payload))
}

/// Human-readable dump of a model file. On failure the report still lists
/// every section that was readable and ends with the failing one.
pub struct InspectReport {
    pub text: String,
    pub failure: Option<ModelFileError>,
}

pub fn inspect_bytes(bytes: &[u8]) -> InspectReport {
    let mut text = String::new();
    let _ = writeln!(text, "file size: {} bytes", bytes.len());
    match split_file(bytes) {
        Ok((header, payload)) => {
            let _ = writeln!(text, "magic: CMRT");
            let _ = writeln!(text, "version: {VERSION:#04x}");
            describe_header(&mut text, &header);
            let _ = writeln!(
                text,
                "payload: {} bytes ({} f32 values)",
                payload.len(),
                payload.len() / 4
            );
            let _ = writeln!(text, "checksum: ok ({:#010x})", crc32fast::hash(payload));
            let failure = TaggerModel::<f32>::from_bytes(bytes)
                .err()
                .map(|e| match e {
                    Error::ModelFile(m) => m,
                    other => ModelFileError::Header(other.to_string()),
                });
            InspectReport { text, failure }
        }
        Err(err) => {
            if err.section() != "magic" {
                let _ = writeln!(text, "magic: CMRT");
            }
            if !matches!(err, ModelFileError::BadMagic | ModelFileError::Version(_)) {
                let _ = writeln!(text, "version: {VERSION:#04x}");
            }
            if matches!(
                err,
                ModelFileError::Checksum { .. }
                    | ModelFileError::ChecksumMissing
                    | ModelFileError::PayloadLength { .. }
            ) {
                // Header parsed fine; show it for diagnosis.
                let header_len =
                    u32::from_le_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]) as usize;
                if let Ok(h) = serde_json::from_slice::<ModelHeader>(&bytes[9..9 + header_len]) {
                    describe_header(&mut text, &h);
                }
            }
            let _ = writeln!(text, "FAILED section {}: {err}", err.section());
            InspectReport {
                text,
                failure: Some(err),
            }
        }
    }
}

fn describe_header(text: &mut String, h: &ModelHeader) {
    let c = &h.config;
    let _ = writeln!(
        text,
        "config: cell={} word_dim={} hidden={} window={} tags={} lang_feature={} lang_dim={} upper_hidden={}",
        c.cell, c.word_dim, c.hidden, c.window, c.num_tags, c.lang_feature, c.lang_dim, c.upper_hidden
    );
    let _ = writeln!(
        text,
        "vocabulary: {} entries (3 reserved)",
        h.vocabulary.len()
    );
    let _ = writeln!(
        text,
        "tagset: {} {} labels",
        h.tagset.len(),
        h.tagset.granularity
    );
    let _ = writeln!(
        text,
        "languages: {} [{}]",
        h.languages.len(),
        h.languages.labels().join(", ")
    );
    let _ = writeln!(text, "hashtag token: {}", h.normalizer.hashtag_token);
    let total: usize = h.parameters.iter().map(ManifestEntry::len).sum();
    let _ = writeln!(
        text,
        "parameters: {} tensors, {} scalars",
        h.parameters.len(),
        total
    );
    for p in &h.parameters {
        let shape = p
            .shape
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x");
        let _ = writeln!(text, "  {:<24} {}", p.name, shape);
    }
}
