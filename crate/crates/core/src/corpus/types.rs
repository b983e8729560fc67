use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One token of a pre-tokenized utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lang: Option<String>,
    pub tag: Option<String>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            lang: None,
            tag: None,
        }
    }

    pub fn with_lang(mut self, lang: impl Into<String>) -> Self {
        self.lang = Some(lang.into());
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    /// Untagged sentence from whitespace-separated surfaces.
    pub fn from_surfaces(text: &str) -> Self {
        Sentence::new(text.split_whitespace().map(Token::new).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_tagged(&self) -> bool {
        self.tokens.iter().all(|t| t.tag.is_some())
    }

    /// Copy with every tag removed.
    pub fn untagged(&self) -> Sentence {
        Sentence::new(
            self.tokens
                .iter()
                .map(|t| Token {
                    tag: None,
                    ..t.clone()
                })
                .collect(),
        )
    }
}

/// Ordered set of unique labels with a stable index per label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    /// Keeps first-occurrence order and drops duplicates.
    pub fn new<I, T>(labels: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut set = LabelSet::default();
        for l in labels {
            set.insert(l.into());
        }
        set
    }

    /// Sorted unique labels.
    pub fn sorted<I, T>(labels: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut all: Vec<String> = labels.into_iter().map(Into::into).collect();
        all.sort();
        all.dedup();
        LabelSet::new(all)
    }

    pub fn insert(&mut self, label: String) -> usize {
        if let Some(&i) = self.index.get(&label) {
            return i;
        }
        let i = self.labels.len();
        self.index.insert(label.clone(), i);
        self.labels.push(label);
        i
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }
}

impl Serialize for LabelSet {
    fn serialize<Ser: serde::Serializer>(
        &self,
        s: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.labels.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<String>::deserialize(d)?;
        let set = LabelSet::new(labels.iter().cloned());
        if set.len() != labels.len() {
            return Err(serde::de::Error::custom("duplicate label"));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Granularity {
    #[default]
    #[serde(rename = "CG")]
    Coarse,
    #[serde(rename = "FG")]
    Fine,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Coarse => "CG",
            Granularity::Fine => "FG",
        })
    }
}

/// POS inventory of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TagSet {
    pub granularity: Granularity,
    pub labels: LabelSet,
}

impl TagSet {
    pub fn new<I, T>(granularity: Granularity, labels: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        TagSet {
            granularity,
            labels: LabelSet::new(labels),
        }
    }

    pub fn id(&self, tag: &str) -> Option<usize> {
        self.labels.id(tag)
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.label(id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn require(&self, tag: &str) -> Result<usize> {
        self.id(tag).ok_or_else(|| Error::UnknownTag {
            tag: tag.to_string(),
            line: None,
        })
    }
}

/// A tagged (or untagged) collection of sentences.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub tagset: TagSet,
    pub languages: LabelSet,
    /// Free-form note on where the sentences came from.
    pub provenance: String,
}

impl Corpus {
    /// Derives the tag and language inventories from the sentences (sorted).
    pub fn from_sentences(sentences: Vec<Sentence>) -> Self {
        let tagset = TagSet {
            granularity: Granularity::default(),
            labels: LabelSet::sorted(
                sentences
                    .iter()
                    .flat_map(|s| s.tokens.iter().filter_map(|t| t.tag.clone())),
            ),
        };
        let languages = LabelSet::sorted(
            sentences
                .iter()
                .flat_map(|s| s.tokens.iter().filter_map(|t| t.lang.clone())),
        );
        Corpus {
            sentences,
            tagset,
            languages,
            provenance: String::new(),
        }
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn is_tagged(&self) -> bool {
        self.sentences.iter().all(Sentence::is_tagged)
    }

    pub fn has_languages(&self) -> bool {
        self.sentences
            .iter()
            .all(|s| s.tokens.iter().all(|t| t.lang.is_some()))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    /// Checks that every tag is in the tagset.
    pub fn validate(&self) -> Result<()> {
        for t in self.tokens() {
            if let Some(tag) = &t.tag {
                self.tagset.require(tag)?;
            }
            if let Some(lang) = &t.lang {
                if !self.languages.contains(lang) {
                    return Err(Error::UnknownLanguage {
                        lang: lang.clone(),
                        line: None,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn untagged(&self) -> Corpus {
        Corpus {
            sentences: self.sentences.iter().map(Sentence::untagged).collect(),
            ..self.clone()
        }
    }
}
