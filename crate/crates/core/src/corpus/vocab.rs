use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::normalize::Normalizer;
use super::types::{Corpus, LabelSet, Sentence, TagSet};

pub const UNK: usize = 0;
pub const PAD_L: usize = 1;
pub const PAD_R: usize = 2;
pub const RESERVED: [&str; 3] = ["<unk>", "<s>", "</s>"];

/// Word ↔ id map over normalized surfaces. Ids 0..3 are reserved for
/// UNK, PAD_L and PAD_R.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_words(std::iter::empty::<String>())
    }
}

impl Vocabulary {
    /// Reserved entries followed by `words` in the given order; duplicates and
    /// reserved names are skipped.
    pub fn from_words<I, T>(words: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut v = Vocabulary {
            words: Vec::new(),
            index: HashMap::new(),
        };
        for r in RESERVED {
            v.push(r.to_string());
        }
        for w in words {
            v.push(w.into());
        }
        v
    }

    fn push(&mut self, word: String) -> usize {
        if let Some(&id) = self.index.get(&word) {
            return id;
        }
        let id = self.words.len();
        self.index.insert(word.clone(), id);
        self.words.push(word);
        id
    }

    /// Appends words not yet present; returns how many were added.
    pub fn extend<I, T>(&mut self, words: I) -> usize
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let before = self.words.len();
        for w in words {
            self.push(w.into());
        }
        self.words.len() - before
    }

    /// Id of an already-normalized word, UNK when absent.
    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_reserved(id: usize) -> bool {
        id < RESERVED.len()
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.words.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let words = Vec::<String>::deserialize(d)?;
        if words.len() < RESERVED.len() || words[..RESERVED.len()] != RESERVED {
            return Err(serde::de::Error::custom(
                "vocabulary lacks reserved entries",
            ));
        }
        let v = Vocabulary::from_words(words[RESERVED.len()..].iter().cloned());
        if v.len() != words.len() {
            return Err(serde::de::Error::custom("duplicate vocabulary entry"));
        }
        Ok(v)
    }
}

/// Frequency of every normalized surface.
pub fn word_counts(c: &Corpus, normalizer: &Normalizer) -> HashMap<String, usize> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for t in c.tokens() {
        *counts
            .entry(normalizer.normalize(&t.surface).to_string())
            .or_default() += 1;
    }
    counts
}

/// Vocabulary of normalized words with frequency ≥ `min_freq`, ordered by
/// descending frequency with ties broken alphabetically.
pub fn build_vocabulary(c: &Corpus, min_freq: usize, normalizer: &Normalizer) -> Vocabulary {
    let mut counted: Vec<(String, usize)> = word_counts(c, normalizer)
        .into_iter()
        .filter(|(_, n)| *n >= min_freq.max(1))
        .collect();
    counted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_words(counted.into_iter().map(|(w, _)| w))
}

/// Integer view of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSentence {
    pub words: Vec<usize>,
    pub langs: Option<Vec<usize>>,
    pub tags: Option<Vec<usize>>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Everything needed to turn a `Sentence` into ids.
#[derive(Debug, Clone, Copy)]
pub struct Encoder<'a> {
    pub vocab: &'a Vocabulary,
    pub normalizer: &'a Normalizer,
    pub tagset: &'a TagSet,
    /// Language ids are produced only when this is set.
    pub languages: Option<&'a LabelSet>,
}

impl Encoder<'_> {
    pub fn encode(&self, s: &Sentence, with_tags: bool) -> Result<EncodedSentence> {
        let words = s
            .tokens
            .iter()
            .map(|t| self.vocab.id(self.normalizer.normalize(&t.surface)))
            .collect();
        let langs = match self.languages {
            Some(set) => Some(
                s.tokens
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let lang = t.lang.as_deref().ok_or(Error::MissingField {
                            position: i,
                            field: "language label",
                        })?;
                        set.id(lang).ok_or_else(|| Error::UnknownLanguage {
                            lang: lang.to_string(),
                            line: None,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let tags = if with_tags {
            Some(
                s.tokens
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let tag = t.tag.as_deref().ok_or(Error::MissingField {
                            position: i,
                            field: "tag",
                        })?;
                        self.tagset.require(tag)
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(EncodedSentence { words, langs, tags })
    }

    pub fn decode_tags(&self, ids: &[usize]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&i| {
                self.tagset
                    .label(i)
                    .map(str::to_string)
                    .ok_or(Error::OutOfRange {
                        what: "tagset",
                        index: i,
                        len: self.tagset.len(),
                    })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Granularity, Token};
    use proptest::prelude::*;

    fn corpus(words: &[&str]) -> Corpus {
        Corpus::from_sentences(vec![Sentence::new(
            words.iter().map(|w| Token::new(*w).with_tag("N")).collect(),
        )])
    }

    #[test]
    fn min_freq_one_keeps_every_normalized_word() {
        let c = corpus(&["a", "b", "@x", "@y", "c"]);
        let v = build_vocabulary(&c, 1, &Normalizer::default());
        assert_eq!(v.len(), 3 + 4);
        for w in ["a", "b", "c", "@user"] {
            assert!(v.get(w).is_some(), "{w}");
        }
    }

    #[test]
    fn min_freq_cutoff() {
        let mut words = vec!["a"; 5];
        words.push("b");
        let c = corpus(&words);
        let v = build_vocabulary(&c, 2, &Normalizer::default());
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("a"), 3);
        assert_eq!(v.id("b"), UNK);
    }

    #[test]
    fn ordering_by_frequency_then_alphabet() {
        let c = corpus(&["z", "y", "y", "x", "x", "w"]);
        let v = build_vocabulary(&c, 1, &Normalizer::default());
        assert_eq!(&v.words()[3..], &["x", "y", "w", "z"]);
        assert_eq!(v, build_vocabulary(&c, 1, &Normalizer::default()));
    }

    #[test]
    fn reserved_ids() {
        let v = Vocabulary::default();
        assert_eq!(v.id("<unk>"), UNK);
        assert_eq!(v.id("<s>"), PAD_L);
        assert_eq!(v.id("</s>"), PAD_R);
    }

    #[test]
    fn code_mixed_example_encodes_seven_tags() {
        let words = ["behen", "ki", "shaadi", "and", "m", "not", "there"];
        let tags = ["G_N", "G_PRP", "G_N", "CC", "G_V", "G_R", "G_R"];
        let langs = ["hi", "hi", "hi", "en", "en", "en", "en"];
        let s = Sentence::new(
            words
                .iter()
                .zip(tags)
                .zip(langs)
                .map(|((w, t), l)| Token::new(*w).with_tag(t).with_lang(l))
                .collect(),
        );
        let c = Corpus::from_sentences(vec![s.clone()]);
        let n = Normalizer::default();
        let vocab = build_vocabulary(&c, 1, &n);
        let enc = Encoder {
            vocab: &vocab,
            normalizer: &n,
            tagset: &c.tagset,
            languages: Some(&c.languages),
        };
        let e = enc.encode(&s, true).unwrap();
        let ids = e.tags.clone().unwrap();
        assert_eq!(ids.len(), 7);
        assert_eq!(enc.decode_tags(&ids).unwrap(), tags);
        for (i, w) in words.iter().enumerate() {
            assert_eq!(vocab.word(e.words[i]), Some(*w));
        }
        assert_eq!(e.langs.unwrap()[3], c.languages.id("en").unwrap());
    }

    #[test]
    fn oov_becomes_unk_and_unknown_language_fails() {
        let c = corpus(&["a", "b"]);
        let n = Normalizer::default();
        let vocab = build_vocabulary(&c, 1, &n);
        let langs = LabelSet::new(["en"]);
        let tagset = TagSet::new(Granularity::Coarse, ["N"]);
        let enc = Encoder {
            vocab: &vocab,
            normalizer: &n,
            tagset: &tagset,
            languages: Some(&langs),
        };
        let s = Sentence::new(vec![
            Token::new("a").with_lang("en"),
            Token::new("zzz").with_lang("en"),
        ]);
        let e = enc.encode(&s, false).unwrap();
        assert_eq!(e.words[1], UNK);
        assert!(e.tags.is_none());
        let bad = Sentence::new(vec![Token::new("a").with_lang("fr")]);
        assert!(matches!(
            enc.encode(&bad, false),
            Err(Error::UnknownLanguage { .. })
        ));
        let untagged = Sentence::new(vec![Token::new("a").with_lang("en")]);
        assert!(matches!(
            enc.encode(&untagged, true),
            Err(Error::MissingField { .. })
        ));
    }

    proptest! {
        #[test]
        fn tag_decode_inverts_encode(tags in prop::collection::vec(0usize..5, 1..20)) {
            let labels = ["A", "B", "C", "D", "E"];
            let tagset = TagSet::new(Granularity::Fine, labels);
            let vocab = Vocabulary::default();
            let n = Normalizer::default();
            let enc = Encoder { vocab: &vocab, normalizer: &n, tagset: &tagset, languages: None };
            let s = Sentence::new(tags.iter().map(|&t| Token::new("w").with_tag(labels[t])).collect());
            let e = enc.encode(&s, true).unwrap();
            prop_assert_eq!(e.tags.as_ref().unwrap(), &tags);
            let back = enc.decode_tags(e.tags.as_ref().unwrap()).unwrap();
            prop_assert!(back.iter().zip(&tags).all(|(b, &t)| b == labels[t]));
        }
    }
}
