//! Column-format corpus files.
//!
//! UTF-8, one token per line, TAB-separated `surface [lang] [tag]` columns,
//! blank line between sentences.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

use super::types::{Corpus, LabelSet, Sentence, TagSet, Token};

/// Which optional columns follow the surface column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub lang: bool,
    pub tag: bool,
}

impl Schema {
    pub const FULL: Schema = Schema {
        lang: true,
        tag: true,
    };
    pub const SURFACE_LANG: Schema = Schema {
        lang: true,
        tag: false,
    };
    pub const SURFACE_TAG: Schema = Schema {
        lang: false,
        tag: true,
    };
    pub const SURFACE: Schema = Schema {
        lang: false,
        tag: false,
    };

    pub fn width(&self) -> usize {
        1 + self.lang as usize + self.tag as usize
    }
}

impl FromStr for Schema {
    type Err = String;

    /// Parses a comma-separated column list such as `surface,lang,tag`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.replace(' ', "").as_str() {
            "surface,lang,tag" => Ok(Schema::FULL),
            "surface,lang" => Ok(Schema::SURFACE_LANG),
            "surface,tag" => Ok(Schema::SURFACE_TAG),
            "surface" => Ok(Schema::SURFACE),
            other => Err(format!(
                "unsupported column layout {other:?}; expected one of \
                 surface,lang,tag | surface,lang | surface,tag | surface"
            )),
        }
    }
}

impl std::fmt::Display for Schema {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("surface")?;
        if self.lang {
            f.write_str(",lang")?;
        }
        if self.tag {
            f.write_str(",tag")?;
        }
        Ok(())
    }
}

/// Reads a corpus file.
///
/// With `fixed_tagset`, every tag must belong to it; otherwise the tagset is
/// the sorted set of tags found in the file.
pub fn read_corpus(path: &Path, schema: Schema, fixed_tagset: Option<&TagSet>) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = parse_corpus(&text, &path.display().to_string(), schema, fixed_tagset)?;
    corpus.provenance = path.display().to_string();
    log::info!(
        "read {}: {} sentences, {} tokens",
        path.display(),
        corpus.sentence_count(),
        corpus.token_count()
    );
    Ok(corpus)
}

pub fn parse_corpus(
    text: &str,
    source_name: &str,
    schema: Schema,
    fixed_tagset: Option<&TagSet>,
) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(Sentence::new(std::mem::take(&mut current)));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != schema.width() {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line: line_no,
                message: format!(
                    "expected {} TAB-separated columns ({schema}), found {}",
                    schema.width(),
                    fields.len()
                ),
            });
        }
        let mut cols = fields.into_iter().map(str::trim);
        let surface = cols.next().unwrap_or_default();
        if surface.is_empty() {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line: line_no,
                message: "empty surface form".into(),
            });
        }
        let mut token = Token::new(surface);
        if schema.lang {
            let lang = cols.next().unwrap_or_default();
            if lang.is_empty() {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line: line_no,
                    message: "empty language label".into(),
                });
            }
            token.lang = Some(lang.to_string());
        }
        if schema.tag {
            let tag = cols.next().unwrap_or_default();
            if tag.is_empty() {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line: line_no,
                    message: "empty tag".into(),
                });
            }
            if let Some(ts) = fixed_tagset {
                if ts.id(tag).is_none() {
                    return Err(Error::UnknownTag {
                        tag: tag.to_string(),
                        line: Some(line_no),
                    });
                }
            }
            token.tag = Some(tag.to_string());
        }
        current.push(token);
    }
    if !current.is_empty() {
        sentences.push(Sentence::new(current));
    }
    if sentences.is_empty() {
        return Err(Error::NoSentences(source_name.to_string()));
    }
    let mut corpus = Corpus::from_sentences(sentences);
    if let Some(ts) = fixed_tagset {
        corpus.tagset = ts.clone();
    }
    Ok(corpus)
}

/// Renders a fully tagged corpus. The language column is written when every
/// token carries a language label.
pub fn format_corpus(c: &Corpus) -> Result<String> {
    let with_lang = c.has_languages();
    let mut out = String::new();
    for (si, s) in c.sentences.iter().enumerate() {
        if si > 0 {
            out.push('\n');
        }
        for (ti, t) in s.tokens.iter().enumerate() {
            let tag = t.tag.as_deref().ok_or(Error::MissingField {
                position: ti,
                field: "tag",
            })?;
            out.push_str(&t.surface);
            if with_lang {
                out.push('\t');
                out.push_str(t.lang.as_deref().unwrap_or_default());
            }
            let _ = writeln!(out, "\t{tag}");
        }
    }
    Ok(out)
}

pub fn write_corpus(c: &Corpus, path: &Path) -> Result<()> {
    let text = format_corpus(c)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Schema that `write_corpus` produces for this corpus.
pub fn written_schema(c: &Corpus) -> Schema {
    Schema {
        lang: c.has_languages(),
        tag: true,
    }
}

/// Seeded sentence-level split into (train, dev, test).
pub fn split_corpus(
    c: &Corpus,
    dev_sentences: usize,
    test_sentences: usize,
    rng: &mut SeededRng,
) -> Result<(Corpus, Corpus, Corpus)> {
    let n = c.sentence_count();
    if dev_sentences + test_sentences >= n {
        return Err(Error::Config(format!(
            "cannot hold out {dev_sentences}+{test_sentences} of {n} sentences"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let take = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        Corpus {
            sentences: ids.iter().map(|&i| c.sentences[i].clone()).collect(),
            tagset: c.tagset.clone(),
            languages: c.languages.clone(),
            provenance: c.provenance.clone(),
        }
    };
    let dev = take(&order[..dev_sentences]);
    let test = take(&order[dev_sentences..dev_sentences + test_sentences]);
    let train = take(&order[dev_sentences + test_sentences..]);
    Ok((train, dev, test))
}

/// Language set shared by several corpora (sorted union).
pub fn merged_languages<'a>(corpora: impl IntoIterator<Item = &'a Corpus>) -> LabelSet {
    LabelSet::sorted(
        corpora
            .into_iter()
            .flat_map(|c| c.languages.labels().iter().cloned()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str =
        "behen\thi\tG_N\nki\thi\tG_PRP\nshaadi\thi\tG_N\n\nand\ten\tCC\nm\ten\tG_V\n";

    #[test]
    fn two_sentence_fixture() {
        let c = parse_corpus(FIXTURE, "fixture", Schema::FULL, None).unwrap();
        assert_eq!(c.sentence_count(), 2);
        assert_eq!(c.sentences[0].len(), 3);
        assert_eq!(c.sentences[1].len(), 2);
        assert_eq!(
            c.token_count(),
            FIXTURE.lines().filter(|l| !l.is_empty()).count()
        );
        assert_eq!(c.sentences[0].tokens[2].surface, "shaadi");
        assert_eq!(c.tagset.labels.labels(), &["CC", "G_N", "G_PRP", "G_V"]);
        assert_eq!(c.languages.labels(), &["en", "hi"]);
    }

    #[test]
    fn empty_input_has_no_sentences() {
        let err = parse_corpus("", "empty.tsv", Schema::FULL, None).unwrap_err();
        assert!(err.to_string().contains("no sentences"), "{err}");
        assert!(parse_corpus("\n\n  \n", "blank", Schema::FULL, None).is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_corpus("a\ten\tN\nb\ten\n", "bad.tsv", Schema::FULL, None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_tag_with_fixed_tagset() {
        let ts = TagSet::new(Default::default(), ["G_N"]);
        let err =
            parse_corpus("a\ten\tG_N\nb\ten\tXX\n", "t", Schema::FULL, Some(&ts)).unwrap_err();
        match err {
            Error::UnknownTag { tag, line } => {
                assert_eq!(tag, "XX");
                assert_eq!(line, Some(2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn crlf_and_repeated_blank_lines() {
        let c = parse_corpus("a\tN\r\n\r\n\r\nb\tV\r\n", "t", Schema::SURFACE_TAG, None).unwrap();
        assert_eq!(c.sentence_count(), 2);
        assert_eq!(c.sentences[1].tokens[0].tag.as_deref(), Some("V"));
    }

    #[test]
    fn writing_requires_tags() {
        let c = Corpus::from_sentences(vec![Sentence::from_surfaces("a b")]);
        assert!(matches!(format_corpus(&c), Err(Error::MissingField { .. })));
    }

    #[test]
    fn split_is_seeded_and_disjoint() {
        let sentences = (0..20)
            .map(|i| Sentence::new(vec![Token::new(format!("w{i}")).with_tag("N")]))
            .collect();
        let c = Corpus::from_sentences(sentences);
        let (tr, dv, te) = split_corpus(&c, 3, 2, &mut SeededRng::new(4)).unwrap();
        assert_eq!(
            (
                tr.sentence_count(),
                dv.sentence_count(),
                te.sentence_count()
            ),
            (15, 3, 2)
        );
        let (tr2, _, _) = split_corpus(&c, 3, 2, &mut SeededRng::new(4)).unwrap();
        assert_eq!(tr, tr2);
        assert!(split_corpus(&c, 10, 10, &mut SeededRng::new(4)).is_err());
    }

    fn arb_token() -> impl Strategy<Value = Token> {
        (
            "[a-zA-Z@#:)0-9]{1,8}",
            prop::sample::select(vec!["hi", "en", "univ"]),
            "[A-Z_]{1,5}",
        )
            .prop_map(|(s, l, t)| Token::new(s).with_lang(l).with_tag(t))
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(
            sents in prop::collection::vec(prop::collection::vec(arb_token(), 1..8), 1..6)
        ) {
            let c = Corpus::from_sentences(sents.into_iter().map(Sentence::new).collect());
            let text = format_corpus(&c).unwrap();
            let back = parse_corpus(&text, "rt", written_schema(&c), None).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
