use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule table shipped with the crate.
pub const DEFAULT_RULES: &str = include_str!("../../data/normalization_rules.tsv");

pub const DEFAULT_HASHTAG_TOKEN: &str = "#user";

/// Special token groups that collapse to one canonical surface each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenClass {
    Url,
    Mention,
    Hashtag,
    Smiley,
    Number,
    Punct,
}

impl FromStr for TokenClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "url" => TokenClass::Url,
            "mention" => TokenClass::Mention,
            "hashtag" => TokenClass::Hashtag,
            "smiley" => TokenClass::Smiley,
            "number" => TokenClass::Number,
            "punct" => TokenClass::Punct,
            other => return Err(format!("unknown token class {other:?}")),
        })
    }
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenClass::Url => "url",
            TokenClass::Mention => "mention",
            TokenClass::Hashtag => "hashtag",
            TokenClass::Smiley => "smiley",
            TokenClass::Number => "number",
            TokenClass::Punct => "punct",
        })
    }
}

#[derive(Debug, Clone)]
enum Matcher {
    Pattern(Regex),
    Literals(HashSet<String>),
}

#[derive(Debug, Clone)]
struct Rule {
    class: TokenClass,
    matcher: Matcher,
}

/// Serializable description of a normalizer; stored in model files so that
/// tagging normalizes exactly like training did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizerSpec {
    pub rules: String,
    pub hashtag_token: String,
}

impl Default for NormalizerSpec {
    fn default() -> Self {
        NormalizerSpec {
            rules: DEFAULT_RULES.to_string(),
            hashtag_token: DEFAULT_HASHTAG_TOKEN.to_string(),
        }
    }
}

/// Maps mentions, hashtags, URLs, smileys, numbers and punctuation runs to
/// canonical tokens.
#[derive(Debug, Clone)]
pub struct Normalizer {
    rules: Vec<Rule>,
    spec: NormalizerSpec,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::from_spec(&NormalizerSpec::default()).expect("shipped rule table parses")
    }
}

impl Normalizer {
    pub fn from_spec(spec: &NormalizerSpec) -> Result<Self> {
        let mut rules: Vec<Rule> = Vec::new();
        for (idx, raw) in spec.rules.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse {
                source_name: "normalization rules".into(),
                line: idx + 1,
                message,
            };
            let mut cols = line.splitn(3, '\t');
            let (Some(class), Some(kind), Some(pattern)) = (cols.next(), cols.next(), cols.next())
            else {
                return Err(bad("expected class TAB kind TAB pattern".into()));
            };
            let class: TokenClass = class.trim().parse().map_err(bad)?;
            match kind.trim() {
                "regex" => {
                    let re = Regex::new(pattern).map_err(|e| bad(e.to_string()))?;
                    rules.push(Rule {
                        class,
                        matcher: Matcher::Pattern(re),
                    });
                }
                "literal" => {
                    // Consecutive literals of one class share a set.
                    if let Some(Rule {
                        class: last_class,
                        matcher: Matcher::Literals(set),
                    }) = rules.last_mut()
                    {
                        if *last_class == class {
                            set.insert(pattern.to_string());
                            continue;
                        }
                    }
                    rules.push(Rule {
                        class,
                        matcher: Matcher::Literals(HashSet::from([pattern.to_string()])),
                    });
                }
                other => return Err(bad(format!("unknown rule kind {other:?}"))),
            }
        }
        Ok(Normalizer {
            rules,
            spec: spec.clone(),
        })
    }

    /// Default rules with a different hashtag replacement (e.g. `#tag`).
    pub fn with_hashtag_token(token: &str) -> Result<Self> {
        Normalizer::from_spec(&NormalizerSpec {
            hashtag_token: token.to_string(),
            ..NormalizerSpec::default()
        })
    }

    pub fn spec(&self) -> &NormalizerSpec {
        &self.spec
    }

    pub fn classify(&self, surface: &str) -> Option<TokenClass> {
        self.rules.iter().find_map(|r| {
            let hit = match &r.matcher {
                Matcher::Pattern(re) => re.is_match(surface),
                Matcher::Literals(set) => set.contains(surface),
            };
            hit.then_some(r.class)
        })
    }

    pub fn canonical(&self, class: TokenClass) -> &str {
        match class {
            TokenClass::Url => "URL",
            TokenClass::Mention => "@user",
            TokenClass::Hashtag => &self.spec.hashtag_token,
            TokenClass::Smiley => "SMILEY",
            TokenClass::Number => "NUM",
            TokenClass::Punct => "PUNCT",
        }
    }

    pub fn normalize<'a>(&'a self, surface: &'a str) -> &'a str {
        match self.classify(surface) {
            Some(class) => self.canonical(class),
            None => surface,
        }
    }
}

/// Normalizes with the shipped rule table.
pub fn normalize_token(surface: &str) -> String {
    thread_local! {
        static DEFAULT: Normalizer = Normalizer::default();
    }
    DEFAULT.with(|n| n.normalize(surface).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mentions_and_hashtags() {
        for m in ["@dhoni", "@bcci", "@iitb"] {
            assert_eq!(normalize_token(m), "@user");
        }
        for h in ["#dhoni", "#bcci", "#iitb"] {
            assert_eq!(normalize_token(h), "#user");
        }
    }

    #[test]
    fn urls_numbers_punct_smileys() {
        assert_eq!(normalize_token("http://t.co/xyz"), "URL");
        assert_eq!(normalize_token("https://example.com/a?b=c"), "URL");
        assert_eq!(normalize_token("www.cdac.in"), "URL");
        assert_eq!(normalize_token("2016"), "NUM");
        assert_eq!(normalize_token("-3.5"), "NUM");
        assert_eq!(normalize_token("10:30"), "NUM");
        assert_eq!(normalize_token("1,000"), "NUM");
        assert_eq!(normalize_token("!!!"), "PUNCT");
        assert_eq!(normalize_token("..."), "PUNCT");
        assert_eq!(normalize_token("।"), "PUNCT");
        assert_eq!(normalize_token(":)"), "SMILEY");
        assert_eq!(normalize_token("<3"), "SMILEY");
        assert_eq!(normalize_token("😂"), "SMILEY");
        assert_eq!(normalize_token("😂😂👍🏽"), "SMILEY");
    }

    #[test]
    fn ordinary_tokens_unchanged() {
        for w in ["shaadi", "behen", "are", "2day", "don't", "Hi"] {
            assert_eq!(normalize_token(w), w);
        }
    }

    #[test]
    fn hashtag_redirect() {
        let n = Normalizer::with_hashtag_token("#tag").unwrap();
        assert_eq!(n.normalize("#iitb"), "#tag");
        assert_eq!(n.normalize("#tag"), "#tag");
    }

    #[test]
    fn canonical_tokens_are_fixed_points() {
        let n = Normalizer::default();
        for class in [
            TokenClass::Url,
            TokenClass::Mention,
            TokenClass::Hashtag,
            TokenClass::Smiley,
            TokenClass::Number,
            TokenClass::Punct,
        ] {
            let c = n.canonical(class);
            assert_eq!(n.normalize(c), c, "{class}");
        }
    }

    #[test]
    fn bad_rule_lines_are_rejected() {
        let spec = NormalizerSpec {
            rules: "url\tregex\t(".into(),
            ..Default::default()
        };
        assert!(Normalizer::from_spec(&spec).is_err());
        let spec = NormalizerSpec {
            rules: "emoji\tliteral\t:)".into(),
            ..Default::default()
        };
        assert!(Normalizer::from_spec(&spec).is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{1,12}") {
            let once = normalize_token(&s);
            prop_assert_eq!(normalize_token(&once), once);
        }

        #[test]
        fn social_tokens_idempotent(s in "[@#]?[a-z0-9:;()<>._/-]{1,10}") {
            let once = normalize_token(&s);
            prop_assert_eq!(normalize_token(&once), once);
        }
    }
}
