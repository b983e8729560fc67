//! Synthetic corpora shared by the integration tests.
#![allow(dead_code)]

use cmtag::corpus::{Corpus, Sentence, Token};
use cmtag::numerics::SeededRng;

pub const TOY_VOCAB: usize = 50;
pub const TOY_CLASSES: usize = 6;

/// Word class of toy word `w`; fixed, so every toy corpus shares one grammar.
pub fn toy_class(w: usize) -> usize {
    (w * 7 + 3) % TOY_CLASSES
}

/// Tag of position `t`: the word's class, split in two by the parity of the
/// previous word's class (sentence start counts as even). 6 × 2 = 12 tags.
pub fn toy_tag(words: &[usize], t: usize) -> usize {
    let prev_odd = t > 0 && toy_class(words[t - 1]) % 2 == 1;
    toy_class(words[t]) * 2 + prev_odd as usize
}

pub fn toy_sentence(rng: &mut SeededRng, vocab: usize) -> Sentence {
    let len = 5 + rng.below(8);
    let words: Vec<usize> = (0..len).map(|_| rng.below(vocab)).collect();
    Sentence::new(
        (0..len)
            .map(|t| {
                Token::new(format!("w{:02}", words[t]))
                    .with_tag(format!("T{:02}", toy_tag(&words, t)))
            })
            .collect(),
    )
}

/// 200 sentences of length 5–12 over 50 words and 12 tags.
pub fn toy_grammar(seed: u64) -> Corpus {
    let mut rng = SeededRng::new(seed).substream("toy-grammar");
    let mut c = Corpus::from_sentences(
        (0..200)
            .map(|_| toy_sentence(&mut rng, TOY_VOCAB))
            .collect(),
    );
    c.provenance = format!("toy grammar seed {seed}");
    c
}

/// Ambiguous surface forms and their tag in English and in Hindi.
pub const HOMOGRAPHS: [(&str, &str, &str); 3] = [
    ("are", "V", "INTJ"),
    ("to", "ADP", "CONJ"),
    ("hi", "INTJ", "V"),
];

const FILLER_TAGS: [&str; 4] = ["N", "V", "ADJ", "ADP"];

fn filler(rng: &mut SeededRng) -> Token {
    let hindi = rng.below(2) == 1;
    let w = rng.below(20);
    let (surface, lang) = if hindi {
        (format!("h{w:02}"), "hi")
    } else {
        (format!("e{w:02}"), "en")
    };
    Token::new(surface)
        .with_lang(lang)
        .with_tag(FILLER_TAGS[w % FILLER_TAGS.len()])
}

/// Sentences of 6–10 tokens, each with two homographs at random positions.
/// Filler words and languages are drawn independently of the homographs'
/// language, which is balanced 50/50; only the homograph's own language
/// label tells its two tags apart.
pub fn homograph_corpus(seed: u64, sentences: usize) -> Corpus {
    let mut rng = SeededRng::new(seed).substream("homographs");
    let mut out = Vec::with_capacity(sentences);
    for _ in 0..sentences {
        let len = 6 + rng.below(5);
        let mut tokens: Vec<Token> = (0..len).map(|_| filler(&mut rng)).collect();
        let first = rng.below(len);
        let second = (first + 1 + rng.below(len - 1)) % len;
        for pos in [first, second] {
            let (form, en, hi) = HOMOGRAPHS[rng.below(HOMOGRAPHS.len())];
            tokens[pos] = if rng.below(2) == 1 {
                Token::new(form).with_lang("hi").with_tag(hi)
            } else {
                Token::new(form).with_lang("en").with_tag(en)
            };
        }
        out.push(Sentence::new(tokens));
    }
    let mut c = Corpus::from_sentences(out);
    c.provenance = format!("homograph corpus seed {seed}");
    c
}

pub fn is_homograph(surface: &str) -> bool {
    HOMOGRAPHS.iter().any(|(f, _, _)| *f == surface)
}

pub const MIX_CLASSES: usize = 6;
const MIX_TAGS: [&str; MIX_CLASSES] = ["N", "V", "ADJ", "ADV", "DET", "PRON"];
const COMMON_PER_CLASS: usize = 8;
const RARE_PER_CLASS: usize = 4;

/// Word `i` of class `c`; ids below COMMON_PER_CLASS are common, the rest
/// are rare words that labeled training data never contains.
fn mix_word(c: usize, i: usize) -> Token {
    let lang = if i % 2 == 0 { "en" } else { "hi" };
    Token::new(format!("c{c}w{i:02}"))
        .with_lang(lang)
        .with_tag(MIX_TAGS[c])
}

/// One sentence of the class-Markov grammar: each class is followed by one
/// of the next two classes, words are drawn within the class, and with
/// probability `homograph_rate` a position holds a homograph instead.
fn mix_sentence(rng: &mut SeededRng, rare_rate: f64, homograph_rate: f64) -> Sentence {
    let len = 6 + rng.below(5);
    let mut class = rng.below(MIX_CLASSES);
    let mut tokens = Vec::with_capacity(len);
    for _ in 0..len {
        if rng.uniform() < homograph_rate {
            let (form, en, hi) = HOMOGRAPHS[rng.below(HOMOGRAPHS.len())];
            tokens.push(if rng.below(2) == 1 {
                Token::new(form).with_lang("hi").with_tag(hi)
            } else {
                Token::new(form).with_lang("en").with_tag(en)
            });
        } else {
            let i = if rng.uniform() < rare_rate {
                COMMON_PER_CLASS + rng.below(RARE_PER_CLASS)
            } else {
                rng.below(COMMON_PER_CLASS)
            };
            tokens.push(mix_word(class, i));
        }
        class = (class + 1 + rng.below(2)) % MIX_CLASSES;
    }
    Sentence::new(tokens)
}

/// Labeled train/dev corpora plus unlabeled text for embedding
/// pre-training. Dev sentences contain rare words that only the unlabeled
/// text shows; both splits contain language-dependent homographs.
pub struct TrendData {
    pub train: Corpus,
    pub dev: Corpus,
    pub unlabeled: Corpus,
}

pub fn trend_data(seed: u64) -> TrendData {
    let mut rng = SeededRng::new(seed).substream("trend-data");
    let train: Vec<Sentence> = (0..300)
        .map(|_| mix_sentence(&mut rng, 0.0, 0.15))
        .collect();
    let dev: Vec<Sentence> = (0..150)
        .map(|_| mix_sentence(&mut rng, 0.3, 0.15))
        .collect();
    let unlabeled: Vec<Sentence> = (0..3000)
        .map(|_| mix_sentence(&mut rng, 0.33, 0.0).untagged())
        .collect();
    let mut train = Corpus::from_sentences(train);
    let mut dev = Corpus::from_sentences(dev);
    // Same inventories on both sides so dev encodes against the model.
    dev.tagset = train.tagset.clone();
    dev.languages = train.languages.clone();
    train.provenance = format!("trend train seed {seed}");
    dev.provenance = format!("trend dev seed {seed}");
    TrendData {
        train,
        dev,
        unlabeled: Corpus::from_sentences(unlabeled),
    }
}
