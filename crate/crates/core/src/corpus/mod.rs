//! Code-mixed tagged text: data model, file I/O, normalization, vocabulary.

mod io;
mod normalize;
mod types;
mod vocab;

pub use io::{
    format_corpus, merged_languages, parse_corpus, read_corpus, split_corpus, write_corpus,
    written_schema, Schema,
};
pub use normalize::{
    normalize_token, Normalizer, NormalizerSpec, TokenClass, DEFAULT_HASHTAG_TOKEN, DEFAULT_RULES,
};
pub use types::{Corpus, Granularity, LabelSet, Sentence, TagSet, Token};
pub use vocab::{
    build_vocabulary, word_counts, EncodedSentence, Encoder, Vocabulary, PAD_L, PAD_R, RESERVED,
    UNK,
};
