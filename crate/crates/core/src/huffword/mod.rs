//! Word tokenizer, vocabulary and the byte-aligned tagged word Huffman code.
//!
//! A word is a maximal run of ASCII alphanumerics or bytes >= 0x80 (so UTF-8
//! letters stay inside words); every run between two words is a separator
//! token. Both kinds are vocabulary terms, which makes decoding lossless.

mod model;

use std::collections::BTreeMap;
use std::ops::Range;

use thiserror::Error;

use crate::pager::PagerError;

pub use model::{code_lengths_128, compressed_find, HuffwordModel};

#[derive(Debug, Error)]
pub enum HuffError {
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    #[error("digested text is not a sequence of known codewords at byte {0}")]
    BadCodeword(usize),
    #[error("corrupt model: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Pager(#[from] PagerError),
}

pub type Result<T> = std::result::Result<T, HuffError>;

pub fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b >= 0x80
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub bytes: &'a [u8],
    /// Byte offset of the token in the source.
    pub offset: usize,
    pub is_word: bool,
}

/// Splits `text` into alternating word and separator tokens.
pub fn tokenize(text: &[u8]) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < text.len() {
        let kind = is_word_byte(text[start]);
        let len = text[start..].iter().take_while(|&&b| is_word_byte(b) == kind).count();
        out.push(Token {
            bytes: &text[start..start + len],
            offset: start,
            is_word: kind,
        });
        start += len;
    }
    out
}

pub fn detokenize(tokens: &[Token<'_>]) -> Vec<u8> {
    tokens.iter().flat_map(|t| t.bytes.iter().copied()).collect()
}

/// Distinct terms in lexicographic order with their frequencies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<Vec<u8>>,
    freqs: Vec<u64>,
}

impl Vocabulary {
    pub fn build(tokens: &[Token<'_>]) -> Self {
        let mut map: BTreeMap<&[u8], u64> = BTreeMap::new();
        for t in tokens {
            *map.entry(t.bytes).or_default() += 1;
        }
        Self::from_counts(map.into_iter().map(|(k, v)| (k.to_vec(), v)))
    }

    /// From (term, frequency) pairs; duplicate terms are summed.
    pub fn from_counts(pairs: impl IntoIterator<Item = (Vec<u8>, u64)>) -> Self {
        let mut map: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for (k, v) in pairs {
            *map.entry(k).or_default() += v;
        }
        let (terms, freqs) = map.into_iter().unzip();
        Vocabulary { terms, freqs }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Vec<u8>] {
        &self.terms
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    pub fn term(&self, i: usize) -> &[u8] {
        &self.terms[i]
    }

    pub fn id(&self, term: &[u8]) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_slice().cmp(term)).ok()
    }

    /// Indices of the terms starting with `p` (a contiguous range).
    pub fn prefix_range(&self, p: &[u8]) -> Range<usize> {
        let lo = self.terms.partition_point(|t| t.as_slice() < p);
        let hi = lo + self.terms[lo..].partition_point(|t| t.starts_with(p));
        lo..hi
    }

    /// Word terms starting with `p`.
    pub fn words_with_prefix(&self, p: &[u8]) -> Vec<&[u8]> {
        self.prefix_range(p)
            .map(|i| self.terms[i].as_slice())
            .filter(|t| is_word_byte(t[0]))
            .collect()
    }
}
