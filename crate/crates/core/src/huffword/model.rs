//! 128-ary Huffman code over the vocabulary, packed one 7-bit symbol per
//! byte with the top bit set on the first byte of each codeword.
//!
//! Model file:
//!
//! ```text
//! "HWM1" count:u32
//! count x (code_len:u8 term_len:u32 term bytes)   terms in lexicographic order
//! ```

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::{tokenize, HuffError, Result, Token, Vocabulary};
use crate::pager::PagedStore;

const MAGIC: &[u8; 4] = b"HWM1";
const ARITY: usize = 128;
const TAG: u8 = 0x80;

/// Codeword lengths (in 7-bit symbols) of a 128-ary Huffman code. Dummy
/// zero-weight leaves pad the tree so every internal node is full; ties go
/// to the lower index, so callers pass terms in lexicographic order.
pub fn code_lengths_128(freqs: &[u64]) -> Vec<u8> {
    let v = freqs.len();
    if v <= 1 {
        return vec![1; v];
    }
    let dummies = (ARITY - 1 - (v - 1) % (ARITY - 1)) % (ARITY - 1);
    let mut parent: Vec<usize> = vec![usize::MAX; dummies + v];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = (0..dummies).map(|i| Reverse((0, i))).collect();
    heap.extend(freqs.iter().enumerate().map(|(i, &f)| Reverse((f, dummies + i))));
    while heap.len() > 1 {
        let id = parent.len();
        parent.push(usize::MAX);
        let mut w = 0u64;
        for _ in 0..ARITY {
            let Reverse((f, n)) = heap.pop().expect("padded tree has full merges");
            w += f;
            parent[n] = id;
        }
        heap.push(Reverse((w, id)));
    }
    let mut depth = vec![0u32; parent.len()];
    for n in (0..parent.len()).rev() {
        if parent[n] != usize::MAX {
            depth[n] = depth[parent[n]] + 1;
        }
    }
    (0..v).map(|i| depth[dummies + i] as u8).collect()
}

/// Canonical codewords for the given lengths: shorter first, ties by index.
fn canonical(lens: &[u8]) -> Vec<Vec<u8>> {
    let mut order: Vec<usize> = (0..lens.len()).collect();
    order.sort_by_key(|&i| (lens[i], i));
    let mut codes = vec![Vec::new(); lens.len()];
    let mut digits: Vec<u8> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if k > 0 {
            let mut j = digits.len();
            loop {
                j -= 1;
                digits[j] += 1;
                if digits[j] < ARITY as u8 {
                    break;
                }
                digits[j] = 0;
            }
        }
        digits.resize(lens[i] as usize, 0);
        let mut cw = digits.clone();
        cw[0] |= TAG;
        codes[i] = cw;
    }
    codes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffwordModel {
    terms: Vec<Vec<u8>>,
    lens: Vec<u8>,
    codes: Vec<Vec<u8>>,
    by_code: HashMap<Vec<u8>, usize>,
}

impl HuffwordModel {
    pub fn build(vocab: &Vocabulary) -> Result<Self> {
        if vocab.is_empty() {
            return Err(HuffError::EmptyVocabulary);
        }
        let lens = code_lengths_128(vocab.freqs());
        Ok(Self::from_lengths(vocab.terms().to_vec(), lens))
    }

    fn from_lengths(terms: Vec<Vec<u8>>, lens: Vec<u8>) -> Self {
        let codes = canonical(&lens);
        let by_code = codes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        HuffwordModel {
            terms,
            lens,
            codes,
            by_code,
        }
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

    pub fn term(&self, id: usize) -> &[u8] {
        &self.terms[id]
    }

    pub fn id(&self, term: &[u8]) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_slice().cmp(term)).ok()
    }

    pub fn code(&self, id: usize) -> &[u8] {
        &self.codes[id]
    }

    pub fn codeword(&self, term: &[u8]) -> Option<&[u8]> {
        self.id(term).map(|i| self.codes[i].as_slice())
    }

    /// Term id of an exact codeword.
    pub fn term_of_code(&self, cw: &[u8]) -> Option<usize> {
        self.by_code.get(cw).copied()
    }

    pub fn encode_tokens(&self, tokens: &[Token<'_>]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(tokens.len() * 2);
        for t in tokens {
            let cw = self
                .codeword(t.bytes)
                .ok_or_else(|| HuffError::UnknownToken(String::from_utf8_lossy(t.bytes).into_owned()))?;
            out.extend_from_slice(cw);
        }
        Ok(out)
    }

    pub fn encode_text(&self, text: &[u8]) -> Result<Vec<u8>> {
        self.encode_tokens(&tokenize(text))
    }

    /// Splits `dt` into (byte offset, term id) pairs.
    pub fn codewords(&self, dt: &[u8]) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < dt.len() {
            if dt[i] & TAG == 0 {
                return Err(HuffError::BadCodeword(i));
            }
            let len = 1 + dt[i + 1..].iter().take_while(|&&b| b & TAG == 0).count();
            let id = self.term_of_code(&dt[i..i + len]).ok_or(HuffError::BadCodeword(i))?;
            out.push((i, id));
            i += len;
        }
        Ok(out)
    }

    pub fn decode(&self, dt: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (_, id) in self.codewords(dt)? {
            out.extend_from_slice(&self.terms[id]);
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.terms.len() as u32).to_le_bytes());
        for (t, &l) in self.terms.iter().zip(&self.lens) {
            out.push(l);
            out.extend_from_slice(&(t.len() as u32).to_le_bytes());
            out.extend_from_slice(t);
        }
        out
    }

    /// Parses a model from the front of `buf`; returns it with the bytes used.
    pub fn from_prefix(buf: &[u8]) -> Result<(Self, usize)> {
        let bad = || HuffError::Corrupt("truncated model");
        if buf.get(..4) != Some(MAGIC.as_slice()) {
            return Err(HuffError::Corrupt("bad magic"));
        }
        let count = u32::from_le_bytes(buf.get(4..8).ok_or_else(bad)?.try_into().expect("4 bytes")) as usize;
        let mut pos = 8;
        let mut terms = Vec::with_capacity(count.min(1 << 20));
        let mut lens = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let l = *buf.get(pos).ok_or_else(bad)?;
            let tl = u32::from_le_bytes(buf.get(pos + 1..pos + 5).ok_or_else(bad)?.try_into().expect("4 bytes")) as usize;
            let t = buf.get(pos + 5..pos + 5 + tl).ok_or_else(bad)?;
            if l == 0 || terms.last().is_some_and(|p: &Vec<u8>| p.as_slice() >= t) {
                return Err(HuffError::Corrupt("terms out of order or zero code length"));
            }
            terms.push(t.to_vec());
            lens.push(l);
            pos += 5 + tl;
        }
        let kraft: f64 = lens.iter().map(|&l| (ARITY as f64).powi(-(l as i32))).sum();
        if kraft > 1.0 + 1e-9 {
            return Err(HuffError::Corrupt("code lengths violate the Kraft inequality"));
        }
        Ok((Self::from_lengths(terms, lens), pos))
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let (m, used) = Self::from_prefix(buf)?;
        if used != buf.len() {
            return Err(HuffError::Corrupt("trailing bytes"));
        }
        Ok(m)
    }

    pub fn save(&self, store: &mut PagedStore) -> Result<()> {
        Ok(store.write_stream(&self.to_bytes())?)
    }

    pub fn load(store: &mut PagedStore) -> Result<Self> {
        Self::from_bytes(&store.read_stream()?)
    }
}

/// Offsets in `dt` where the codeword `cw` occurs. Only codeword starts
/// carry the tag bit, so a byte match beginning at a tagged byte is a whole
/// codeword.
pub fn compressed_find(dt: &[u8], cw: &[u8]) -> Vec<usize> {
    let Some(&first) = cw.first() else {
        return Vec::new();
    };
    if first & TAG == 0 || dt.len() < cw.len() {
        return Vec::new();
    }
    (0..=dt.len() - cw.len())
        .filter(|&i| dt[i] == first && &dt[i..i + cw.len()] == cw)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term() {
        let v = Vocabulary::from_counts([(b"x".to_vec(), 5)]);
        let m = HuffwordModel::build(&v).unwrap();
        assert_eq!(m.codeword(b"x").unwrap(), &[0x80]);
        assert!(matches!(HuffwordModel::build(&Vocabulary::default()), Err(HuffError::EmptyVocabulary)));
    }

    #[test]
    fn equal_weights_130() {
        let lens = code_lengths_128(&[1; 130]);
        assert_eq!(lens.iter().filter(|&&l| l == 1).count(), 127);
        assert_eq!(lens.iter().filter(|&&l| l == 2).count(), 3);
    }

    #[test]
    fn skewed_weights_give_short_codes_to_frequent_terms() {
        let mut f: Vec<u64> = (0..1000).map(|i| 1 + (i % 7)).collect();
        f[500] = 1_000_000;
        let lens = code_lengths_128(&f);
        assert_eq!(lens[500], 1);
        assert!(lens.iter().all(|&l| l <= 2));
    }

    #[test]
    fn the_cat() {
        let text = b"the cat";
        let v = Vocabulary::build(&tokenize(text));
        let m = HuffwordModel::build(&v).unwrap();
        let dt = m.encode_text(text).unwrap();
        assert_eq!(dt.iter().filter(|&&b| b & TAG != 0).count(), 3);
        assert_eq!(m.decode(&dt).unwrap(), text);
        assert!(m.encode_text(b"dog").is_err());
        assert!(m.encode_tokens(&[]).unwrap().is_empty());
        let dt = m.encode_text(b"the cat the").unwrap();
        assert_eq!(compressed_find(&dt, m.codeword(b"the").unwrap()).len(), 2);
        assert!(compressed_find(&dt, &[0x85, 0x01]).is_empty());
    }

    #[test]
    fn model_round_trip() {
        let v = Vocabulary::build(&tokenize(b"a b c a a, d"));
        let m = HuffwordModel::build(&v).unwrap();
        assert_eq!(HuffwordModel::from_bytes(&m.to_bytes()).unwrap(), m);
        let mut bad = m.to_bytes();
        bad[8] = 0;
        assert!(HuffwordModel::from_bytes(&bad).is_err());
    }
}
