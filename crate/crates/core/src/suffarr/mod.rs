//! Suffix arrays, LCP arrays and suffix-array search.
//!
//! Suffixes are compared with an implicit terminator that sorts above every
//! byte, so a suffix that is a proper prefix of another sorts after it.
//! Offsets are 1-based throughout the public API.

mod file;
mod incremental;

use std::cmp::Ordering;

use thiserror::Error;

use crate::pager::PagerError;

pub use file::{read_sa_file, write_sa_file, SaFile};
pub use incremental::{build_sa_incremental, IncrementalReport};

#[derive(Debug, Error)]
pub enum SuffArrError {
    #[error("text contains the reserved byte 0x00 at offset {0}")]
    ReservedByte(usize),
    #[error("text is empty")]
    EmptyText,
    #[error("pattern is empty")]
    EmptyPattern,
    #[error("suffix array does not match the text: {0}")]
    Mismatch(&'static str),
    #[error("stage size {m} out of range for text of length {n}")]
    StageSize { m: usize, n: usize },
    #[error("store too small: stage needs {needed} bytes of memory, budget is {budget}")]
    StoreTooSmall { needed: usize, budget: usize },
    #[error("text too long for this construction ({0} bytes)")]
    TooLong(usize),
    #[error("bad suffix array file: {0}")]
    BadFile(&'static str),
    #[error(transparent)]
    Pager(#[from] PagerError),
}

pub type Result<T> = std::result::Result<T, SuffArrError>;

/// 1-based suffix start offsets in lexicographic suffix order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixArray {
    sa: Vec<u64>,
}

impl SuffixArray {
    pub fn from_offsets(sa: Vec<u64>) -> Self {
        SuffixArray { sa }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.sa
    }

    pub fn len(&self) -> usize {
        self.sa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sa.is_empty()
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.sa
    }
}

pub fn check_text(text: &[u8]) -> Result<()> {
    if text.is_empty() {
        return Err(SuffArrError::EmptyText);
    }
    if let Some(i) = text.iter().position(|&b| b == 0) {
        return Err(SuffArrError::ReservedByte(i));
    }
    Ok(())
}

/// Suffix order of a symbol sequence by prefix doubling. Positions past the
/// end rank above every symbol. Returns 0-based start positions.
pub fn suffix_order(symbols: &[u32]) -> Vec<usize> {
    let n = symbols.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sa: Vec<usize> = (0..n).collect();
    // ranks start from the symbols themselves; u64 keys leave room for MAX
    let mut rank: Vec<u64> = symbols.iter().map(|&s| s as u64).collect();
    let mut tmp = vec![0u64; n];
    let mut k = 1usize;
    loop {
        let key = |i: usize, rank: &[u64]| -> (u64, u64) {
            let second = if i + k < n { rank[i + k] } else { u64::MAX };
            (rank[i], second)
        };
        sa.sort_unstable_by_key(|&i| key(i, &rank));
        tmp[sa[0]] = 0;
        for w in 1..n {
            let bump = key(sa[w - 1], &rank) != key(sa[w], &rank);
            tmp[sa[w]] = tmp[sa[w - 1]] + bump as u64;
        }
        std::mem::swap(&mut rank, &mut tmp);
        if rank[sa[n - 1]] as usize == n - 1 {
            break;
        }
        k *= 2;
        if k >= n {
            break;
        }
    }
    sa
}

/// In-memory suffix array of `text`.
pub fn build_sa_internal(text: &[u8]) -> Result<SuffixArray> {
    check_text(text)?;
    let symbols: Vec<u32> = text.iter().map(|&b| b as u32).collect();
    Ok(SuffixArray {
        sa: suffix_order(&symbols).into_iter().map(|i| i as u64 + 1).collect(),
    })
}

fn check_permutation(sa: &[u64], n: usize) -> Result<()> {
    if sa.len() != n {
        return Err(SuffArrError::Mismatch("length differs from text"));
    }
    let mut seen = vec![false; n];
    for &p in sa {
        if p == 0 || p as usize > n || std::mem::replace(&mut seen[p as usize - 1], true) {
            return Err(SuffArrError::Mismatch("not a permutation of 1..n"));
        }
    }
    Ok(())
}

/// LCP of adjacent suffixes (Kasai et al.). `lcp[i]` belongs to `sa[i]`, `sa[i+1]`.
pub fn build_lcp(text: &[u8], sa: &SuffixArray) -> Result<Vec<u64>> {
    let n = text.len();
    check_permutation(&sa.sa, n)?;
    let mut rank = vec![0usize; n];
    for (r, &p) in sa.sa.iter().enumerate() {
        rank[p as usize - 1] = r;
    }
    let mut lcp = vec![0u64; n.saturating_sub(1)];
    let mut h = 0usize;
    for i in 0..n {
        let r = rank[i];
        if r + 1 < n {
            let j = sa.sa[r + 1] as usize - 1;
            while i + h < n && j + h < n && text[i + h] == text[j + h] {
                h += 1;
            }
            lcp[r] = h as u64;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    Ok(lcp)
}

/// Compares the suffix at 0-based `pos` against `pattern`, looking only at the
/// first `pattern.len()` characters. A suffix that ends inside the pattern
/// compares greater (its terminator is larger than every byte).
pub fn cmp_suffix_prefix(text: &[u8], pos: usize, pattern: &[u8]) -> Ordering {
    let suffix = &text[pos..];
    let m = pattern.len().min(suffix.len());
    match suffix[..m].cmp(&pattern[..m]) {
        Ordering::Equal if suffix.len() < pattern.len() => Ordering::Greater,
        o => o,
    }
}

/// Range `[lo, hi)` of SA ranks whose suffixes start with `pattern`.
pub fn sa_range(text: &[u8], sa: &[u64], pattern: &[u8]) -> Result<(usize, usize)> {
    if pattern.is_empty() {
        return Err(SuffArrError::EmptyPattern);
    }
    let lo = sa.partition_point(|&p| cmp_suffix_prefix(text, p as usize - 1, pattern) == Ordering::Less);
    let mut hi = lo;
    while hi < sa.len() && text[sa[hi] as usize - 1..].starts_with(pattern) {
        hi += 1;
    }
    Ok((lo, hi))
}

/// Sorted 1-based positions of all occurrences of `pattern`.
pub fn sa_search(text: &[u8], sa: &SuffixArray, pattern: &[u8]) -> Result<Vec<u64>> {
    let (lo, hi) = sa_range(text, &sa.sa, pattern)?;
    let mut occ = sa.sa[lo..hi].to_vec();
    occ.sort_unstable();
    Ok(occ)
}

/// Several texts indexed together. Each text is followed by its own
/// separator, ordered above all bytes and by text id, so suffixes of
/// different texts never compare equal.
#[derive(Debug, Clone)]
pub struct Collection {
    concat: Vec<u8>,
    starts: Vec<usize>,
    /// 0-based positions in `concat` of every non-separator suffix, sorted.
    order: Vec<usize>,
}

impl Collection {
    pub fn build<S: AsRef<[u8]>>(texts: &[S]) -> Result<Self> {
        let mut concat = Vec::new();
        let mut symbols = Vec::new();
        let mut starts = Vec::with_capacity(texts.len());
        for (t, text) in texts.iter().enumerate() {
            let text = text.as_ref();
            check_text(text)?;
            starts.push(concat.len());
            concat.extend_from_slice(text);
            concat.push(0);
            symbols.extend(text.iter().map(|&b| b as u32));
            symbols.push(256 + t as u32);
        }
        let order = suffix_order(&symbols)
            .into_iter()
            .filter(|&p| concat[p] != 0)
            .collect();
        Ok(Collection { concat, starts, order })
    }

    pub fn text_count(&self) -> usize {
        self.starts.len()
    }

    pub fn text(&self, t: usize) -> &[u8] {
        let end = self.starts.get(t + 1).copied().unwrap_or(self.concat.len()) - 1;
        &self.concat[self.starts[t]..end]
    }

    /// Maps a concatenation position to (0-based text id, 1-based offset).
    pub fn locate(&self, pos: usize) -> (usize, u64) {
        let t = self.starts.partition_point(|&s| s <= pos) - 1;
        (t, (pos - self.starts[t]) as u64 + 1)
    }

    /// Suffixes in lexicographic order as (text id, 1-based offset).
    pub fn suffixes(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.order.iter().map(|&p| self.locate(p))
    }

    /// Occurrences of `pattern` as sorted (text id, offset) pairs.
    pub fn search(&self, pattern: &[u8]) -> Result<Vec<(usize, u64)>> {
        if pattern.is_empty() {
            return Err(SuffArrError::EmptyPattern);
        }
        // separators are 0x00 and never match a pattern byte, so a plain
        // prefix test on the concatenation is exact
        let cmp = |p: usize| {
            let s = &self.concat[p..];
            let end = s.iter().position(|&b| b == 0).unwrap_or(s.len());
            cmp_suffix_prefix(&s[..end], 0, pattern)
        };
        let lo = self.order.partition_point(|&p| cmp(p) == Ordering::Less);
        let mut out: Vec<(usize, u64)> = self.order[lo..]
            .iter()
            .take_while(|&&p| self.concat[p..].starts_with(pattern))
            .map(|&p| self.locate(p))
            .collect();
        out.sort_unstable();
        Ok(out)
    }
}
