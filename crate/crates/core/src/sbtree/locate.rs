//! Two-phase search inside one node.
//!
//! Phase 1 walks the SP/Lcp arrays once and keeps a candidate position by
//! looking only at pattern bits at the branching positions (a blind descent of
//! the implicit binary trie over the node's keys). Phase 2 fetches the
//! candidate's text once, computes its real lcp with the pattern, and moves to
//! the boundary of the block of keys sharing that lcp.

use super::bitkey::{pattern_bit, pattern_bits, SuffixRef};
use super::textstore::TextStore;
use super::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Located {
    /// Number of keys smaller than the pattern.
    pub r: usize,
    /// Bit-lcp of the pattern with the key at `candidate`.
    pub ell: u64,
    pub candidate: usize,
}

/// Blind-descent candidate over keys with adjacent bit-lcps `lcp`
/// (`lcp.len() >= sp_len - 1`).
pub fn blind_candidate(sp_len: usize, lcp: &[u64], p: &[u8]) -> usize {
    let mut x = 0;
    let mut h = u64::MAX;
    for i in 1..sp_len {
        h = h.min(lcp[i - 1]);
        if pattern_bit(p, h) == 1 {
            x = i;
            h = u64::MAX;
        }
    }
    x
}

/// Insertion point from a candidate and its lcp with the pattern.
pub fn resolve_block(sp_len: usize, lcp: &[u64], p: &[u8], x: usize, ell: u64) -> usize {
    let mut lo = x;
    while lo > 0 && lcp[lo - 1] >= ell {
        lo -= 1;
    }
    let mut hi = x;
    while hi + 1 < sp_len && lcp[hi] >= ell {
        hi += 1;
    }
    if ell >= pattern_bits(p) || pattern_bit(p, ell) == 0 {
        lo
    } else {
        hi + 1
    }
}

/// Locates `p` among the keys `sp` (bit-lcps `lcp`), knowing that every key
/// shares at least `hint` leading bits with `p`. Fetches at most one suffix.
pub fn node_locate(sp: &[SuffixRef], lcp: &[u64], p: &[u8], hint: u64, texts: &mut TextStore) -> Result<Located> {
    let pb = pattern_bits(p);
    if sp.is_empty() {
        return Ok(Located {
            r: 0,
            ell: 0,
            candidate: 0,
        });
    }
    if hint >= pb {
        return Ok(Located {
            r: 0,
            ell: pb,
            candidate: 0,
        });
    }
    let x = blind_candidate(sp.len(), lcp, p);
    let ell = texts.pattern_lcp(sp[x], p, hint)?;
    let r = resolve_block(sp.len(), lcp, p, x, ell);
    Ok(Located { r, ell, candidate: x })
}

/// Minimum of `lcp[lo..hi]`, i.e. the lcp of keys `lo` and `hi` (`lo < hi`).
pub fn range_lcp(lcp: &[u64], lo: usize, hi: usize) -> u64 {
    lcp[lo..hi].iter().copied().min().unwrap_or(u64::MAX)
}
