//! Sampled routing over a large SP array.
//!
//! The array is cut into sub-arrays of about log²|SP| keys; the rightmost key
//! of each is kept in an in-memory Patricia tree. A blind descent plus one
//! fetch picks the sub-array, and `node_locate` then runs on that sub-array
//! only.

use super::bitkey::{pattern_bit, SuffixRef};
use super::locate::{node_locate, range_lcp, resolve_block, Located};
use super::textstore::TextStore;
use super::Result;

#[derive(Debug, Clone)]
enum PatNode {
    Leaf(usize),
    Branch { bit: u64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct Supra {
    sub: usize,
    len: usize,
    samples: Vec<SuffixRef>,
    lcp: Vec<u64>,
    nodes: Vec<PatNode>,
    root: usize,
}

/// Sub-array size for an SP array of `n` keys.
pub fn sub_array_size(n: usize) -> usize {
    let lg = (n.max(1) as f64).log2();
    ((lg * lg).ceil() as usize).max(4)
}

impl Supra {
    pub fn sub_array_size(&self) -> usize {
        self.sub
    }

    pub fn sub_arrays(&self) -> usize {
        self.samples.len()
    }

    /// Key range `[start, end)` of sub-array `s`.
    pub fn bounds(&self, s: usize) -> (usize, usize) {
        (s * self.sub, ((s + 1) * self.sub).min(self.len))
    }

    fn trie(&mut self, lo: usize, hi: usize) -> usize {
        let id = if lo == hi {
            PatNode::Leaf(lo)
        } else {
            let (split, &bit) = self.lcp[lo..hi]
                .iter()
                .enumerate()
                .min_by_key(|&(i, &v)| (v, i))
                .expect("non-empty range");
            let split = lo + split;
            let left = self.trie(lo, split);
            let right = self.trie(split + 1, hi);
            PatNode::Branch { bit, left, right }
        };
        self.nodes.push(id);
        self.nodes.len() - 1
    }

    /// Sub-array in which the insertion point of `p` lies. Fetches one suffix.
    pub fn supra_locate(&self, p: &[u8], hint: u64, texts: &mut TextStore) -> Result<usize> {
        let mut n = self.root;
        let x = loop {
            match self.nodes[n] {
                PatNode::Leaf(i) => break i,
                PatNode::Branch { bit, left, right } => n = if pattern_bit(p, bit) == 1 { right } else { left },
            }
        };
        let ell = texts.pattern_lcp(self.samples[x], p, hint)?;
        let r = resolve_block(self.samples.len(), &self.lcp, p, x, ell);
        Ok(r.min(self.samples.len() - 1))
    }

    /// Same result as `node_locate` over the whole array.
    pub fn locate(&self, sp: &[SuffixRef], lcp: &[u64], p: &[u8], hint: u64, texts: &mut TextStore) -> Result<Located> {
        let s = self.supra_locate(p, hint, texts)?;
        let (start, end) = self.bounds(s);
        let inner = &lcp[start..end - 1];
        let loc = node_locate(&sp[start..end], inner, p, hint, texts)?;
        Ok(Located {
            r: start + loc.r,
            ell: loc.ell,
            candidate: start + loc.candidate,
        })
    }
}

/// Builds the sampled structure over keys `sp` with adjacent bit-lcps `lcp`.
pub fn build_supra(sp: &[SuffixRef], lcp: &[u64]) -> Supra {
    assert!(!sp.is_empty(), "empty SP array");
    let sub = sub_array_size(sp.len());
    let count = sp.len().div_ceil(sub);
    let last = |s: usize| (((s + 1) * sub).min(sp.len())) - 1;
    let samples = (0..count).map(|s| sp[last(s)]).collect();
    let sample_lcp = (0..count.saturating_sub(1)).map(|s| range_lcp(lcp, last(s), last(s + 1))).collect();
    let mut supra = Supra {
        sub,
        len: sp.len(),
        samples,
        lcp: sample_lcp,
        nodes: Vec::new(),
        root: 0,
    };
    supra.root = supra.trie(0, count - 1);
    supra
}
