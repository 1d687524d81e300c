//! String B-tree over the suffixes of a text collection.
//!
//! Nodes store only suffix references and the bit-lcps of adjacent keys
//! (delta coded); there is no trie topology on disk. Searching a node costs
//! one scan of its arrays plus a single access to the text store.

pub mod bitkey;
mod build;
pub mod locate;
pub mod node;
pub mod supra;
pub mod textstore;

use thiserror::Error;

use crate::pager::{IoStats, PageId, PagedStore, PagerError};
use crate::suffarr;

pub use bitkey::SuffixRef;
pub use build::{Entry, TreeMeta};
pub use locate::{node_locate, Located};
pub use node::{fit_branching, NodeKind, NodePage};
pub use textstore::{TextEntry, TextStore};

#[derive(Debug, Error)]
pub enum SbtError {
    #[error("text is empty")]
    EmptyText,
    #[error("pattern is empty")]
    EmptyPattern,
    #[error("text contains the reserved byte 0x00 at offset {0}")]
    ReservedByte(usize),
    #[error("text of {0} bytes exceeds the 3-byte offset range")]
    TextTooLong(usize),
    #[error("too many texts for 2-byte text ids")]
    TooManyTexts,
    #[error("unknown text id {0}")]
    UnknownText(u16),
    #[error("node needs {needed} bytes but pages hold {page_size}; choose a smaller b")]
    PageOverflow { needed: usize, page_size: usize },
    #[error("branching parameter {0} is below 2")]
    Branching(usize),
    #[error("corrupt index: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Pager(#[from] PagerError),
}

pub type Result<T> = std::result::Result<T, SbtError>;

/// 9-bit symbol of a collection symbol (bytes stay, separators become the terminator).
fn sym9(s: u32) -> u16 {
    if s < 256 {
        s as u16
    } else {
        bitkey::TERMINATOR
    }
}

/// Ordered suffix entries of the given texts, with bit-lcps. Suffixes with
/// identical keys are ordered by text id.
pub fn collection_entries(texts: &[(u16, &[u8])]) -> Vec<Entry> {
    let mut symbols: Vec<u32> = Vec::new();
    let mut owner: Vec<(u16, u32)> = Vec::new();
    for (k, &(id, t)) in texts.iter().enumerate() {
        for (i, &c) in t.iter().enumerate() {
            symbols.push(c as u32);
            owner.push((id, i as u32 + 1));
        }
        symbols.push(256 + k as u32);
        owner.push((id, 0));
    }
    let order = suffarr::suffix_order(&symbols);
    let n = symbols.len();
    let mut rank = vec![0usize; n];
    for (r, &p) in order.iter().enumerate() {
        rank[p] = r;
    }
    // symbol lcp of adjacent suffixes (Kasai)
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for i in 0..n {
        let r = rank[i];
        if r + 1 < n {
            let j = order[r + 1];
            while i + h < n && j + h < n && symbols[i + h] == symbols[j + h] {
                h += 1;
            }
            lcp[r] = h;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    let keep = order.iter().take_while(|&&p| symbols[p] < 256).count();
    (0..keep)
        .map(|r| {
            let p = order[r];
            let lcp_next = if r + 1 < keep {
                let q = order[r + 1];
                let s = lcp[r];
                bitkey::bit_lcp(s as u64, sym9(symbols[p + s]), sym9(symbols[q + s]))
            } else {
                0
            };
            let (text, offset) = owner[p];
            Entry {
                key: SuffixRef { text, offset },
                lcp_next,
            }
        })
        .collect()
}

pub struct StringBTree {
    store: PagedStore,
    texts: TextStore,
    meta: TreeMeta,
}

impl StringBTree {
    /// Builds the tree of `texts` (ids 0, 1, ...). `b` defaults to the
    /// largest value that fits the page size.
    pub fn build<S: AsRef<[u8]>>(texts: &[S], store: PagedStore, text_store: PagedStore, b: Option<usize>) -> Result<Self> {
        let mut ts = TextStore::new(text_store);
        let mut ids = Vec::with_capacity(texts.len());
        for t in texts {
            ids.push(ts.add(t.as_ref())?);
        }
        let pairs: Vec<(u16, &[u8])> = ids.iter().copied().zip(texts.iter().map(|t| t.as_ref())).collect();
        let entries = collection_entries(&pairs);
        Self::from_entries(entries, store, ts, b)
    }

    /// Builds the tree from an ordered entry list over the texts in `texts`.
    pub fn from_entries(entries: Vec<Entry>, mut store: PagedStore, texts: TextStore, b: Option<usize>) -> Result<Self> {
        let b = match b {
            Some(b) => b,
            None => fit_branching(store.page_size())?,
        };
        let meta = build::write_tree(&mut store, &entries, |r| texts.key_bits(r), b, texts.directory())?;
        Ok(StringBTree { store, texts, meta })
    }

    pub fn open(store: PagedStore, text_store: PagedStore) -> Result<Self> {
        let mut store = store;
        let (meta, dir) = build::read_header(&mut store)?;
        let texts = TextStore::with_directory(text_store, dir)?;
        store.reset_stats();
        Ok(StringBTree { store, texts, meta })
    }

    pub fn meta(&self) -> TreeMeta {
        self.meta
    }

    pub fn height(&self) -> u32 {
        self.meta.height
    }

    pub fn branching(&self) -> usize {
        self.meta.b
    }

    pub fn len(&self) -> u64 {
        self.meta.keys
    }

    pub fn is_empty(&self) -> bool {
        self.meta.keys == 0
    }

    pub fn texts(&mut self) -> &mut TextStore {
        &mut self.texts
    }

    pub fn index_stats(&self) -> IoStats {
        self.store.io_stats()
    }

    pub fn text_stats(&self) -> IoStats {
        self.texts.io_stats()
    }

    /// Page reads over both stores.
    pub fn page_reads(&self) -> u64 {
        self.store.io_stats().page_reads + self.texts.io_stats().page_reads
    }

    pub fn reset_stats(&mut self) {
        self.store.reset_stats();
        self.texts.reset_stats();
    }

    pub fn node(&mut self, id: PageId) -> Result<NodePage> {
        NodePage::decode(&self.store.read_page(id)?)
    }

    /// All occurrences of `p` as (text id, 1-based offset), sorted.
    pub fn search(&mut self, p: &[u8]) -> Result<Vec<(u16, u32)>> {
        if p.is_empty() {
            return Err(SbtError::EmptyPattern);
        }
        let Some(mut id) = self.meta.root else {
            return Ok(Vec::new());
        };
        let pb = bitkey::pattern_bits(p);
        let mut hint = 0u64;
        let mut out = Vec::new();
        loop {
            let node = self.node(id)?;
            let k = node.sp.len();
            let inner = &node.lcp[..k.saturating_sub(1)];
            let loc = node_locate(&node.sp, inner, p, hint, &mut self.texts)?;
            if !node.is_leaf() {
                let n = node.children.len();
                if loc.r >= 2 * n {
                    return Ok(out);
                }
                let c = (loc.r / 2).min(n - 1);
                let (lo, hi) = (loc.candidate.min(2 * c), loc.candidate.max(2 * c + 1));
                hint = hint.max(loc.ell.min(locate::range_lcp(inner, lo, hi)));
                id = node.children[c] as PageId;
                continue;
            }
            if loc.ell < pb || loc.r >= k {
                return Ok(out);
            }
            let mut node = node;
            let mut i = loc.r;
            loop {
                let key = node.sp[i];
                out.push((key.text, key.offset));
                if node.lcp[i] < pb {
                    break;
                }
                i += 1;
                if i == node.sp.len() {
                    match node.right {
                        Some(r) => {
                            node = self.node(r as PageId)?;
                            i = 0;
                        }
                        None => break,
                    }
                }
            }
            out.sort_unstable();
            return Ok(out);
        }
    }

    /// Leaf entries left to right.
    pub fn entries(&mut self) -> Result<Vec<Entry>> {
        let mut out = Vec::with_capacity(self.meta.keys as usize);
        let mut next = self.meta.first_leaf;
        while let Some(id) = next {
            let node = self.node(id)?;
            for (k, l) in node.sp.iter().zip(&node.lcp) {
                out.push(Entry { key: *k, lcp_next: *l });
            }
            next = node.right.map(|r| r as PageId);
        }
        Ok(out)
    }

    fn rebuild(&mut self, entries: Vec<Entry>) -> Result<()> {
        let mut store = self.store.fresh_like()?;
        self.meta = build::write_tree(&mut store, &entries, |r| self.texts.key_bits(r), self.meta.b, self.texts.directory())?;
        self.store = store;
        Ok(())
    }

    /// Adds a text and returns its id. The new suffixes are merged with the
    /// existing leaf sequence and the tree is rebuilt from the merged list.
    pub fn insert_text(&mut self, text: &[u8]) -> Result<u16> {
        let id = self.texts.add(text)?;
        let fresh = collection_entries(&[(id, text)]);
        let old = self.entries()?;
        let merged = merge_entries(&old, &fresh, &mut self.texts)?;
        self.rebuild(merged)?;
        Ok(id)
    }

    /// Removes every suffix of text `id` and rebuilds the tree.
    pub fn delete_text(&mut self, id: u16) -> Result<()> {
        self.texts.remove(id)?;
        let mut kept: Vec<Entry> = Vec::new();
        for e in self.entries()? {
            if e.key.text == id {
                if let Some(last) = kept.last_mut() {
                    last.lcp_next = last.lcp_next.min(e.lcp_next);
                }
            } else {
                kept.push(e);
            }
        }
        self.rebuild(kept)
    }

    /// Checks the structural invariants of every node. Returns the number of
    /// pages visited.
    pub fn validate(&mut self) -> Result<u64> {
        let Some(root) = self.meta.root else {
            return Ok(0);
        };
        let b = self.meta.b;
        let mut pages = 0;
        let mut level = vec![root];
        let mut depth = 1;
        let mut keys = 0u64;
        while !level.is_empty() {
            let mut next = Vec::new();
            for &id in &level {
                pages += 1;
                let node = self.node(id)?;
                let k = node.sp.len();
                for i in 0..k.saturating_sub(1) {
                    let (ord, l) = self.texts.cmp_keys(node.sp[i], node.sp[i + 1], 0)?;
                    let ordered = ord.is_lt() || (ord.is_eq() && node.sp[i].text < node.sp[i + 1].text);
                    if node.is_leaf() && !ordered {
                        return Err(SbtError::Corrupt("leaf keys out of order"));
                    }
                    if !ord.is_gt() && l != node.lcp[i] {
                        return Err(SbtError::Corrupt("stored lcp differs from key lcp"));
                    }
                }
                let root_node = id == root;
                if node.is_leaf() {
                    if depth != self.meta.height {
                        return Err(SbtError::Corrupt("leaves at different depths"));
                    }
                    if k > 2 * b || (!root_node && k < b) {
                        return Err(SbtError::Corrupt("leaf occupancy out of range"));
                    }
                    keys += k as u64;
                } else {
                    let n = node.children.len();
                    if k != 2 * n || n > b || (root_node && n < 2) || (!root_node && n < b / 2) {
                        return Err(SbtError::Corrupt("internal occupancy out of range"));
                    }
                    next.extend(node.children.iter().map(|&c| c as PageId));
                }
            }
            level = next;
            depth += 1;
        }
        if keys != self.meta.keys {
            return Err(SbtError::Corrupt("key count mismatch"));
        }
        let entries = self.entries()?;
        for w in entries.windows(2) {
            let (_, l) = self.texts.cmp_keys(w[0].key, w[1].key, 0)?;
            if l != w[0].lcp_next {
                return Err(SbtError::Corrupt("leaf boundary lcp differs from key lcp"));
            }
        }
        Ok(pages)
    }
}

/// Merges two ordered entry lists using their lcps to avoid most key
/// comparisons. Identical keys keep `old` first.
pub fn merge_entries(old: &[Entry], new: &[Entry], texts: &mut TextStore) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::with_capacity(old.len() + new.len());
    let (mut i, mut j) = (0, 0);
    // lcp of the last emitted key with old[i] / new[j]; None before the first emission
    let (mut la, mut lb): (Option<u64>, Option<u64>) = (None, None);
    let emit = |out: &mut Vec<Entry>, e: Entry, lcp_prev: Option<u64>| {
        if let (Some(last), Some(l)) = (out.last_mut(), lcp_prev) {
            last.lcp_next = l;
        }
        out.push(Entry { key: e.key, lcp_next: 0 });
    };
    while i < old.len() && j < new.len() {
        let (take_old, cross) = match (la, lb) {
            (Some(a), Some(b)) if a > b => (true, b),
            (Some(a), Some(b)) if a < b => (false, a),
            _ => {
                let known = la.unwrap_or(0).min(lb.unwrap_or(0));
                let (ord, l) = texts.cmp_keys(old[i].key, new[j].key, known)?;
                (!ord.is_gt(), l)
            }
        };
        if take_old {
            emit(&mut out, old[i], la);
            la = (i + 1 < old.len()).then_some(old[i].lcp_next);
            lb = Some(cross);
            i += 1;
        } else {
            emit(&mut out, new[j], lb);
            lb = (j + 1 < new.len()).then_some(new[j].lcp_next);
            la = Some(cross);
            j += 1;
        }
    }
    for (rest, mut l, start) in [(old, la, i), (new, lb, j)] {
        for e in &rest[start..] {
            emit(&mut out, *e, l);
            l = Some(e.lcp_next);
        }
    }
    if let Some(last) = out.last_mut() {
        last.lcp_next = 0;
    }
    Ok(out)
}
