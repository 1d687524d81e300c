//! Bottom-up construction from an ordered suffix list.
//!
//! Leaves get about 2b consecutive suffixes each. Every upper level groups
//! about b nodes of the level below, storing the leftmost and rightmost key of
//! each child. Pages are appended in one sequential pass per level; page 0 is
//! a header rewritten at the end.

use super::bitkey::SuffixRef;
use super::node::{NodeKind, NodePage};
use super::textstore::TextEntry;
use super::{Result, SbtError};
use crate::pager::{PageId, PagedStore};

const MAGIC: &[u8; 4] = b"SBT1";

/// One suffix in tree order with its bit-lcp to the next one (0 for the last).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub key: SuffixRef,
    pub lcp_next: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeMeta {
    pub b: usize,
    pub height: u32,
    pub root: Option<PageId>,
    pub keys: u64,
    pub first_leaf: Option<PageId>,
}

struct Summary {
    page: u32,
    left: SuffixRef,
    right: SuffixRef,
    lcp_lr: u64,
    boundary: u64,
}

/// Sizes of `groups` nearly equal consecutive groups covering `n` items.
fn even_split(n: usize, groups: usize) -> impl Iterator<Item = usize> {
    let base = n / groups;
    let extra = n % groups;
    (0..groups).map(move |g| base + usize::from(g < extra))
}

fn page_id(p: PageId) -> Result<u32> {
    u32::try_from(p).map_err(|_| SbtError::Corrupt("page id exceeds 32 bits"))
}

/// Writes the tree for `entries` into the empty `store`. `key_bits` gives
/// the key length of a suffix (used as the lcp of a key with itself).
pub fn write_tree(
    store: &mut PagedStore,
    entries: &[Entry],
    key_bits: impl Fn(SuffixRef) -> u64,
    b: usize,
    directory: &[TextEntry],
) -> Result<TreeMeta> {
    if b < 2 {
        return Err(SbtError::Branching(b));
    }
    if store.page_count() != 0 {
        return Err(SbtError::Corrupt("tree store must be empty"));
    }
    let bsz = store.page_size();
    store.append_page(&[])?;
    let mut meta = TreeMeta {
        b,
        height: 0,
        root: None,
        keys: entries.len() as u64,
        first_leaf: None,
    };
    if !entries.is_empty() {
        let leaves = entries.len().div_ceil(2 * b);
        let first = store.page_count();
        meta.first_leaf = Some(first);
        let mut level = Vec::with_capacity(leaves);
        let mut start = 0;
        for (i, size) in even_split(entries.len(), leaves).enumerate() {
            let chunk = &entries[start..start + size];
            start += size;
            let id = first + i as PageId;
            let node = NodePage {
                kind: NodeKind::Leaf,
                sp: chunk.iter().map(|e| e.key).collect(),
                lcp: chunk.iter().map(|e| e.lcp_next).collect(),
                children: Vec::new(),
                left: if i > 0 { Some(page_id(id - 1)?) } else { None },
                right: if i + 1 < leaves { Some(page_id(id + 1)?) } else { None },
            };
            let got = store.append_page(&node.encode(bsz)?)?;
            debug_assert_eq!(got, id);
            let inner = &node.lcp[..size - 1];
            level.push(Summary {
                page: page_id(id)?,
                left: chunk[0].key,
                right: chunk[size - 1].key,
                lcp_lr: inner.iter().copied().min().unwrap_or_else(|| key_bits(chunk[0].key)),
                boundary: chunk[size - 1].lcp_next,
            });
        }
        meta.height = 1;
        while level.len() > 1 {
            let groups = level.len().div_ceil(b);
            let mut next = Vec::with_capacity(groups);
            let mut start = 0;
            for size in even_split(level.len(), groups) {
                let kids = &level[start..start + size];
                start += size;
                let mut sp = Vec::with_capacity(2 * size);
                let mut lcp = Vec::with_capacity(2 * size - 1);
                for (c, k) in kids.iter().enumerate() {
                    sp.push(k.left);
                    sp.push(k.right);
                    lcp.push(k.lcp_lr);
                    if c + 1 < size {
                        lcp.push(k.boundary);
                    }
                }
                let node = NodePage {
                    kind: NodeKind::Internal,
                    sp,
                    lcp,
                    children: kids.iter().map(|k| k.page).collect(),
                    left: None,
                    right: None,
                };
                let id = store.append_page(&node.encode(bsz)?)?;
                next.push(Summary {
                    page: page_id(id)?,
                    left: kids[0].left,
                    right: kids[size - 1].right,
                    lcp_lr: node.lcp.iter().copied().min().expect("non-empty"),
                    boundary: kids[size - 1].boundary,
                });
            }
            level = next;
            meta.height += 1;
        }
        meta.root = Some(level[0].page as PageId);
    }
    let mut dir = Vec::with_capacity(4 + 17 * directory.len());
    dir.extend_from_slice(&(directory.len() as u32).to_le_bytes());
    for e in directory {
        dir.extend_from_slice(&e.first.to_le_bytes());
        dir.extend_from_slice(&e.len.to_le_bytes());
        dir.push(e.live as u8);
    }
    let dir_first = store.append_blob(&dir)?;
    let mut header = Vec::with_capacity(64);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&(bsz as u32).to_le_bytes());
    header.extend_from_slice(&(b as u32).to_le_bytes());
    header.extend_from_slice(&meta.height.to_le_bytes());
    header.extend_from_slice(&meta.root.unwrap_or(u64::MAX).to_le_bytes());
    header.extend_from_slice(&meta.keys.to_le_bytes());
    header.extend_from_slice(&meta.first_leaf.unwrap_or(u64::MAX).to_le_bytes());
    header.extend_from_slice(&dir_first.to_le_bytes());
    header.extend_from_slice(&(dir.len() as u64).to_le_bytes());
    store.write_page(0, &header)?;
    store.sync()?;
    Ok(meta)
}

/// Reads the header and text directory written by [`write_tree`].
pub fn read_header(store: &mut PagedStore) -> Result<(TreeMeta, Vec<TextEntry>)> {
    if store.page_count() == 0 {
        return Err(SbtError::Corrupt("empty index file"));
    }
    let h = store.read_page(0)?;
    if &h[..4] != MAGIC {
        return Err(SbtError::Corrupt("bad magic"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(h[i..i + 4].try_into().expect("4 bytes"));
    let u64_at = |i: usize| u64::from_le_bytes(h[i..i + 8].try_into().expect("8 bytes"));
    if u32_at(4) as usize != store.page_size() {
        return Err(SbtError::Corrupt("page size differs from the one used at build time"));
    }
    let opt = |v: u64| (v != u64::MAX).then_some(v);
    let meta = TreeMeta {
        b: u32_at(8) as usize,
        height: u32_at(12),
        root: opt(u64_at(16)),
        keys: u64_at(24),
        first_leaf: opt(u64_at(32)),
    };
    let dir_first = u64_at(40);
    let dir_len = u64_at(48) as usize;
    let d = store.read_blob(dir_first, dir_len)?;
    let n = u32::from_le_bytes(d.get(..4).ok_or(SbtError::Corrupt("bad directory"))?.try_into().expect("4 bytes")) as usize;
    if d.len() != 4 + 17 * n {
        return Err(SbtError::Corrupt("bad directory"));
    }
    let dir = (0..n)
        .map(|i| {
            let e = &d[4 + 17 * i..4 + 17 * (i + 1)];
            TextEntry {
                first: u64::from_le_bytes(e[0..8].try_into().expect("8 bytes")),
                len: u64::from_le_bytes(e[8..16].try_into().expect("8 bytes")),
                live: e[16] != 0,
            }
        })
        .collect();
    Ok((meta, dir))
}
