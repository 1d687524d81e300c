//! Node page encoding.
//!
//! ```text
//! kind: u8            0 = leaf, 1 = internal
//! count: u16 LE       number of SP entries
//! sp: count x 5 bytes text id (u16 LE), offset (u24 LE)
//! skips               continuation-bit codes of zigzag(Lcp[i] - Lcp[i-1]), Lcp[-1] = 0
//!                     leaf: count values (the last one is the lcp with the
//!                     first key of the right sibling, 0 if none)
//!                     internal: count - 1 values
//! 0x80                tagged sentinel closing the skip stream
//! children: u32 LE    internal only, count / 2 ids
//! siblings: u32 LE    leaf only, left then right, u32::MAX when absent
//! ```

use super::bitkey::SuffixRef;
use super::{Result, SbtError};
use crate::varint;

const NONE: u32 = u32::MAX;
const SENTINEL: u8 = 0x80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePage {
    pub kind: NodeKind,
    pub sp: Vec<SuffixRef>,
    /// Bit-lcps of adjacent keys; leaves carry one extra trailing value.
    pub lcp: Vec<u64>,
    pub children: Vec<u32>,
    pub left: Option<u32>,
    pub right: Option<u32>,
}

impl NodePage {
    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Leaf
    }

    /// Lcp between the last key and the first key of the right sibling.
    pub fn boundary_lcp(&self) -> u64 {
        if self.is_leaf() {
            *self.lcp.last().unwrap_or(&0)
        } else {
            0
        }
    }

    pub fn encode(&self, page_size: usize) -> Result<Vec<u8>> {
        let count = self.sp.len();
        let mut out = Vec::with_capacity(page_size);
        out.push(match self.kind {
            NodeKind::Leaf => 0,
            NodeKind::Internal => 1,
        });
        out.extend_from_slice(&(count as u16).to_le_bytes());
        for r in &self.sp {
            out.extend_from_slice(&r.text.to_le_bytes());
            out.extend_from_slice(&r.offset.to_le_bytes()[..3]);
        }
        let mut prev = 0i64;
        for &l in &self.lcp {
            let l = l as i64;
            varint::encode_cb_into(varint::zigzag(l - prev), &mut out).map_err(|_| SbtError::Corrupt("lcp out of range"))?;
            prev = l;
        }
        out.push(SENTINEL);
        match self.kind {
            NodeKind::Internal => {
                for &c in &self.children {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            NodeKind::Leaf => {
                out.extend_from_slice(&self.left.unwrap_or(NONE).to_le_bytes());
                out.extend_from_slice(&self.right.unwrap_or(NONE).to_le_bytes());
            }
        }
        if out.len() > page_size {
            return Err(SbtError::PageOverflow {
                needed: out.len(),
                page_size,
            });
        }
        Ok(out)
    }

    pub fn decode(page: &[u8]) -> Result<NodePage> {
        let corrupt = || SbtError::Corrupt("truncated node page");
        let kind = match page.first() {
            Some(0) => NodeKind::Leaf,
            Some(1) => NodeKind::Internal,
            _ => return Err(SbtError::Corrupt("bad node kind")),
        };
        let count = u16::from_le_bytes(page.get(1..3).ok_or_else(corrupt)?.try_into().expect("2 bytes")) as usize;
        let mut pos = 3;
        let mut sp = Vec::with_capacity(count);
        for _ in 0..count {
            let e = page.get(pos..pos + 5).ok_or_else(corrupt)?;
            let text = u16::from_le_bytes([e[0], e[1]]);
            let offset = u32::from_le_bytes([e[2], e[3], e[4], 0]);
            sp.push(SuffixRef { text, offset });
            pos += 5;
        }
        let nlcp = match kind {
            NodeKind::Leaf => count,
            NodeKind::Internal => count.saturating_sub(1),
        };
        let mut lcp = Vec::with_capacity(nlcp);
        let mut acc = 0i64;
        for _ in 0..nlcp {
            let (z, next) = varint::decode_cb(page, pos).map_err(|_| SbtError::Corrupt("bad skip stream"))?;
            acc += varint::unzigzag(z);
            if acc < 0 {
                return Err(SbtError::Corrupt("skip prefix sum is negative"));
            }
            lcp.push(acc as u64);
            pos = next;
        }
        if page.get(pos) != Some(&SENTINEL) {
            return Err(SbtError::Corrupt("missing skip sentinel"));
        }
        pos += 1;
        let read_u32 = |pos: &mut usize| -> Result<u32> {
            let v = u32::from_le_bytes(page.get(*pos..*pos + 4).ok_or_else(corrupt)?.try_into().expect("4 bytes"));
            *pos += 4;
            Ok(v)
        };
        let mut node = NodePage {
            kind,
            sp,
            lcp,
            children: Vec::new(),
            left: None,
            right: None,
        };
        match kind {
            NodeKind::Internal => {
                if !count.is_multiple_of(2) {
                    return Err(SbtError::Corrupt("internal node with odd key count"));
                }
                for _ in 0..count / 2 {
                    node.children.push(read_u32(&mut pos)?);
                }
            }
            NodeKind::Leaf => {
                let l = read_u32(&mut pos)?;
                let r = read_u32(&mut pos)?;
                node.left = (l != NONE).then_some(l);
                node.right = (r != NONE).then_some(r);
            }
        }
        Ok(node)
    }
}

/// Largest branching parameter b whose worst-case leaf (2b keys) and
/// internal node (b children) fit in a page, assuming 5-byte skips.
pub fn fit_branching(page_size: usize) -> Result<usize> {
    let leaf = page_size.saturating_sub(12) / 20;
    let internal = (page_size + 1) / 24;
    let b = leaf.min(internal);
    if b < 2 {
        return Err(SbtError::PageOverflow {
            needed: 24 * 2 - 1,
            page_size,
        });
    }
    Ok(b)
}
