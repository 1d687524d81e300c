//! On-disk suffix array: `SA01`, n as u64 LE, then n 5-byte LE offsets,
//! stored as raw pages (the tail of the last page is zero padding).

use std::cmp::Ordering;

use super::{cmp_suffix_prefix, Result, SuffArrError, SuffixArray};
use crate::pager::{IoStats, PageId, PagedStore};

const MAGIC: &[u8; 4] = b"SA01";
const HEADER: usize = 12;
const ENTRY: usize = 5;

pub fn write_sa_file(store: &mut PagedStore, sa: &SuffixArray) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER + ENTRY * sa.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(sa.len() as u64).to_le_bytes());
    for &p in sa.as_slice() {
        buf.extend_from_slice(&p.to_le_bytes()[..ENTRY]);
    }
    store.append_blob(&buf)?;
    store.sync()?;
    Ok(())
}

pub fn read_sa_file(store: &mut PagedStore) -> Result<SuffixArray> {
    let mut f = SaFile::new(store)?;
    let sa = (0..f.len()).map(|i| f.get(i)).collect::<Result<Vec<_>>>()?;
    Ok(SuffixArray::from_offsets(sa))
}

/// Suffix array read on demand, one page at a time.
pub struct SaFile<'a> {
    store: &'a mut PagedStore,
    n: usize,
    cached: Option<(PageId, Vec<u8>)>,
}

impl<'a> SaFile<'a> {
    pub fn new(store: &'a mut PagedStore) -> Result<Self> {
        if store.page_count() == 0 {
            return Err(SuffArrError::BadFile("empty file"));
        }
        let first = store.read_page(0)?;
        if &first[..4] != MAGIC {
            return Err(SuffArrError::BadFile("bad magic"));
        }
        let n = u64::from_le_bytes(first[4..12].try_into().expect("8 bytes")) as usize;
        let need = (HEADER + ENTRY * n).div_ceil(store.page_size()) as u64;
        if need > store.page_count() {
            return Err(SuffArrError::BadFile("truncated"));
        }
        Ok(SaFile {
            store,
            n,
            cached: Some((0, first)),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn byte(&mut self, off: usize) -> Result<u8> {
        let b = self.store.page_size();
        let page = (off / b) as PageId;
        if self.cached.as_ref().map(|c| c.0) != Some(page) {
            let data = self.store.read_page(page)?;
            self.cached = Some((page, data));
        }
        Ok(self.cached.as_ref().expect("cached").1[off % b])
    }

    /// Entry `i` (0-based rank), a 1-based text offset.
    pub fn get(&mut self, i: usize) -> Result<u64> {
        let base = HEADER + ENTRY * i;
        let mut bytes = [0u8; 8];
        for (k, slot) in bytes.iter_mut().take(ENTRY).enumerate() {
            *slot = self.byte(base + k)?;
        }
        Ok(u64::from_le_bytes(bytes))
    }

    /// Binary search with one level of indirection: each probe reads one SA
    /// entry, then compares against the text.
    pub fn search(&mut self, text: &[u8], pattern: &[u8]) -> Result<Vec<u64>> {
        if pattern.is_empty() {
            return Err(SuffArrError::EmptyPattern);
        }
        let (mut lo, mut hi) = (0usize, self.n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let p = self.get(mid)? as usize;
            if p == 0 || p > text.len() {
                return Err(SuffArrError::Mismatch("offset beyond text"));
            }
            if cmp_suffix_prefix(text, p - 1, pattern) == Ordering::Less {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let mut out = Vec::new();
        for i in lo..self.n {
            let p = self.get(i)? as usize;
            if !text[p - 1..].starts_with(pattern) {
                break;
            }
            out.push(p as u64);
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn io_stats(&self) -> IoStats {
        self.store.io_stats()
    }
}
