//! Append-only paged storage for the indexed texts. Every text starts on a
//! fresh page; the directory of (first page, length, live) lives in memory
//! and is persisted by the tree.

use std::cmp::Ordering;

use super::bitkey::{bit_lcp, pattern_bits, SuffixRef, SYMBOL_BITS, TERMINATOR};
use super::{Result, SbtError};
use crate::pager::{IoStats, PageId, PagedStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextEntry {
    pub first: PageId,
    pub len: u64,
    pub live: bool,
}

pub struct TextStore {
    store: PagedStore,
    dir: Vec<TextEntry>,
    fetches: u64,
}

impl TextStore {
    pub fn new(store: PagedStore) -> Self {
        TextStore {
            store,
            dir: Vec::new(),
            fetches: 0,
        }
    }

    pub fn with_directory(store: PagedStore, dir: Vec<TextEntry>) -> Result<Self> {
        for e in &dir {
            let pages = e.len.div_ceil(store.page_size() as u64);
            if e.first + pages > store.page_count() {
                return Err(SbtError::Corrupt("text directory points past the text store"));
            }
        }
        Ok(TextStore {
            store,
            dir,
            fetches: 0,
        })
    }

    pub fn directory(&self) -> &[TextEntry] {
        &self.dir
    }

    /// Ids of texts that have not been deleted.
    pub fn live_ids(&self) -> Vec<u16> {
        (0..self.dir.len() as u16).filter(|&i| self.dir[i as usize].live).collect()
    }

    pub fn add(&mut self, text: &[u8]) -> Result<u16> {
        if text.is_empty() {
            return Err(SbtError::EmptyText);
        }
        if text.len() as u64 > super::bitkey::MAX_OFFSET as u64 {
            return Err(SbtError::TextTooLong(text.len()));
        }
        if let Some(i) = text.iter().position(|&b| b == 0) {
            return Err(SbtError::ReservedByte(i));
        }
        if self.dir.len() >= u16::MAX as usize {
            return Err(SbtError::TooManyTexts);
        }
        let first = self.store.append_blob(text)?;
        self.dir.push(TextEntry {
            first,
            len: text.len() as u64,
            live: true,
        });
        Ok((self.dir.len() - 1) as u16)
    }

    pub fn remove(&mut self, id: u16) -> Result<()> {
        match self.dir.get_mut(id as usize) {
            Some(e) if e.live => {
                e.live = false;
                Ok(())
            }
            _ => Err(SbtError::UnknownText(id)),
        }
    }

    pub fn entry(&self, id: u16) -> Result<TextEntry> {
        self.dir.get(id as usize).copied().ok_or(SbtError::UnknownText(id))
    }

    pub fn text_len(&self, id: u16) -> u64 {
        self.dir[id as usize].len
    }

    pub fn key_bits(&self, r: SuffixRef) -> u64 {
        super::bitkey::key_bits(self.text_len(r.text), r.offset)
    }

    pub fn read_text(&mut self, id: u16) -> Result<Vec<u8>> {
        let e = self.entry(id)?;
        Ok(self.store.read_blob(e.first, e.len as usize)?)
    }

    /// Number of pattern fetches issued so far.
    pub fn fetches(&self) -> u64 {
        self.fetches
    }

    pub fn io_stats(&self) -> IoStats {
        self.store.io_stats()
    }

    pub fn reset_stats(&mut self) {
        self.store.reset_stats();
        self.fetches = 0;
    }

    pub fn store(&self) -> &PagedStore {
        &self.store
    }

    /// Bit-lcp of pattern `p` with the key of `r`, given that the first
    /// `known_bits` bits are already known to match. Reads only the text
    /// pages needed to find the first mismatch.
    pub fn pattern_lcp(&mut self, r: SuffixRef, p: &[u8], known_bits: u64) -> Result<u64> {
        self.fetches += 1;
        let e = self.entry(r.text)?;
        let start = r.offset as u64 - 1;
        let mut i = (known_bits / SYMBOL_BITS) as usize;
        let b = self.store.page_size() as u64;
        let mut page: Option<(PageId, Vec<u8>)> = None;
        while i < p.len() {
            let pos = start + i as u64;
            if pos >= e.len {
                return Ok(bit_lcp(i as u64, p[i] as u16, TERMINATOR));
            }
            let pid = e.first + pos / b;
            if page.as_ref().map(|x| x.0) != Some(pid) {
                page = Some((pid, self.store.read_page(pid)?));
            }
            let data = &page.as_ref().expect("page loaded").1;
            let avail = ((b - pos % b) as usize).min((e.len - pos) as usize).min(p.len() - i);
            let off = (pos % b) as usize;
            let slice = &data[off..off + avail];
            match slice.iter().zip(&p[i..i + avail]).position(|(x, y)| x != y) {
                Some(k) => {
                    let at = i + k;
                    return Ok(bit_lcp(at as u64, p[at] as u16, slice[k] as u16));
                }
                None => i += avail,
            }
        }
        Ok(pattern_bits(p))
    }

    fn symbol(&mut self, r: SuffixRef, i: u64, cache: &mut Option<(PageId, Vec<u8>)>) -> Result<u16> {
        let e = self.entry(r.text)?;
        let pos = r.offset as u64 - 1 + i;
        if pos >= e.len {
            return Ok(TERMINATOR);
        }
        let b = self.store.page_size() as u64;
        let pid = e.first + pos / b;
        if cache.as_ref().map(|x| x.0) != Some(pid) {
            *cache = Some((pid, self.store.read_page(pid)?));
        }
        Ok(cache.as_ref().expect("page loaded").1[(pos % b) as usize] as u16)
    }

    /// Compares the keys of `a` and `b`, skipping `known_bits` leading bits
    /// known to be equal. Returns the key order and their bit-lcp; identical
    /// keys compare equal with lcp equal to the key length.
    pub fn cmp_keys(&mut self, a: SuffixRef, b: SuffixRef, known_bits: u64) -> Result<(Ordering, u64)> {
        let last = (self.key_bits(a).min(self.key_bits(b)) / SYMBOL_BITS) - 1;
        let mut i = (known_bits / SYMBOL_BITS).min(last);
        let (mut ca, mut cb) = (None, None);
        loop {
            let x = self.symbol(a, i, &mut ca)?;
            let y = self.symbol(b, i, &mut cb)?;
            if x != y {
                return Ok((x.cmp(&y), bit_lcp(i, x, y)));
            }
            if x == TERMINATOR {
                return Ok((Ordering::Equal, bit_lcp(i, x, y)));
            }
            i += 1;
        }
    }
}
