//! Incremental suffix-array construction over a paged store.
//!
//! The text is processed in stages of `m` characters, left to right. Stage h
//! sorts the suffixes starting in its chunk in memory (SA_int), counts how many
//! previously seen suffixes fall into each gap of SA_int (array C, one binary
//! search per earlier suffix) and merges SA_int into the external array SA_ext
//! with one sequential pass, guided by C. SA_ext alternates between two page
//! regions of the store so each merge reads one region and writes the other.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::{check_text, Result, SuffArrError, SuffixArray};
use crate::pager::{IoStats, PageId, PagedStore};

/// Page I/O per stage, plus the setup (text upload) and final read-back.
#[derive(Debug, Clone, Default)]
pub struct IncrementalReport {
    pub setup: IoStats,
    pub stages: Vec<IoStats>,
    pub finish: IoStats,
}

impl IncrementalReport {
    pub fn max_stage_seeks(&self) -> u64 {
        self.stages.iter().map(|s| s.seeks).max().unwrap_or(0)
    }
}

/// LRU cache of text pages.
struct TextCache {
    first: PageId,
    n: usize,
    page_size: usize,
    capacity: usize,
    pages: HashMap<PageId, (Vec<u8>, u64)>,
    tick: u64,
    scratch: Vec<u8>,
}

impl TextCache {
    fn page(&mut self, store: &mut PagedStore, idx: usize) -> Result<&[u8]> {
        self.tick += 1;
        let tick = self.tick;
        if !self.pages.contains_key(&(idx as PageId)) {
            if self.pages.len() >= self.capacity {
                let victim = *self
                    .pages
                    .iter()
                    .min_by_key(|(_, (_, t))| *t)
                    .map(|(k, _)| k)
                    .expect("cache not empty");
                self.pages.remove(&victim);
            }
            let data = store.read_page(self.first + idx as PageId)?;
            self.pages.insert(idx as PageId, (data, tick));
        }
        let entry = self.pages.get_mut(&(idx as PageId)).expect("present");
        entry.1 = tick;
        Ok(&entry.0)
    }

    /// Full comparison of the suffixes at 0-based `a` != `b`.
    fn cmp(&mut self, store: &mut PagedStore, mut a: usize, mut b: usize) -> Result<Ordering> {
        let bsz = self.page_size;
        loop {
            if a == self.n {
                return Ok(Ordering::Greater);
            }
            if b == self.n {
                return Ok(Ordering::Less);
            }
            let la = (bsz - a % bsz).min(self.n - a);
            let lb = (bsz - b % bsz).min(self.n - b);
            let len = la.min(lb);
            let mut scratch = std::mem::take(&mut self.scratch);
            scratch.clear();
            scratch.extend_from_slice(&self.page(store, a / bsz)?[a % bsz..a % bsz + len]);
            let pb = self.page(store, b / bsz)?;
            let o = scratch[..].cmp(&pb[b % bsz..b % bsz + len]);
            self.scratch = scratch;
            if o != Ordering::Equal {
                return Ok(o);
            }
            a += len;
            b += len;
        }
    }
}

/// Sequential reader of 4-byte entries from a page region.
struct EntryReader {
    next_page: PageId,
    batch_pages: usize,
    buf: Vec<u8>,
    pos: usize,
    remaining: usize,
}

impl EntryReader {
    fn next(&mut self, store: &mut PagedStore) -> Result<u32> {
        debug_assert!(self.remaining > 0);
        if self.buf.len() - self.pos < 4 {
            self.buf.drain(..self.pos);
            self.pos = 0;
            let bsz = store.page_size();
            let want_bytes = 4 * self.remaining;
            let mut pages = 0;
            while pages < self.batch_pages && self.buf.len() < want_bytes {
                let start = self.buf.len();
                self.buf.resize(start + bsz, 0);
                store.read_page_into(self.next_page, &mut self.buf[start..])?;
                self.next_page += 1;
                pages += 1;
            }
        }
        let v = u32::from_le_bytes(self.buf[self.pos..self.pos + 4].try_into().expect("4 bytes"));
        self.pos += 4;
        self.remaining -= 1;
        Ok(v)
    }
}

/// Buffered writer of 4-byte entries into consecutive pages of a region.
struct EntryWriter {
    next_page: PageId,
    batch_pages: usize,
    buf: Vec<u8>,
}

impl EntryWriter {
    fn push(&mut self, store: &mut PagedStore, v: u32) -> Result<()> {
        self.buf.extend_from_slice(&v.to_le_bytes());
        if self.buf.len() >= self.batch_pages * store.page_size() {
            self.flush_full(store)?;
        }
        Ok(())
    }

    fn flush_full(&mut self, store: &mut PagedStore) -> Result<()> {
        let bsz = store.page_size();
        let full = self.buf.len() / bsz * bsz;
        for chunk in self.buf[..full].chunks(bsz) {
            store.write_page(self.next_page, chunk)?;
            self.next_page += 1;
        }
        self.buf.drain(..full);
        Ok(())
    }

    fn finish(mut self, store: &mut PagedStore) -> Result<()> {
        self.flush_full(store)?;
        if !self.buf.is_empty() {
            store.write_page(self.next_page, &self.buf)?;
        }
        Ok(())
    }
}

/// Builds the suffix array of `text` in stages of `m` suffixes, keeping the
/// text and SA_ext in `store`. The store's counters are reset at the start of
/// every stage; per-stage counts are returned in the report.
pub fn build_sa_incremental(text: &[u8], m: usize, store: &mut PagedStore) -> Result<(SuffixArray, IncrementalReport)> {
    check_text(text)?;
    let n = text.len();
    if m == 0 || m > n {
        return Err(SuffArrError::StageSize { m, n });
    }
    if n >= u32::MAX as usize {
        return Err(SuffArrError::TooLong(n));
    }
    let bsz = store.page_size();
    let budget = store.mem_budget();
    let fixed = m + 4 * m + 4 * (m + 1);
    let needed = fixed + 3 * bsz;
    if budget < needed {
        return Err(SuffArrError::StoreTooSmall { needed, budget });
    }
    let leftover = budget - fixed;
    let cache_pages = (leftover / 2 / bsz).min(n.div_ceil(bsz)).max(1);
    let merge_pages = ((leftover - cache_pages * bsz) / 2 / bsz).max(1);

    let mut report = IncrementalReport::default();
    let text_first = store.append_blob(text)?;
    let region_pages = (4 * n).div_ceil(bsz) as u64;
    let region = [store.page_count(), store.page_count() + region_pages];
    let zero = vec![0u8; bsz];
    for _ in 0..2 * region_pages {
        store.append_page(&zero)?;
    }
    report.setup = store.io_stats();

    let mut cache = TextCache {
        first: text_first,
        n,
        page_size: bsz,
        capacity: cache_pages,
        pages: HashMap::new(),
        tick: 0,
        scratch: Vec::new(),
    };
    let mut src = 0usize;
    let mut start = 0usize;
    while start < n {
        store.reset_stats();
        let end = (start + m).min(n);
        for p in start / bsz..=(end - 1) / bsz {
            cache.page(store, p)?;
        }

        let mut err = None;
        let mut sa_int: Vec<usize> = (start..end).collect();
        sa_int.sort_by(|&a, &b| match cache.cmp(store, a, b) {
            Ok(o) => o,
            Err(e) => {
                err.get_or_insert(e);
                Ordering::Equal
            }
        });
        if let Some(e) = err {
            return Err(e);
        }

        let mut counts = vec![0u32; sa_int.len() + 1];
        for i in 0..start {
            let (mut lo, mut hi) = (0usize, sa_int.len());
            while lo < hi {
                let mid = (lo + hi) / 2;
                if cache.cmp(store, sa_int[mid], i)? == Ordering::Less {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            counts[lo] += 1;
        }

        let dst = 1 - src;
        let mut reader = EntryReader {
            next_page: region[src],
            batch_pages: merge_pages,
            buf: Vec::new(),
            pos: 0,
            remaining: start,
        };
        let mut writer = EntryWriter {
            next_page: region[dst],
            batch_pages: merge_pages,
            buf: Vec::new(),
        };
        for (j, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                let v = reader.next(store)?;
                writer.push(store, v)?;
            }
            if let Some(&p) = sa_int.get(j) {
                writer.push(store, p as u32)?;
            }
        }
        writer.finish(store)?;
        src = dst;
        report.stages.push(store.io_stats());
        start = end;
    }

    store.reset_stats();
    let mut reader = EntryReader {
        next_page: region[src],
        batch_pages: merge_pages,
        buf: Vec::new(),
        pos: 0,
        remaining: n,
    };
    let mut sa = Vec::with_capacity(n);
    for _ in 0..n {
        sa.push(reader.next(store)? as u64 + 1);
    }
    report.finish = store.io_stats();
    Ok((SuffixArray::from_offsets(sa), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suffarr::build_sa_internal;

    #[test]
    fn running_example_three_stages() {
        let t = b"abababbc";
        let mut store = PagedStore::in_memory(64, 4096).unwrap();
        let (sa, report) = build_sa_incremental(t, 3, &mut store).unwrap();
        assert_eq!(sa.as_slice(), &[1, 3, 5, 2, 4, 6, 7, 8]);
        assert_eq!(report.stages.len(), 3);
    }

    #[test]
    fn single_stage() {
        let t = b"mississippi";
        let mut store = PagedStore::in_memory(64, 4096).unwrap();
        let (sa, report) = build_sa_incremental(t, t.len(), &mut store).unwrap();
        assert_eq!(sa, build_sa_internal(t).unwrap());
        assert_eq!(report.stages.len(), 1);
    }

    #[test]
    fn errors() {
        let mut store = PagedStore::in_memory(64, 256).unwrap();
        assert!(matches!(
            build_sa_incremental(b"abc", 0, &mut store),
            Err(SuffArrError::StageSize { .. })
        ));
        assert!(matches!(
            build_sa_incremental(b"abc", 4, &mut store),
            Err(SuffArrError::StageSize { .. })
        ));
        let long = vec![b'x'; 100];
        assert!(matches!(
            build_sa_incremental(&long, 64, &mut store),
            Err(SuffArrError::StoreTooSmall { .. })
        ));
    }

    #[test]
    fn unary_text_few_seeks() {
        let t = vec![b'a'; 4096];
        for m in [64usize, 256] {
            let mut store = PagedStore::in_memory(512, 64 << 10).unwrap();
            let (sa, report) = build_sa_incremental(&t, m, &mut store).unwrap();
            assert_eq!(sa, build_sa_internal(&t).unwrap());
            assert_eq!(report.stages.len(), 4096 / m);
            assert!(report.max_stage_seeks() <= 4, "{:?}", report.stages);
        }
    }

    #[test]
    fn cache_never_outgrows_the_text() {
        use rand::{Rng, SeedableRng};
        // a stage size close to n leaves little room: SA_ext must still be read in one batch
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t: Vec<u8> = (0..2972).map(|_| b'a' + rng.random_range(0..4u8)).collect();
            let mut store = PagedStore::in_memory(256, 64 << 10).unwrap();
            let (sa, report) = build_sa_incremental(&t, 2726, &mut store).unwrap();
            assert_eq!(sa, build_sa_internal(&t).unwrap());
            assert!(report.max_stage_seeks() <= 4, "seed {seed}: {:?}", report.stages);
        }
    }
}
