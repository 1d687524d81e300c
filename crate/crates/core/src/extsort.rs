//! External multiway merge sort over a scratch [`PagedStore`].
//!
//! Records are buffered until the memory budget is reached, sorted, and
//! written out as runs of consecutive pages. Runs are merged with a k-way heap;
//! when there are more runs than the fan-in allows, intermediate passes merge
//! groups of runs into longer runs. Inputs that fit in the budget never touch
//! the store.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::pager::{IoStats, PageId, PagedStore, PagerError};

#[derive(Debug, Error)]
pub enum ExtSortError {
    #[error(transparent)]
    Pager(#[from] PagerError),
    #[error("corrupt run data")]
    Corrupt,
}

pub type Result<T> = std::result::Result<T, ExtSortError>;

/// A sortable record with a byte encoding for spilling.
pub trait Record: Ord + Sized {
    fn encode(&self, out: &mut Vec<u8>);
    /// Decodes one record from the whole of `buf`.
    fn decode(buf: &[u8]) -> Option<Self>;
    /// Approximate in-memory footprint, used for budget accounting.
    fn approx_bytes(&self) -> usize;
}

impl Record for (u32, u32) {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0.to_le_bytes());
        out.extend_from_slice(&self.1.to_le_bytes());
    }
    fn decode(buf: &[u8]) -> Option<Self> {
        if buf.len() != 8 {
            return None;
        }
        Some((
            u32::from_le_bytes(buf[0..4].try_into().ok()?),
            u32::from_le_bytes(buf[4..8].try_into().ok()?),
        ))
    }
    fn approx_bytes(&self) -> usize {
        8
    }
}

/// Sequence of u64 keys followed by a u64 tag; compared lexicographically.
impl Record for (Vec<u64>, u64) {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.0.len() as u32).to_le_bytes());
        for &x in &self.0 {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&self.1.to_le_bytes());
    }
    fn decode(buf: &[u8]) -> Option<Self> {
        let n = u32::from_le_bytes(buf.get(0..4)?.try_into().ok()?) as usize;
        let mut pos = 4;
        if buf.len() != pos + 8 * (n + 1) {
            return None;
        }
        let mut keys = Vec::with_capacity(n);
        for _ in 0..n {
            keys.push(u64::from_le_bytes(buf[pos..pos + 8].try_into().ok()?));
            pos += 8;
        }
        let tag = u64::from_le_bytes(buf[pos..pos + 8].try_into().ok()?);
        Some((keys, tag))
    }
    fn approx_bytes(&self) -> usize {
        48 + 8 * self.0.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    first: PageId,
    pages: u64,
    records: u64,
}

struct RunWriter {
    first: PageId,
    pending: Vec<u8>,
    records: u64,
    pages: u64,
}

impl RunWriter {
    fn new(store: &PagedStore) -> Self {
        RunWriter {
            first: store.page_count(),
            pending: Vec::new(),
            records: 0,
            pages: 0,
        }
    }

    fn push<R: Record>(&mut self, store: &mut PagedStore, r: &R, scratch: &mut Vec<u8>) -> Result<()> {
        scratch.clear();
        r.encode(scratch);
        self.pending.extend_from_slice(&(scratch.len() as u32).to_le_bytes());
        self.pending.extend_from_slice(scratch);
        self.records += 1;
        let b = store.page_size();
        if self.pending.len() >= b {
            let full = self.pending.len() / b * b;
            for chunk in self.pending[..full].chunks(b) {
                store.append_page(chunk)?;
                self.pages += 1;
            }
            self.pending.drain(..full);
        }
        Ok(())
    }

    fn finish(mut self, store: &mut PagedStore) -> Result<Run> {
        if !self.pending.is_empty() {
            store.append_page(&self.pending)?;
            self.pages += 1;
            self.pending.clear();
        }
        Ok(Run {
            first: self.first,
            pages: self.pages,
            records: self.records,
        })
    }
}

struct RunReader {
    next_page: PageId,
    end_page: PageId,
    remaining: u64,
    buf: Vec<u8>,
    pos: usize,
    chunk_pages: u64,
}

impl RunReader {
    fn new(run: Run, chunk_pages: u64) -> Self {
        RunReader {
            next_page: run.first,
            end_page: run.first + run.pages,
            remaining: run.records,
            buf: Vec::new(),
            pos: 0,
            chunk_pages: chunk_pages.max(1),
        }
    }

    fn fill(&mut self, store: &mut PagedStore, want: usize) -> Result<()> {
        while self.buf.len() - self.pos < want && self.next_page < self.end_page {
            self.buf.drain(..self.pos);
            self.pos = 0;
            let upto = (self.next_page + self.chunk_pages).min(self.end_page);
            let b = store.page_size();
            while self.next_page < upto {
                let start = self.buf.len();
                self.buf.resize(start + b, 0);
                store.read_page_into(self.next_page, &mut self.buf[start..])?;
                self.next_page += 1;
            }
        }
        Ok(())
    }

    fn next<R: Record>(&mut self, store: &mut PagedStore) -> Result<Option<R>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        self.fill(store, 4)?;
        let header = 4;
        let len_bytes = self.buf.get(self.pos..self.pos + header).ok_or(ExtSortError::Corrupt)?;
        let len = u32::from_le_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
        self.fill(store, header + len)?;
        let start = self.pos + header;
        if start + len > self.buf.len() {
            return Err(ExtSortError::Corrupt);
        }
        let r = R::decode(&self.buf[start..start + len]).ok_or(ExtSortError::Corrupt)?;
        self.pos = start + len;
        self.remaining -= 1;
        Ok(Some(r))
    }
}

/// Accumulates records and produces them in sorted order.
pub struct ExternalSorter<R: Record> {
    store: PagedStore,
    buffer: Vec<R>,
    buffer_bytes: usize,
    runs: Vec<Run>,
    scratch: Vec<u8>,
}

impl<R: Record> ExternalSorter<R> {
    /// `scratch` must be empty; its memory budget bounds the in-memory buffer.
    pub fn new(scratch: PagedStore) -> Self {
        ExternalSorter {
            store: scratch,
            buffer: Vec::new(),
            buffer_bytes: 0,
            runs: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn push(&mut self, r: R) -> Result<()> {
        self.buffer_bytes += r.approx_bytes();
        self.buffer.push(r);
        if self.buffer_bytes >= self.store.mem_budget() {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        self.buffer.sort_unstable();
        let mut w = RunWriter::new(&self.store);
        for r in self.buffer.drain(..) {
            w.push(&mut self.store, &r, &mut self.scratch)?;
        }
        self.runs.push(w.finish(&mut self.store)?);
        self.buffer_bytes = 0;
        Ok(())
    }

    fn fan_in(&self) -> usize {
        let pages = self.store.mem_budget() / self.store.page_size();
        (pages.saturating_sub(1)).max(2)
    }

    fn chunk_pages(&self, k: usize) -> u64 {
        let pages = self.store.mem_budget() / self.store.page_size();
        (pages / (k + 1)).max(1) as u64
    }

    fn merge_group(&mut self, group: &[Run]) -> Result<Run> {
        let chunk = self.chunk_pages(group.len());
        let mut readers: Vec<RunReader> = group.iter().map(|&r| RunReader::new(r, chunk)).collect();
        let mut heap = BinaryHeap::new();
        for (i, rd) in readers.iter_mut().enumerate() {
            if let Some(r) = rd.next::<R>(&mut self.store)? {
                heap.push(Reverse((r, i)));
            }
        }
        let mut w = RunWriter::new(&self.store);
        while let Some(Reverse((r, i))) = heap.pop() {
            w.push(&mut self.store, &r, &mut self.scratch)?;
            if let Some(nx) = readers[i].next::<R>(&mut self.store)? {
                heap.push(Reverse((nx, i)));
            }
        }
        w.finish(&mut self.store)
    }

    /// Completes the sort. The returned stream yields records in ascending order.
    pub fn finish(mut self) -> Result<SortedStream<R>> {
        if self.runs.is_empty() {
            let mut buffer = std::mem::take(&mut self.buffer);
            buffer.sort_unstable();
            return Ok(SortedStream {
                store: self.store,
                initial_runs: 0,
                inner: Inner::Memory(buffer.into_iter()),
            });
        }
        self.spill()?;
        let initial_runs = self.runs.len();
        let fan = self.fan_in();
        while self.runs.len() > fan {
            let runs = std::mem::take(&mut self.runs);
            for group in runs.chunks(fan) {
                let merged = if group.len() == 1 {
                    group[0]
                } else {
                    self.merge_group(group)?
                };
                self.runs.push(merged);
            }
        }
        let chunk = self.chunk_pages(self.runs.len());
        let mut readers: Vec<RunReader> = self.runs.iter().map(|&r| RunReader::new(r, chunk)).collect();
        let mut heap = BinaryHeap::new();
        for (i, rd) in readers.iter_mut().enumerate() {
            if let Some(r) = rd.next::<R>(&mut self.store)? {
                heap.push(Reverse((r, i)));
            }
        }
        Ok(SortedStream {
            store: self.store,
            initial_runs,
            inner: Inner::Merge { readers, heap },
        })
    }

    /// Number of spilled runs so far.
    pub fn run_count(&self) -> usize {
        self.runs.len()
    }
}

enum Inner<R> {
    Memory(std::vec::IntoIter<R>),
    Merge {
        readers: Vec<RunReader>,
        heap: BinaryHeap<Reverse<(R, usize)>>,
    },
}

pub struct SortedStream<R: Record> {
    store: PagedStore,
    initial_runs: usize,
    inner: Inner<R>,
}

impl<R: Record> SortedStream<R> {
    pub fn io_stats(&self) -> IoStats {
        self.store.io_stats()
    }

    /// Runs written before merging (0 when everything fit in memory).
    pub fn initial_runs(&self) -> usize {
        self.initial_runs
    }

    pub fn spilled(&self) -> bool {
        matches!(self.inner, Inner::Merge { .. })
    }
}

impl<R: Record> Iterator for SortedStream<R> {
    type Item = Result<R>;

    fn next(&mut self) -> Option<Result<R>> {
        match &mut self.inner {
            Inner::Memory(it) => it.next().map(Ok),
            Inner::Merge { readers, heap } => {
                let Reverse((r, i)) = heap.pop()?;
                match readers[i].next::<R>(&mut self.store) {
                    Ok(Some(nx)) => heap.push(Reverse((nx, i))),
                    Ok(None) => {}
                    Err(e) => return Some(Err(e)),
                }
                Some(Ok(r))
            }
        }
    }
}

/// Sorts `items` using a scratch store, collecting the result.
pub fn sort_all<R: Record>(items: impl IntoIterator<Item = R>, scratch: PagedStore) -> Result<(Vec<R>, IoStats)> {
    let mut s = ExternalSorter::new(scratch);
    for it in items {
        s.push(it)?;
    }
    let stream = s.finish()?;
    let mut out = Vec::new();
    let mut stream = stream;
    for r in stream.by_ref() {
        out.push(r?);
    }
    Ok((out, stream.io_stats()))
}
