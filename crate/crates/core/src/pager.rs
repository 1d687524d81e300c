//! Fixed-size page storage with bulk/random I/O accounting.
//!
//! Every index in this crate reads and writes its persistent state through a
//! [`PagedStore`]. The store counts logical page accesses and classifies them
//! into maximal runs of consecutive page ids: an access that does not continue
//! the current run (id != previous id + 1) is a *seek* and starts a new run.
//! Run lengths are reported so that callers can decide after the fact which
//! runs are long enough to count as bulk transfers.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Smallest page size accepted by [`PagedStore`].
pub const MIN_PAGE_SIZE: usize = 64;

pub type PageId = u64;

#[derive(Debug, Error)]
pub enum PagerError {
    #[error("invalid store geometry: page size {page_size}, memory budget {mem_budget}")]
    InvalidSize { page_size: usize, mem_budget: usize },
    #[error("page {id} out of range (store has {count} pages)")]
    OutOfRange { id: PageId, count: u64 },
    #[error("payload of {len} bytes exceeds page size {page_size}")]
    Oversized { len: usize, page_size: usize },
    #[error("backing file length {len} is not a multiple of page size {page_size}")]
    Misaligned { len: u64, page_size: usize },
    #[error("bad stream: {0}")]
    Stream(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PagerError>;

/// Page access counters.
///
/// `seeks` and `bulk_runs` coincide by construction (every seek opens a run);
/// both are kept because analyses talk about them separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoStats {
    pub page_reads: u64,
    pub page_writes: u64,
    pub seeks: u64,
    pub bulk_runs: u64,
    pub max_run_len: u64,
}

impl IoStats {
    pub fn accesses(&self) -> u64 {
        self.page_reads + self.page_writes
    }

    /// Field-wise difference, used to attribute I/O to a phase of an algorithm.
    /// `max_run_len` is taken from `self`.
    pub fn since(&self, earlier: &IoStats) -> IoStats {
        IoStats {
            page_reads: self.page_reads - earlier.page_reads,
            page_writes: self.page_writes - earlier.page_writes,
            seeks: self.seeks - earlier.seeks,
            bulk_runs: self.bulk_runs - earlier.bulk_runs,
            max_run_len: self.max_run_len,
        }
    }

    /// `key=value` lines, one counter per line.
    pub fn report(&self, prefix: &str) -> String {
        format!(
            "{p}page_reads={}\n{p}page_writes={}\n{p}seeks={}\n{p}bulk_runs={}\n{p}max_run_len={}\n",
            self.page_reads,
            self.page_writes,
            self.seeks,
            self.bulk_runs,
            self.max_run_len,
            p = prefix
        )
    }
}

enum Backing {
    File(File),
    Memory(Vec<u8>),
}

/// A page-addressed store backed either by a file (raw concatenation of
/// pages, no header) or by an in-memory buffer.
///
/// Not thread-safe: counters are plain integers and the store must have a
/// single owner at a time.
pub struct PagedStore {
    backing: Backing,
    path: Option<PathBuf>,
    page_size: usize,
    mem_budget: usize,
    page_count: u64,
    last_accessed: Option<PageId>,
    current_run: u64,
    stats: IoStats,
}

impl std::fmt::Debug for PagedStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PagedStore")
            .field("path", &self.path)
            .field("page_size", &self.page_size)
            .field("mem_budget", &self.mem_budget)
            .field("page_count", &self.page_count)
            .field("stats", &self.stats)
            .finish()
    }
}

fn check_geometry(page_size: usize, mem_budget: usize) -> Result<()> {
    if page_size < MIN_PAGE_SIZE || mem_budget < page_size {
        return Err(PagerError::InvalidSize {
            page_size,
            mem_budget,
        });
    }
    Ok(())
}

impl PagedStore {
    fn with_backing(
        backing: Backing,
        path: Option<PathBuf>,
        page_size: usize,
        mem_budget: usize,
        page_count: u64,
    ) -> Self {
        PagedStore {
            backing,
            path,
            page_size,
            mem_budget,
            page_count,
            last_accessed: None,
            current_run: 0,
            stats: IoStats::default(),
        }
    }

    /// Creates (or truncates) a file-backed store at `path`.
    pub fn create(path: impl AsRef<Path>, page_size: usize, mem_budget: usize) -> Result<Self> {
        check_geometry(page_size, mem_budget)?;
        let path = path.as_ref();
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)?;
        Ok(Self::with_backing(
            Backing::File(file),
            Some(path.to_path_buf()),
            page_size,
            mem_budget,
            0,
        ))
    }

    /// Opens an existing file-backed store.
    pub fn open(path: impl AsRef<Path>, page_size: usize, mem_budget: usize) -> Result<Self> {
        check_geometry(page_size, mem_budget)?;
        let path = path.as_ref();
        let file = OpenOptions::new().read(true).write(true).open(path)?;
        let len = file.metadata()?.len();
        if len % page_size as u64 != 0 {
            return Err(PagerError::Misaligned { len, page_size });
        }
        Ok(Self::with_backing(
            Backing::File(file),
            Some(path.to_path_buf()),
            page_size,
            mem_budget,
            len / page_size as u64,
        ))
    }

    /// A store whose pages live in an anonymous temporary file.
    pub fn temporary(page_size: usize, mem_budget: usize) -> Result<Self> {
        check_geometry(page_size, mem_budget)?;
        let file = tempfile::tempfile()?;
        Ok(Self::with_backing(
            Backing::File(file),
            None,
            page_size,
            mem_budget,
            0,
        ))
    }

    /// A store whose pages live in memory. Counters behave exactly as for a
    /// file-backed store.
    pub fn in_memory(page_size: usize, mem_budget: usize) -> Result<Self> {
        check_geometry(page_size, mem_budget)?;
        Ok(Self::with_backing(
            Backing::Memory(Vec::new()),
            None,
            page_size,
            mem_budget,
            0,
        ))
    }

    /// An empty store with the same geometry and the same kind of backing
    /// (memory stays in memory, files become anonymous temporary files).
    pub fn fresh_like(&self) -> Result<Self> {
        match self.backing {
            Backing::Memory(_) => Self::in_memory(self.page_size, self.mem_budget),
            Backing::File(_) => Self::temporary(self.page_size, self.mem_budget),
        }
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn mem_budget(&self) -> usize {
        self.mem_budget
    }

    pub fn page_count(&self) -> u64 {
        self.page_count
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn io_stats(&self) -> IoStats {
        self.stats
    }

    /// Zeroes the counters and forgets the previous access, so the next access
    /// opens a new run.
    pub fn reset_stats(&mut self) {
        self.stats = IoStats::default();
        self.last_accessed = None;
        self.current_run = 0;
    }

    fn record(&mut self, id: PageId) {
        let continues = matches!(self.last_accessed, Some(prev) if prev.checked_add(1) == Some(id));
        if continues {
            self.current_run += 1;
        } else {
            self.stats.seeks += 1;
            self.stats.bulk_runs += 1;
            self.current_run = 1;
        }
        self.stats.max_run_len = self.stats.max_run_len.max(self.current_run);
        self.last_accessed = Some(id);
    }

    fn check_id(&self, id: PageId) -> Result<()> {
        if id >= self.page_count {
            return Err(PagerError::OutOfRange {
                id,
                count: self.page_count,
            });
        }
        Ok(())
    }

    /// Reads page `id` into `buf`, which must be exactly one page long.
    pub fn read_page_into(&mut self, id: PageId, buf: &mut [u8]) -> Result<()> {
        self.check_id(id)?;
        assert_eq!(buf.len(), self.page_size, "buffer must be one page");
        let offset = id * self.page_size as u64;
        match &mut self.backing {
            Backing::File(f) => {
                f.seek(SeekFrom::Start(offset))?;
                f.read_exact(buf)?;
            }
            Backing::Memory(m) => {
                let start = offset as usize;
                buf.copy_from_slice(&m[start..start + self.page_size]);
            }
        }
        self.stats.page_reads += 1;
        self.record(id);
        Ok(())
    }

    pub fn read_page(&mut self, id: PageId) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; self.page_size];
        self.read_page_into(id, &mut buf)?;
        Ok(buf)
    }

    fn put(&mut self, id: PageId, bytes: &[u8]) -> Result<()> {
        if bytes.len() > self.page_size {
            return Err(PagerError::Oversized {
                len: bytes.len(),
                page_size: self.page_size,
            });
        }
        let offset = id * self.page_size as u64;
        let pad = self.page_size - bytes.len();
        match &mut self.backing {
            Backing::File(f) => {
                f.seek(SeekFrom::Start(offset))?;
                f.write_all(bytes)?;
                if pad > 0 {
                    f.write_all(&vec![0u8; pad])?;
                }
            }
            Backing::Memory(m) => {
                let start = offset as usize;
                let end = start + self.page_size;
                if m.len() < end {
                    m.resize(end, 0);
                }
                m[start..start + bytes.len()].copy_from_slice(bytes);
                m[start + bytes.len()..end].fill(0);
            }
        }
        self.stats.page_writes += 1;
        self.record(id);
        Ok(())
    }

    /// Overwrites page `id`. Short payloads are zero-padded.
    pub fn write_page(&mut self, id: PageId, bytes: &[u8]) -> Result<()> {
        self.check_id(id)?;
        self.put(id, bytes)
    }

    /// Appends a page and returns its id. Short payloads are zero-padded.
    pub fn append_page(&mut self, bytes: &[u8]) -> Result<PageId> {
        let id = self.page_count;
        if bytes.len() > self.page_size {
            return Err(PagerError::Oversized {
                len: bytes.len(),
                page_size: self.page_size,
            });
        }
        self.page_count += 1;
        if let Err(e) = self.put(id, bytes) {
            self.page_count -= 1;
            return Err(e);
        }
        Ok(id)
    }

    pub fn sync(&mut self) -> Result<()> {
        if let Backing::File(f) = &mut self.backing {
            f.sync_all()?;
        }
        Ok(())
    }

    /// Appends `bytes` as a run of consecutive pages, returning the first
    /// page id. The last page is zero-padded.
    pub fn append_blob(&mut self, bytes: &[u8]) -> Result<PageId> {
        let first = self.page_count;
        for chunk in bytes.chunks(self.page_size) {
            self.append_page(chunk)?;
        }
        Ok(first)
    }

    /// Reads `len` bytes stored from the start of page `first` onwards.
    pub fn read_blob(&mut self, first: PageId, len: usize) -> Result<Vec<u8>> {
        let pages = len.div_ceil(self.page_size);
        let mut out = vec![0u8; pages * self.page_size];
        for (i, chunk) in out.chunks_mut(self.page_size).enumerate() {
            self.read_page_into(first + i as u64, chunk)?;
        }
        out.truncate(len);
        Ok(out)
    }

    /// Writes `bytes` from page 0 onwards behind an 8-byte length prefix.
    /// The store must be empty.
    pub fn write_stream(&mut self, bytes: &[u8]) -> Result<()> {
        if self.page_count != 0 {
            return Err(PagerError::Stream("stream store must be empty"));
        }
        let mut buf = Vec::with_capacity(8 + bytes.len());
        buf.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        buf.extend_from_slice(bytes);
        self.append_blob(&buf)?;
        self.sync()
    }

    /// Reads back a buffer written by [`PagedStore::write_stream`].
    pub fn read_stream(&mut self) -> Result<Vec<u8>> {
        if self.page_count == 0 {
            return Err(PagerError::Stream("empty stream store"));
        }
        let first = self.read_page(0)?;
        let len = u64::from_le_bytes(first[..8].try_into().expect("8 bytes")) as usize;
        if 8 + len > self.page_count as usize * self.page_size {
            return Err(PagerError::Stream("stream length exceeds the store"));
        }
        let mut out = self.read_blob(0, 8 + len)?;
        out.drain(..8);
        Ok(out)
    }

    /// Reads every page of the store into one buffer.
    pub fn read_all(&mut self) -> Result<Vec<u8>> {
        let len = self.page_count as usize * self.page_size;
        self.read_blob(0, len)
    }
}
