//! FM-index over the BWT of a byte text.
//!
//! Rows are 1-based; row 1 is the rotation starting with the terminator.
//! The terminator is ordered below every byte. Occ uses per-bucket
//! checkpoints plus a scan inside the bucket.

mod bwt;
mod codec;
mod huffman;

use std::collections::HashMap;

use thiserror::Error;

use crate::pager::{PagedStore, PagerError};

pub use bwt::{bwt_forward, bwt_forward_raw, bwt_inverse, BwtString};

const MAGIC: &[u8; 4] = b"FMI1";
/// Bytes of L per independently compressed chunk in the serialized form.
const CHUNK: usize = 1 << 16;
const NO_SYMBOL: u16 = u16::MAX;

#[derive(Debug, Error)]
pub enum FmError {
    #[error("text contains the reserved byte 0x00 at offset {0}")]
    ReservedByte(usize),
    #[error("pattern is empty")]
    EmptyPattern,
    #[error("row {row} outside 1..={rows}")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("prefix length {k} outside 0..={rows}")]
    PrefixOutOfRange { k: usize, rows: usize },
    #[error("locate needs a fat index")]
    LocateUnsupported,
    #[error("expected exactly one terminator, found {0}")]
    Terminators(usize),
    #[error("input is not the transform of any text")]
    NotABwt,
    #[error("sample rate and bucket size must be positive")]
    BadConfig,
    #[error("corrupt index: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Pager(#[from] PagerError),
}

pub type Result<T> = std::result::Result<T, FmError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Counting only.
    Tiny,
    /// Counting and locating through marked rows.
    Fat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FmConfig {
    pub mode: Mode,
    pub sample_rate: usize,
    pub bucket_size: usize,
}

impl Default for FmConfig {
    fn default() -> Self {
        FmConfig {
            mode: Mode::Fat,
            sample_rate: 32,
            bucket_size: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FmIndex {
    config: FmConfig,
    bwt: BwtString,
    counts: [u64; 256],
    /// c[b] = rows whose first symbol is smaller than byte b (terminator included)
    c: [u64; 257],
    dense: [u16; 256],
    sigma: usize,
    checkpoints: Vec<u32>,
    marked: HashMap<usize, u64>,
}

impl FmIndex {
    /// Builds the index of `text`, which must not contain 0x00.
    pub fn build(text: &[u8], config: FmConfig) -> Result<Self> {
        if let Some(i) = text.iter().position(|&b| b == 0) {
            return Err(FmError::ReservedByte(i));
        }
        Self::build_raw(text, config)
    }

    /// Builds the index of arbitrary bytes; 0x00 is an ordinary byte here.
    pub fn build_raw(text: &[u8], config: FmConfig) -> Result<Self> {
        if config.sample_rate == 0 || config.bucket_size == 0 {
            return Err(FmError::BadConfig);
        }
        let order = bwt::rotation_order(text);
        let bwt = bwt::bwt_from_order(text, &order);
        let mut marked = HashMap::new();
        if config.mode == Mode::Fat {
            let n = text.len();
            for (r, &p) in order.iter().enumerate() {
                if p % config.sample_rate == 0 || p == n {
                    marked.insert(r + 1, p as u64 + 1);
                }
            }
        }
        Ok(Self::from_parts(config, bwt, marked))
    }

    fn from_parts(config: FmConfig, bwt: BwtString, marked: HashMap<usize, u64>) -> Self {
        let mut counts = [0u64; 256];
        for (i, &b) in bwt.l.iter().enumerate() {
            if i + 1 != bwt.primary {
                counts[b as usize] += 1;
            }
        }
        let mut c = [0u64; 257];
        c[0] = 1;
        for b in 0..256 {
            c[b + 1] = c[b] + counts[b];
        }
        // stored bytes, the terminator placeholder 0x00 included
        let mut stored = counts;
        stored[0] += 1;
        let mut dense = [NO_SYMBOL; 256];
        let mut sigma = 0;
        for b in 0..256 {
            if stored[b] > 0 {
                dense[b] = sigma as u16;
                sigma += 1;
            }
        }
        let bs = config.bucket_size;
        let buckets = bwt.l.len() / bs + 1;
        let mut checkpoints = vec![0u32; buckets * sigma];
        let mut run = vec![0u32; sigma];
        for j in 0..buckets {
            checkpoints[j * sigma..(j + 1) * sigma].copy_from_slice(&run);
            for &b in bwt.l.iter().skip(j * bs).take(bs) {
                run[dense[b as usize] as usize] += 1;
            }
        }
        FmIndex {
            config,
            bwt,
            counts,
            c,
            dense,
            sigma,
            checkpoints,
            marked,
        }
    }

    pub fn config(&self) -> FmConfig {
        self.config
    }

    pub fn bwt(&self) -> &BwtString {
        &self.bwt
    }

    /// Number of rows, n + 1.
    pub fn rows(&self) -> usize {
        self.bwt.l.len()
    }

    pub fn text_len(&self) -> usize {
        self.rows() - 1
    }

    /// Characters of T# smaller than byte `b`.
    pub fn c(&self, b: u8) -> u64 {
        self.c[b as usize]
    }

    pub fn marked_rows(&self) -> usize {
        self.marked.len()
    }

    /// Occurrences of byte `b` in L[1..=k].
    pub fn occ(&self, b: u8, k: usize) -> Result<u64> {
        if k > self.rows() {
            return Err(FmError::PrefixOutOfRange { k, rows: self.rows() });
        }
        let d = self.dense[b as usize];
        if d == NO_SYMBOL {
            return Ok(0);
        }
        let bs = self.config.bucket_size;
        let j = k / bs;
        let base = self.checkpoints[j * self.sigma + d as usize] as u64;
        let within = self.bwt.l[j * bs..k].iter().filter(|&&x| x == b).count() as u64;
        let placeholder = (b == 0 && self.bwt.primary <= k) as u64;
        Ok(base + within - placeholder)
    }

    /// Row of the rotation starting one position earlier.
    pub fn lf(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.rows() {
            return Err(FmError::RowOutOfRange { row: i, rows: self.rows() });
        }
        if i == self.bwt.primary {
            return Ok(1);
        }
        let b = self.bwt.l[i - 1];
        Ok((self.c[b as usize] + self.occ(b, i)?) as usize)
    }

    /// Rows prefixed by `p`, as an inclusive 1-based range.
    pub fn get_rows(&self, p: &[u8]) -> Result<Option<(usize, usize)>> {
        let (&last_sym, rest) = p.split_last().ok_or(FmError::EmptyPattern)?;
        let mut first = self.c[last_sym as usize] + 1;
        let mut last = self.c[last_sym as usize + 1];
        for &ch in rest.iter().rev() {
            if first > last {
                break;
            }
            first = self.c[ch as usize] + self.occ(ch, first as usize - 1)? + 1;
            last = self.c[ch as usize] + self.occ(ch, last as usize)?;
        }
        Ok((first <= last).then_some((first as usize, last as usize)))
    }

    pub fn count(&self, p: &[u8]) -> Result<u64> {
        Ok(self.get_rows(p)?.map_or(0, |(f, l)| (l - f + 1) as u64))
    }

    /// Text position (1-based) of the suffix in row `i`, with the number of
    /// LF steps taken.
    pub fn locate_steps(&self, i: usize) -> Result<(u64, usize)> {
        if self.config.mode != Mode::Fat {
            return Err(FmError::LocateUnsupported);
        }
        if i == 0 || i > self.rows() {
            return Err(FmError::RowOutOfRange { row: i, rows: self.rows() });
        }
        let mut row = i;
        let mut v = 0;
        loop {
            if let Some(&pos) = self.marked.get(&row) {
                return Ok((pos + v as u64, v));
            }
            row = self.lf(row)?;
            v += 1;
            if v > self.config.sample_rate {
                return Err(FmError::Corrupt("no marked row within the sample rate"));
            }
        }
    }

    pub fn locate(&self, i: usize) -> Result<u64> {
        Ok(self.locate_steps(i)?.0)
    }

    /// Sorted positions of every occurrence of `p`.
    pub fn locate_all(&self, p: &[u8]) -> Result<Vec<u64>> {
        let mut out = match self.get_rows(p)? {
            Some((f, l)) => (f..=l).map(|i| self.locate(i)).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        out.sort_unstable();
        Ok(out)
    }

    /// Serialized form:
    ///
    /// ```text
    /// "FMI1" mode:u8 sample_rate:u32 bucket_size:u32 rows:u64 primary:u64
    /// chunk_count:u32 chunk_len:u32 x chunk_count   compressed chunks of L
    /// marked:u64   (row:u40, pos:u40) pairs sorted by row
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(match self.config.mode {
            Mode::Tiny => 0,
            Mode::Fat => 1,
        });
        out.extend_from_slice(&(self.config.sample_rate as u32).to_le_bytes());
        out.extend_from_slice(&(self.config.bucket_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(self.bwt.primary as u64).to_le_bytes());
        let chunks: Vec<Vec<u8>> = self
            .bwt
            .l
            .chunks(CHUNK)
            .map(|c| {
                let mut buf = Vec::new();
                codec::encode_chunk(c, &mut buf);
                buf
            })
            .collect();
        out.extend_from_slice(&(chunks.len() as u32).to_le_bytes());
        for c in &chunks {
            out.extend_from_slice(&(c.len() as u32).to_le_bytes());
        }
        for c in &chunks {
            out.extend_from_slice(c);
        }
        let mut pairs: Vec<(usize, u64)> = self.marked.iter().map(|(&r, &p)| (r, p)).collect();
        pairs.sort_unstable();
        out.extend_from_slice(&(pairs.len() as u64).to_le_bytes());
        for (r, p) in pairs {
            out.extend_from_slice(&(r as u64).to_le_bytes()[..5]);
            out.extend_from_slice(&p.to_le_bytes()[..5]);
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(FmError::Corrupt("bad magic"));
        }
        let mode = match r.take(1)?[0] {
            0 => Mode::Tiny,
            1 => Mode::Fat,
            _ => return Err(FmError::Corrupt("bad mode")),
        };
        let sample_rate = r.u32()? as usize;
        let bucket_size = r.u32()? as usize;
        if sample_rate == 0 || bucket_size == 0 {
            return Err(FmError::Corrupt("zero sample rate or bucket size"));
        }
        let rows = r.u64()? as usize;
        let primary = r.u64()? as usize;
        if rows == 0 || primary == 0 || primary > rows {
            return Err(FmError::Corrupt("bad row count"));
        }
        let n_chunks = r.u32()? as usize;
        let lens = (0..n_chunks).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let mut l = Vec::with_capacity(rows);
        for len in lens {
            let chunk = codec::decode_chunk(r.take(len as usize)?).ok_or(FmError::Corrupt("bad L chunk"))?;
            l.extend_from_slice(&chunk);
        }
        if l.len() != rows {
            return Err(FmError::Corrupt("L length differs from the row count"));
        }
        let n_marked = r.u64()? as usize;
        let mut marked = HashMap::with_capacity(n_marked);
        for _ in 0..n_marked {
            let row = r.u40()? as usize;
            let pos = r.u40()?;
            if row == 0 || row > rows {
                return Err(FmError::Corrupt("marked row out of range"));
            }
            marked.insert(row, pos);
        }
        if r.pos != buf.len() {
            return Err(FmError::Corrupt("trailing bytes"));
        }
        let config = FmConfig {
            mode,
            sample_rate,
            bucket_size,
        };
        Ok(Self::from_parts(config, BwtString { l, primary }, marked))
    }

    pub fn save(&self, store: &mut PagedStore) -> Result<()> {
        Ok(store.write_stream(&self.to_bytes())?)
    }

    pub fn load(store: &mut PagedStore) -> Result<Self> {
        Self::from_bytes(&store.read_stream()?)
    }

    /// Byte counts of the text.
    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n).ok_or(FmError::Corrupt("truncated"))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn u40(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        b[..5].copy_from_slice(self.take(5)?);
        Ok(u64::from_le_bytes(b))
    }
}
