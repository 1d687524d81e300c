//! Block-addressing inverted index over Huffword-compressed blocks, plus
//! Heaps/Zipf fits for a corpus.
//!
//! The text is cut into blocks of about `block_size` bytes; a cut moves
//! forward to the next token boundary so no token straddles two blocks.
//! Blocks are numbered from 1. For every term the index keeps the sorted list
//! of blocks holding it, gap-coded with continuation-bit bytes. A word query
//! reads only the candidate blocks and scans them in compressed form.
//!
//! Store layout:
//!
//! ```text
//! page 0          "BIX1" header_page:u64 header_len:u64
//! pages 1..       block payloads, each starting on a fresh page
//! header pages    block_size:u32 text_len:u64
//!                 model_len:u64 model ("HWM1", absent when model_len = 0)
//!                 terms:u32, per term (posting_off:u64 posting_len:u32)
//!                 postings_len:u64 postings
//!                 blocks:u32, per block (src_off:u64 src_len:u32 first_page:u64 dt_len:u32)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use thiserror::Error;

use crate::extsort::{ExtSortError, ExternalSorter};
use crate::huffword::{compressed_find, is_word_byte, tokenize, HuffError, HuffwordModel, Vocabulary};
use crate::pager::{IoStats, PageId, PagedStore, PagerError};
use crate::varint::{decode_gaps, encode_gaps, VarintError};

const MAGIC: &[u8; 4] = b"BIX1";
pub const MIN_BLOCK_SIZE: usize = 64;
/// Fewest word tokens [`corpus_stats`] will fit.
pub const MIN_STATS_TOKENS: usize = 100;

#[derive(Debug, Error)]
pub enum BlockError {
    #[error("block size {0} is below the minimum of 64 bytes")]
    BlockSize(usize),
    #[error("prefix is empty")]
    EmptyPattern,
    #[error("corpus too small: {0} word tokens, need at least 100")]
    TooSmall(usize),
    #[error("corpus has a single distinct word; the fits are undefined")]
    SingleTerm,
    #[error("corrupt index: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Huff(#[from] HuffError),
    #[error(transparent)]
    Varint(#[from] VarintError),
    #[error(transparent)]
    Sort(#[from] ExtSortError),
    #[error(transparent)]
    Pager(#[from] PagerError),
}

pub type Result<T> = std::result::Result<T, BlockError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEntry {
    pub src_off: u64,
    pub src_len: u32,
    pub first_page: PageId,
    pub dt_len: u32,
}

/// What the construction did, for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    /// Distinct (block, term) pairs.
    pub pairs: u64,
    /// Sorted runs spilled before the merge; 0 when the pairs fit in memory.
    pub runs: usize,
    pub scratch_io: IoStats,
}

pub struct BlockIndex {
    block_size: usize,
    text_len: u64,
    model: Option<HuffwordModel>,
    postings_at: Vec<(u64, u32)>,
    postings: Vec<u8>,
    blocks: Vec<BlockEntry>,
    store: PagedStore,
}

/// Source byte ranges of the blocks of `text`.
pub fn cut_blocks(text: &[u8], block_size: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for t in tokenize(text) {
        let end = t.offset + t.bytes.len();
        if end - start >= block_size {
            out.push(start..end);
            start = end;
        }
    }
    if start < text.len() {
        out.push(start..text.len());
    }
    out
}

impl BlockIndex {
    /// Builds the index into `store`, which must be empty. (block, term)
    /// pairs are sorted externally on a scratch store whose memory budget is
    /// `mem_budget`.
    pub fn build(text: &[u8], block_size: usize, mem_budget: usize, mut store: PagedStore) -> Result<(Self, BuildReport)> {
        if block_size < MIN_BLOCK_SIZE {
            return Err(BlockError::BlockSize(block_size));
        }
        if store.page_count() != 0 {
            return Err(BlockError::Corrupt("target store is not empty"));
        }
        let tokens = tokenize(text);
        let vocab = Vocabulary::build(&tokens);
        let model = if vocab.is_empty() {
            None
        } else {
            Some(HuffwordModel::build(&vocab)?)
        };
        let ranges = cut_blocks(text, block_size);

        store.append_page(&[])?;
        let scratch = PagedStore::temporary(store.page_size(), mem_budget.max(store.page_size()))?;
        let mut sorter: ExternalSorter<(u32, u32)> = ExternalSorter::new(scratch);
        let mut blocks = Vec::with_capacity(ranges.len());
        let mut report = BuildReport::default();
        let mut tok = 0;
        for (b, r) in ranges.iter().enumerate() {
            let model = model.as_ref().expect("a non-empty block has tokens");
            let first = tok;
            while tok < tokens.len() && tokens[tok].offset < r.end {
                tok += 1;
            }
            let block_tokens = &tokens[first..tok];
            let mut ids: Vec<u32> = block_tokens
                .iter()
                .map(|t| vocab.id(t.bytes).expect("vocabulary built from these tokens") as u32)
                .collect();
            ids.sort_unstable();
            ids.dedup();
            for id in ids {
                sorter.push((id, b as u32 + 1))?;
                report.pairs += 1;
            }
            let dt = model.encode_tokens(block_tokens)?;
            let first_page = store.append_blob(&dt)?;
            blocks.push(BlockEntry {
                src_off: r.start as u64,
                src_len: r.len() as u32,
                first_page,
                dt_len: dt.len() as u32,
            });
        }

        let mut stream = sorter.finish()?;
        report.runs = stream.initial_runs();
        let mut postings_at = Vec::with_capacity(vocab.len());
        let mut postings = Vec::new();
        let mut current: Option<u32> = None;
        let mut list: Vec<u64> = Vec::new();
        let mut flush = |term: u32, list: &mut Vec<u64>, postings_at: &mut Vec<(u64, u32)>| -> Result<()> {
            if term as usize != postings_at.len() {
                return Err(BlockError::Corrupt("term without postings"));
            }
            let bytes = encode_gaps(list)?;
            postings_at.push((postings.len() as u64, bytes.len() as u32));
            postings.extend_from_slice(&bytes);
            list.clear();
            Ok(())
        };
        for pair in stream.by_ref() {
            let (term, block) = pair?;
            if current.is_some_and(|c| c != term) {
                flush(current.expect("checked"), &mut list, &mut postings_at)?;
            }
            current = Some(term);
            list.push(block as u64);
        }
        if let Some(c) = current {
            flush(c, &mut list, &mut postings_at)?;
        }
        report.scratch_io = stream.io_stats();

        let idx = BlockIndex {
            block_size,
            text_len: text.len() as u64,
            model,
            postings_at,
            postings,
            blocks,
            store,
        };
        let idx = idx.write_header()?;
        Ok((idx, report))
    }

    fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.block_size as u32).to_le_bytes());
        out.extend_from_slice(&self.text_len.to_le_bytes());
        let model = self.model.as_ref().map(|m| m.to_bytes()).unwrap_or_default();
        out.extend_from_slice(&(model.len() as u64).to_le_bytes());
        out.extend_from_slice(&model);
        out.extend_from_slice(&(self.postings_at.len() as u32).to_le_bytes());
        for &(off, len) in &self.postings_at {
            out.extend_from_slice(&off.to_le_bytes());
            out.extend_from_slice(&len.to_le_bytes());
        }
        out.extend_from_slice(&(self.postings.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.postings);
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for b in &self.blocks {
            out.extend_from_slice(&b.src_off.to_le_bytes());
            out.extend_from_slice(&b.src_len.to_le_bytes());
            out.extend_from_slice(&b.first_page.to_le_bytes());
            out.extend_from_slice(&b.dt_len.to_le_bytes());
        }
        out
    }

    fn write_header(mut self) -> Result<Self> {
        let header = self.header_bytes();
        let page = self.store.append_blob(&header)?;
        let mut sb = Vec::with_capacity(20);
        sb.extend_from_slice(MAGIC);
        sb.extend_from_slice(&page.to_le_bytes());
        sb.extend_from_slice(&(header.len() as u64).to_le_bytes());
        self.store.write_page(0, &sb)?;
        self.store.sync()?;
        Ok(self)
    }

    /// Opens an index previously built into `store`. Reads the superblock and
    /// the header pages; block payloads stay on the store.
    pub fn open(mut store: PagedStore) -> Result<Self> {
        if store.page_count() == 0 {
            return Err(BlockError::Corrupt("empty store"));
        }
        let sb = store.read_page(0)?;
        if &sb[..4] != MAGIC {
            return Err(BlockError::Corrupt("bad magic"));
        }
        let page = u64::from_le_bytes(sb[4..12].try_into().expect("8 bytes"));
        let len = u64::from_le_bytes(sb[12..20].try_into().expect("8 bytes")) as usize;
        if page == 0 || page + (len.div_ceil(store.page_size()) as u64) > store.page_count() {
            return Err(BlockError::Corrupt("header out of range"));
        }
        let header = store.read_blob(page, len)?;
        let mut r = Reader { buf: &header, pos: 0 };
        let block_size = r.u32()? as usize;
        let text_len = r.u64()?;
        let model = match r.u64()? as usize {
            0 => None,
            n => Some(HuffwordModel::from_bytes(r.take(n)?)?),
        };
        let terms = r.u32()? as usize;
        if terms != model.as_ref().map_or(0, |m| m.len()) {
            return Err(BlockError::Corrupt("posting table does not match the vocabulary"));
        }
        let mut postings_at = Vec::with_capacity(terms);
        for _ in 0..terms {
            postings_at.push((r.u64()?, r.u32()?));
        }
        let plen = r.u64()? as usize;
        let postings = r.take(plen)?.to_vec();
        if postings_at.iter().any(|&(o, l)| o as usize + l as usize > postings.len()) {
            return Err(BlockError::Corrupt("posting list out of range"));
        }
        let nblocks = r.u32()? as usize;
        let mut blocks = Vec::with_capacity(nblocks.min(1 << 20));
        for _ in 0..nblocks {
            let e = BlockEntry {
                src_off: r.u64()?,
                src_len: r.u32()?,
                first_page: r.u64()?,
                dt_len: r.u32()?,
            };
            if e.first_page == 0 || e.first_page + (e.dt_len as usize).div_ceil(store.page_size()) as u64 > page {
                return Err(BlockError::Corrupt("block payload out of range"));
            }
            blocks.push(e);
        }
        if r.pos != header.len() {
            return Err(BlockError::Corrupt("trailing header bytes"));
        }
        Ok(BlockIndex {
            block_size,
            text_len,
            model,
            postings_at,
            postings,
            blocks,
            store,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn text_len(&self) -> u64 {
        self.text_len
    }

    pub fn model(&self) -> Option<&HuffwordModel> {
        self.model.as_ref()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Directory entry of block `b` (1-based).
    pub fn block_entry(&self, b: u32) -> BlockEntry {
        self.blocks[b as usize - 1]
    }

    /// Pages holding the payload of block `b` (1-based).
    pub fn block_pages(&self, b: u32) -> Range<PageId> {
        let e = self.block_entry(b);
        e.first_page..e.first_page + (e.dt_len as usize).div_ceil(self.store.page_size()) as u64
    }

    /// Bytes of postings, the gap-coded part of the index.
    pub fn postings_len(&self) -> usize {
        self.postings.len()
    }

    pub fn io_stats(&self) -> IoStats {
        self.store.io_stats()
    }

    pub fn reset_stats(&mut self) {
        self.store.reset_stats();
    }

    pub fn into_store(self) -> PagedStore {
        self.store
    }

    fn term_postings(&self, id: usize) -> Result<Vec<u32>> {
        let (off, len) = self.postings_at[id];
        let bytes = &self.postings[off as usize..off as usize + len as usize];
        let list = decode_gaps(bytes)?;
        if list.last().is_some_and(|&b| b as usize > self.blocks.len()) {
            return Err(BlockError::Corrupt("posting beyond the last block"));
        }
        Ok(list.into_iter().map(|b| b as u32).collect())
    }

    /// Blocks holding the term `w`, ascending.
    pub fn postings(&self, w: &[u8]) -> Result<Vec<u32>> {
        match self.model.as_ref().and_then(|m| m.id(w)) {
            Some(id) => self.term_postings(id),
            None => Ok(Vec::new()),
        }
    }

    /// Compressed payload of block `b` (1-based), read through the pager.
    pub fn block_payload(&mut self, b: u32) -> Result<Vec<u8>> {
        let e = self.block_entry(b);
        Ok(self.store.read_blob(e.first_page, e.dt_len as usize)?)
    }

    /// Source bytes of block `b`.
    pub fn decode_block(&mut self, b: u32) -> Result<Vec<u8>> {
        let dt = self.block_payload(b)?;
        match &self.model {
            Some(m) => Ok(m.decode(&dt)?),
            None => Ok(Vec::new()),
        }
    }

    /// Source offsets of the codeword starts in `dt`, keyed by DT offset.
    fn source_offsets(&self, dt: &[u8], base: u64) -> Result<Vec<(usize, usize, u64)>> {
        let model = self.model.as_ref().ok_or(BlockError::Corrupt("no model"))?;
        let mut src = base;
        let mut out = Vec::new();
        for (off, id) in model.codewords(dt)? {
            out.push((off, id, src));
            src += model.term(id).len() as u64;
        }
        Ok(out)
    }

    /// Source offsets of the term `w`, ascending. Reads only the blocks in
    /// its posting list.
    pub fn query_word(&mut self, w: &[u8]) -> Result<Vec<u64>> {
        let Some(id) = self.model.as_ref().and_then(|m| m.id(w)) else {
            return Ok(Vec::new());
        };
        let cw = self.model.as_ref().expect("id found").code(id).to_vec();
        let mut out = Vec::new();
        for b in self.term_postings(id)? {
            let dt = self.block_payload(b)?;
            let hits = compressed_find(&dt, &cw);
            if hits.is_empty() {
                return Err(BlockError::Corrupt("candidate block without the term"));
            }
            let starts = self.source_offsets(&dt, self.block_entry(b).src_off)?;
            for h in hits {
                let k = starts.binary_search_by_key(&h, |x| x.0).map_err(|_| BlockError::Corrupt("match off a codeword start"))?;
                out.push(starts[k].2);
            }
        }
        Ok(out)
    }

    /// Words starting with `p`, each with its ascending source offsets. The
    /// candidate blocks of all expanded words are scanned once each.
    pub fn query_prefix(&mut self, p: &[u8]) -> Result<BTreeMap<Vec<u8>, Vec<u64>>> {
        if p.is_empty() {
            return Err(BlockError::EmptyPattern);
        }
        let mut out = BTreeMap::new();
        let Some(model) = &self.model else {
            return Ok(out);
        };
        let terms = model.terms();
        let lo = terms.partition_point(|t| t.as_slice() < p);
        let hi = lo + terms[lo..].partition_point(|t| t.starts_with(p));
        let wanted: Vec<usize> = (lo..hi).filter(|&i| is_word_byte(terms[i][0])).collect();
        let mut candidates: Vec<u32> = Vec::new();
        for &id in &wanted {
            candidates.extend(self.term_postings(id)?);
        }
        candidates.sort_unstable();
        candidates.dedup();
        let by_id: HashMap<usize, Vec<u8>> = wanted.iter().map(|&i| (i, terms[i].clone())).collect();
        for b in candidates {
            let dt = self.block_payload(b)?;
            for (_, id, src) in self.source_offsets(&dt, self.block_entry(b).src_off)? {
                if let Some(term) = by_id.get(&id) {
                    out.entry(term.clone()).or_insert_with(Vec::new).push(src);
                }
            }
        }
        Ok(out)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n).ok_or(BlockError::Corrupt("truncated header"))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Heaps and Zipf exponents of a corpus, fitted by ordinary least squares on
/// log-log points. Only word tokens count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub n_tokens: u64,
    pub vocab_size: u64,
    pub heaps_beta: f64,
    pub zipf_theta: f64,
    /// Root mean square residual of the Heaps fit, in natural-log units.
    pub heaps_residual: f64,
    pub zipf_residual: f64,
}

impl CorpusStats {
    /// `key=value` lines.
    pub fn report(&self) -> String {
        format!(
            "n_tokens={}\nvocab_size={}\nheaps_beta={:.4}\nzipf_theta={:.4}\nheaps_residual={:.4}\nzipf_residual={:.4}\n",
            self.n_tokens, self.vocab_size, self.heaps_beta, self.zipf_theta, self.heaps_residual, self.zipf_residual
        )
    }
}

/// Slope, intercept and RMS residual of the least-squares line through `pts`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    (slope, icept, (rss / n).sqrt())
}

/// Fits V(n) = K n^beta over prefixes of 2^k word tokens (k >= 4, plus the
/// whole corpus) and f(r) = C r^-theta over the top half of the ranks.
pub fn corpus_stats(text: &[u8]) -> Result<CorpusStats> {
    let words: Vec<&[u8]> = tokenize(text).into_iter().filter(|t| t.is_word).map(|t| t.bytes).collect();
    let n = words.len();
    if n < MIN_STATS_TOKENS {
        return Err(BlockError::TooSmall(n));
    }
    let mut freq: HashMap<&[u8], u64> = HashMap::new();
    let mut heaps = Vec::new();
    let mut next = 16usize;
    for (i, w) in words.iter().enumerate() {
        *freq.entry(w).or_default() += 1;
        if i + 1 == next || i + 1 == n {
            heaps.push(((i as f64 + 1.0).ln(), (freq.len() as f64).ln()));
            next *= 2;
        }
    }
    if freq.len() < 2 {
        return Err(BlockError::SingleTerm);
    }
    let (heaps_beta, _, heaps_residual) = least_squares(&heaps);

    let mut counts: Vec<u64> = freq.values().copied().collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let top = (counts.len() / 2).max(2);
    let zipf: Vec<(f64, f64)> = counts[..top]
        .iter()
        .enumerate()
        .map(|(r, &f)| ((r as f64 + 1.0).ln(), (f as f64).ln()))
        .collect();
    let (slope, _, zipf_residual) = least_squares(&zipf);
    Ok(CorpusStats {
        n_tokens: n as u64,
        vocab_size: counts.len() as u64,
        heaps_beta,
        zipf_theta: -slope,
        heaps_residual,
        zipf_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &[u8], bs: usize) -> BlockIndex {
        BlockIndex::build(text, bs, 1 << 16, PagedStore::in_memory(256, 4096).unwrap())
            .unwrap()
            .0
    }

    #[test]
    fn cuts_move_to_token_boundaries() {
        let text = b"aaaa bbbbbbbbbb c";
        assert_eq!(cut_blocks(text, 3), vec![0..4, 4..15, 15..17]);
        assert_eq!(cut_blocks(text, 100), vec![0..17]);
        assert!(cut_blocks(b"", 64).is_empty());
    }

    #[test]
    fn zebra_in_second_block() {
        let mut text = b"apple ".repeat(12);
        text.extend_from_slice(b"zebra apple");
        let mut idx = build(&text, 64);
        assert_eq!(idx.block_count(), 2);
        assert_eq!(idx.postings(b"zebra").unwrap(), vec![2]);
        assert_eq!(idx.postings(b"apple").unwrap(), vec![1, 2]);
        assert_eq!(idx.query_word(b"zebra").unwrap(), vec![72]);
    }

    #[test]
    fn small_corpus_is_one_block() {
        let idx = build(b"the cat the", 64);
        assert_eq!(idx.block_count(), 1);
        for w in [&b"the"[..], b"cat", b" "] {
            assert_eq!(idx.postings(w).unwrap(), vec![1]);
        }
    }

    #[test]
    fn absent_word_reads_nothing() {
        let mut idx = build(&b"one two three ".repeat(40), 64);
        idx.reset_stats();
        assert!(idx.query_word(b"four").unwrap().is_empty());
        assert_eq!(idx.io_stats().page_reads, 0);
        assert!(matches!(idx.query_prefix(b""), Err(BlockError::EmptyPattern)));
    }

    #[test]
    fn empty_text_and_reopen() {
        let idx = build(b"", 64);
        let mut back = BlockIndex::open(idx.into_store()).unwrap();
        assert_eq!(back.block_count(), 0);
        assert!(back.query_word(b"a").unwrap().is_empty());
        assert!(back.query_prefix(b"a").unwrap().is_empty());
    }

    #[test]
    fn rejects_tiny_blocks() {
        let r = BlockIndex::build(b"x", 10, 4096, PagedStore::in_memory(256, 4096).unwrap());
        assert!(matches!(r, Err(BlockError::BlockSize(10))));
    }

    #[test]
    fn stats_errors() {
        assert!(matches!(corpus_stats(b"a b c"), Err(BlockError::TooSmall(3))));
        assert!(matches!(corpus_stats(&b"w ".repeat(200)), Err(BlockError::SingleTerm)));
    }

    #[test]
    fn least_squares_on_a_line() {
        let (s, i, r) = least_squares(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12 && r < 1e-12);
    }
}
