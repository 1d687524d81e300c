//! Randomized external string sorting by piece naming.
//!
//! Each string is cut into pieces of `L` bits. Pieces are replaced by short
//! hashed names, the resulting compressed strings are sorted, and the first
//! mismatching names between neighbours are replaced by ranks of the actual
//! pieces. A rightward and a leftward copy pass then propagate the ranks over
//! shared prefixes, and sorting the resulting table yields the order of the
//! original strings.
//!
//! Hash collisions can break the order. Collisions that are visible among the
//! marked pieces are reported by [`rank_marked`]; [`sort_strings`] additionally
//! checks the final order with one comparison per adjacent pair and retries
//! with a fresh seed when either check fails.

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

use crate::extsort::{ExtSortError, ExternalSorter};
use crate::pager::{PagedStore, PagerError};

pub const DEFAULT_PIECE_BITS: usize = 128;

#[derive(Debug, Error)]
pub enum StrSortError {
    #[error("piece length {0} bits must be a positive multiple of 8 and at least the name width {1}")]
    BadPieceLength(usize, u32),
    #[error("no strings to sort")]
    Empty,
    #[error("piece {0:?} missing from the injected name table")]
    UnknownPiece(Vec<u8>),
    #[error("name collision between distinct marked pieces at piece index {index}")]
    Collision { index: usize },
    #[error("gave up after {0} attempts")]
    RetriesExhausted(u32),
    #[error(transparent)]
    Sort(#[from] ExtSortError),
    #[error(transparent)]
    Pager(#[from] PagerError),
}

pub type Result<T> = std::result::Result<T, StrSortError>;

/// `2 * ceil(log2 k)`.
pub fn name_bits_for(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        2 * (usize::BITS - (k - 1).leading_zeros())
    }
}

/// Piece length (bits, multiple of 8) of order `log_m(n) * log2(K)` where
/// `n = N/B` and `m = M/B`.
pub fn suggested_piece_bits(total_bytes: u64, mem_budget: usize, page_size: usize, k: usize) -> usize {
    let n = (total_bytes as f64 / page_size as f64).max(2.0);
    let m = (mem_budget as f64 / page_size as f64).max(2.0);
    let log_m_n = (n.ln() / m.ln()).max(1.0);
    let log_k = (k.max(2) as f64).log2();
    let bits = (log_m_n * log_k).ceil() as usize;
    let bits = bits.max(name_bits_for(k) as usize).max(8);
    bits.div_ceil(8) * 8
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Next seed in a retry sequence.
pub fn next_seed(seed: u64) -> u64 {
    mix(seed.wrapping_add(0x9e3779b97f4a7c15))
}

#[derive(Debug, Clone)]
enum NamerMode {
    Hash { seed: u64 },
    Table(HashMap<Vec<u8>, u64>),
}

/// Maps pieces to names of `name_bits` bits.
#[derive(Debug, Clone)]
pub struct PieceNamer {
    name_bits: u32,
    mode: NamerMode,
}

impl PieceNamer {
    pub fn seeded(k: usize, seed: u64) -> Self {
        PieceNamer {
            name_bits: name_bits_for(k),
            mode: NamerMode::Hash { seed },
        }
    }

    /// Uses a fixed piece-to-name table; names are taken as given.
    pub fn with_table(k: usize, table: HashMap<Vec<u8>, u64>) -> Self {
        PieceNamer {
            name_bits: name_bits_for(k),
            mode: NamerMode::Table(table),
        }
    }

    pub fn name_bits(&self) -> u32 {
        self.name_bits
    }

    /// Name of `piece`; the piece bit-length is part of the hash input.
    pub fn name(&self, piece: &[u8]) -> Result<u64> {
        match &self.mode {
            NamerMode::Table(t) => t
                .get(piece)
                .copied()
                .ok_or_else(|| StrSortError::UnknownPiece(piece.to_vec())),
            NamerMode::Hash { seed } => {
                let mut h = mix(seed ^ (piece.len() as u64 * 8).wrapping_mul(0x9e3779b97f4a7c15));
                for chunk in piece.chunks(8) {
                    let mut w = [0u8; 8];
                    w[..chunk.len()].copy_from_slice(chunk);
                    h = mix(h ^ u64::from_le_bytes(w));
                }
                Ok(if self.name_bits >= 64 {
                    h
                } else {
                    h & ((1u64 << self.name_bits) - 1)
                })
            }
        }
    }
}

/// A string rewritten as a sequence of piece names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CString {
    pub names: Vec<u64>,
    /// 0-based index of the source string.
    pub source: usize,
}

fn check_piece_bits(piece_bits: usize, name_bits: u32) -> Result<usize> {
    if piece_bits == 0 || !piece_bits.is_multiple_of(8) || piece_bits < name_bits as usize {
        return Err(StrSortError::BadPieceLength(piece_bits, name_bits));
    }
    Ok(piece_bits / 8)
}

fn piece(s: &[u8], piece_bytes: usize, j: usize) -> &[u8] {
    let start = (j * piece_bytes).min(s.len());
    let end = ((j + 1) * piece_bytes).min(s.len());
    &s[start..end]
}

/// Cuts every string into `piece_bits`-bit pieces and names them.
pub fn make_cstrings<S: AsRef<[u8]>>(strings: &[S], piece_bits: usize, namer: &PieceNamer) -> Result<Vec<CString>> {
    if strings.is_empty() {
        return Err(StrSortError::Empty);
    }
    let pb = check_piece_bits(piece_bits, namer.name_bits())?;
    strings
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let names = s
                .as_ref()
                .chunks(pb)
                .map(|p| namer.name(p))
                .collect::<Result<Vec<_>>>()?;
            Ok(CString { names, source: i })
        })
        .collect()
}

/// Output of [`sort_and_mark`].
#[derive(Debug, Clone)]
pub struct Marked {
    pub sorted: Vec<CString>,
    /// `lcp[x]` = number of leading names shared by `sorted[x]` and `sorted[x + 1]`.
    pub lcp: Vec<usize>,
    /// Marked name positions per sorted c-string, ascending, at most two.
    pub marks: Vec<Vec<usize>>,
}

fn common_prefix<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn sort_records(records: Vec<(Vec<u64>, u64)>, scratch: &ScratchSpec) -> Result<Vec<(Vec<u64>, u64)>> {
    let bytes: usize = records.iter().map(|r| 48 + 8 * r.0.len()).sum();
    if bytes <= scratch.mem_budget {
        let mut r = records;
        r.sort_unstable();
        return Ok(r);
    }
    let store = PagedStore::temporary(scratch.page_size, scratch.mem_budget)?;
    let mut sorter = ExternalSorter::new(store);
    for r in records {
        sorter.push(r)?;
    }
    let mut out = Vec::new();
    for r in sorter.finish()? {
        out.push(r?);
    }
    Ok(out)
}

/// Geometry of scratch stores used when a sorting stage exceeds memory.
#[derive(Debug, Clone, Copy)]
pub struct ScratchSpec {
    pub page_size: usize,
    pub mem_budget: usize,
}

impl Default for ScratchSpec {
    fn default() -> Self {
        ScratchSpec {
            page_size: 4096,
            mem_budget: 64 << 20,
        }
    }
}

/// Sorts c-strings by name sequence (ties by source index), computes
/// neighbour lcps in names and marks the first mismatching name on each side
/// of every adjacency.
pub fn sort_and_mark(cstrings: Vec<CString>) -> Marked {
    sort_and_mark_with(cstrings, &ScratchSpec::default()).expect("in-memory sort cannot fail")
}

pub fn sort_and_mark_with(cstrings: Vec<CString>, scratch: &ScratchSpec) -> Result<Marked> {
    let records = cstrings.into_iter().map(|c| (c.names, c.source as u64)).collect();
    let sorted: Vec<CString> = sort_records(records, scratch)?
        .into_iter()
        .map(|(names, s)| CString { names, source: s as usize })
        .collect();
    let k = sorted.len();
    let lcp: Vec<usize> = (0..k.saturating_sub(1))
        .map(|x| common_prefix(&sorted[x].names, &sorted[x + 1].names))
        .collect();
    let mut marks = vec![Vec::new(); k];
    for (x, &l) in lcp.iter().enumerate() {
        for y in [x, x + 1] {
            if l < sorted[y].names.len() && !marks[y].contains(&l) {
                marks[y].push(l);
            }
        }
    }
    for m in &mut marks {
        m.sort_unstable();
    }
    Ok(Marked { sorted, lcp, marks })
}

/// Dense 1-based ranks of marked pieces in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankTable {
    pieces: Vec<Vec<u8>>,
}

impl RankTable {
    pub fn rank(&self, piece: &[u8]) -> Option<u64> {
        self.pieces
            .binary_search_by(|p| p.as_slice().cmp(piece))
            .ok()
            .map(|i| i as u64 + 1)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Ranked pieces in rank order.
    pub fn pieces(&self) -> &[Vec<u8>] {
        &self.pieces
    }
}

/// For every `i`, the smallest `y > i` with `lcp[y] <= lcp[i]`.
fn next_not_greater(lcp: &[usize]) -> Vec<Option<usize>> {
    let mut out = vec![None; lcp.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &v) in lcp.iter().enumerate() {
        while let Some(&top) = stack.last() {
            if lcp[top] >= v {
                out[top] = Some(i);
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(i);
    }
    out
}

/// Collects and ranks the marked pieces.
///
/// Fails with [`StrSortError::Collision`] when a run of at least three
/// c-strings sharing names through index `j` is bounded on both sides by
/// marks at `j` whose pieces differ: the interior strings then carry a name
/// that stands for two different pieces and would inherit the wrong rank.
pub fn rank_marked<S: AsRef<[u8]>>(strings: &[S], marked: &Marked, piece_bits: usize) -> Result<RankTable> {
    let pb = piece_bits / 8;
    let piece_of = |x: usize, j: usize| piece(strings[marked.sorted[x].source].as_ref(), pb, j);
    let lcp = &marked.lcp;
    let nxt = next_not_greater(lcp);
    for x in 1..marked.sorted.len() {
        let j = lcp[x - 1];
        if !marked.marks[x].contains(&j) {
            continue;
        }
        if let Some(y) = nxt[x - 1] {
            // run spans sorted columns x..=y
            if lcp[y] == j && y >= x + 2 && marked.marks[y].contains(&j) && piece_of(x, j) != piece_of(y, j) {
                return Err(StrSortError::Collision { index: j });
            }
        }
    }
    let mut pieces: Vec<Vec<u8>> = marked
        .marks
        .iter()
        .enumerate()
        .flat_map(|(x, ms)| ms.iter().map(move |&j| (x, j)))
        .map(|(x, j)| piece_of(x, j).to_vec())
        .collect();
    pieces.sort_unstable();
    pieces.dedup();
    Ok(RankTable { pieces })
}

/// Table of step 6/7: one column per sorted c-string, materialized up to the
/// longest prefix it is ever compared on. Missing entries are zero.
pub fn build_table<S: AsRef<[u8]>>(strings: &[S], marked: &Marked, ranks: &RankTable, piece_bits: usize) -> Vec<Vec<u64>> {
    let pb = piece_bits / 8;
    let k = marked.sorted.len();
    let lcp = &marked.lcp;
    let mut cols: Vec<Vec<u64>> = (0..k)
        .map(|x| {
            let left = if x > 0 { lcp[x - 1] } else { 0 };
            let right = if x + 1 < k { lcp[x] } else { 0 };
            let mut col = vec![0u64; left.max(right) + 1];
            let s = strings[marked.sorted[x].source].as_ref();
            for &j in &marked.marks[x] {
                col[j] = ranks.rank(piece(s, pb, j)).expect("marked piece is ranked");
            }
            col
        })
        .collect();
    for x in 1..k {
        let (done, rest) = cols.split_at_mut(x);
        copy_prefix(&done[x - 1], &mut rest[0], lcp[x - 1], &marked.marks[x]);
    }
    for x in (0..k.saturating_sub(1)).rev() {
        let (head, tail) = cols.split_at_mut(x + 1);
        copy_prefix(&tail[0], &mut head[x], lcp[x], &marked.marks[x]);
    }
    cols
}

fn copy_prefix(from: &[u64], to: &mut [u64], len: usize, keep: &[usize]) {
    for j in 0..len {
        if !keep.contains(&j) {
            to[j] = from[j];
        }
    }
}

/// Sorts the table columns (zero-extended, ties by source index) and returns
/// 0-based source indices in final order.
pub fn resolve_and_sort<S: AsRef<[u8]>>(strings: &[S], marked: &Marked, ranks: &RankTable, piece_bits: usize) -> Vec<usize> {
    resolve_and_sort_with(strings, marked, ranks, piece_bits, &ScratchSpec::default())
        .expect("in-memory sort cannot fail")
}

pub fn resolve_and_sort_with<S: AsRef<[u8]>>(
    strings: &[S],
    marked: &Marked,
    ranks: &RankTable,
    piece_bits: usize,
    scratch: &ScratchSpec,
) -> Result<Vec<usize>> {
    let cols = build_table(strings, marked, ranks, piece_bits);
    let records = cols
        .into_iter()
        .zip(&marked.sorted)
        .map(|(mut col, c)| {
            // ranks are >= 1, so trailing zeros can be dropped without
            // changing zero-extended comparisons
            while col.last() == Some(&0) {
                col.pop();
            }
            (col, c.source as u64)
        })
        .collect();
    Ok(sort_records(records, scratch)?
        .into_iter()
        .map(|(_, s)| s as usize)
        .collect())
}

#[derive(Debug, Clone)]
pub struct SortConfig {
    pub piece_bits: usize,
    pub seed: u64,
    pub max_retries: u32,
    pub scratch: ScratchSpec,
}

impl Default for SortConfig {
    fn default() -> Self {
        SortConfig {
            piece_bits: DEFAULT_PIECE_BITS,
            seed: 0x5eed,
            max_retries: 16,
            scratch: ScratchSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortOutcome {
    /// 0-based source indices in sorted order.
    pub order: Vec<usize>,
    /// Attempts made, including the successful one.
    pub attempts: u32,
    pub collisions: u32,
    pub failed_checks: u32,
}

/// Whether `order` sorts `strings` lexicographically with ties by index.
pub fn is_sorted_order<S: AsRef<[u8]>>(strings: &[S], order: &[usize]) -> bool {
    order.windows(2).all(|w| {
        match strings[w[0]].as_ref().cmp(strings[w[1]].as_ref()) {
            Ordering::Less => true,
            Ordering::Equal => w[0] < w[1],
            Ordering::Greater => false,
        }
    })
}

/// One pass of the four stages with a given namer.
pub fn sort_once<S: AsRef<[u8]>>(strings: &[S], piece_bits: usize, namer: &PieceNamer, scratch: &ScratchSpec) -> Result<Vec<usize>> {
    let cs = make_cstrings(strings, piece_bits, namer)?;
    let marked = sort_and_mark_with(cs, scratch)?;
    let ranks = rank_marked(strings, &marked, piece_bits)?;
    resolve_and_sort_with(strings, &marked, &ranks, piece_bits, scratch)
}

/// Sorts `strings`, retrying with fresh seeds on detected collisions or on a
/// failed order check.
pub fn sort_strings<S: AsRef<[u8]>>(strings: &[S], config: &SortConfig) -> Result<SortOutcome> {
    if strings.is_empty() {
        return Err(StrSortError::Empty);
    }
    check_piece_bits(config.piece_bits, name_bits_for(strings.len()))?;
    let mut seed = config.seed;
    let mut collisions = 0;
    let mut failed_checks = 0;
    for attempt in 1..=config.max_retries.max(1) {
        let namer = PieceNamer::seeded(strings.len(), seed);
        match sort_once(strings, config.piece_bits, &namer, &config.scratch) {
            Ok(order) if is_sorted_order(strings, &order) => {
                return Ok(SortOutcome {
                    order,
                    attempts: attempt,
                    collisions,
                    failed_checks,
                })
            }
            Ok(_) => failed_checks += 1,
            Err(StrSortError::Collision { .. }) => collisions += 1,
            Err(e) => return Err(e),
        }
        seed = next_seed(seed);
    }
    Err(StrSortError::RetriesExhausted(config.max_retries))
}
