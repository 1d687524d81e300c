//! Disk-conscious text indexing: paged storage with I/O accounting, suffix
//! arrays, String B-trees, FM-indexes, word-based Huffman compression and
//! block-addressing inverted indexes.

pub mod blockindex;
pub mod extsort;
pub mod fmindex;
pub mod huffword;
pub mod pager;
pub mod sbtree;
pub mod strsort;
pub mod suffarr;
pub mod varint;
pub mod wfm;
