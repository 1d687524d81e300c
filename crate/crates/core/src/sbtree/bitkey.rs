//! Binary view of suffixes: every byte becomes a 9-bit symbol equal to its
//! value and the end of a text becomes the symbol 511, so the terminator sorts
//! above every byte. Bits are numbered from 0, most significant first.

pub const SYMBOL_BITS: u64 = 9;
pub const TERMINATOR: u16 = 511;

/// Reference to the suffix of text `text` starting at 1-based `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuffixRef {
    pub text: u16,
    pub offset: u32,
}

impl SuffixRef {
    pub fn new(text: u16, offset: u32) -> Self {
        SuffixRef { text, offset }
    }
}

/// Largest offset a [`SuffixRef`] can hold on a page (3 bytes).
pub const MAX_OFFSET: u32 = (1 << 24) - 1;

/// Bit length of the key of a suffix at 1-based `offset` in a text of `len` bytes.
pub fn key_bits(len: u64, offset: u32) -> u64 {
    SYMBOL_BITS * (len - offset as u64 + 2)
}

/// Number of leading equal bits of two different 9-bit symbols.
pub fn symbol_lcp(a: u16, b: u16) -> u64 {
    debug_assert_ne!(a, b);
    let diff = (a ^ b) as u32;
    SYMBOL_BITS - (32 - diff.leading_zeros()) as u64
}

/// Bit-lcp of two keys that share `common` whole symbols and continue with
/// symbols `a` and `b` (equal only when both are terminators).
pub fn bit_lcp(common: u64, a: u16, b: u16) -> u64 {
    if a == b {
        SYMBOL_BITS * (common + 1)
    } else {
        SYMBOL_BITS * common + symbol_lcp(a, b)
    }
}

/// Bit `i` of a pattern; positions past its end read as 0.
pub fn pattern_bit(p: &[u8], i: u64) -> u8 {
    let sym = (i / SYMBOL_BITS) as usize;
    match p.get(sym) {
        Some(&c) => ((c as u16) >> (SYMBOL_BITS - 1 - i % SYMBOL_BITS)) as u8 & 1,
        None => 0,
    }
}

pub fn pattern_bits(p: &[u8]) -> u64 {
    SYMBOL_BITS * p.len() as u64
}
