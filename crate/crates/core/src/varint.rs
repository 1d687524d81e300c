//! Continuation-bit byte code.
//!
//! A value is split into 7-bit groups, most significant group first. The first
//! byte of a codeword carries a 1 in its top bit, every following byte a 0, so
//! codeword starts can be recognised anywhere in a stream.

use thiserror::Error;

/// Exclusive upper bound of encodable values (eight 7-bit groups).
pub const MAX_VALUE: u64 = 1 << 56;

const TAG: u8 = 0x80;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VarintError {
    #[error("value {0} exceeds the 56-bit code range")]
    OutOfRange(u64),
    #[error("byte at offset {0} is not a codeword start")]
    UntaggedStart(usize),
    #[error("codeword starting at offset {0} runs past the end of the buffer")]
    Truncated(usize),
    #[error("gap list is not strictly increasing from 1 at position {0}")]
    NotIncreasing(usize),
}

pub type Result<T> = std::result::Result<T, VarintError>;

/// Number of bytes `encode_cb(x)` produces.
pub fn cb_len(x: u64) -> usize {
    let bits = 64 - x.leading_zeros() as usize;
    bits.div_ceil(7).max(1)
}

/// Appends the codeword for `x` to `out`.
pub fn encode_cb_into(x: u64, out: &mut Vec<u8>) -> Result<()> {
    if x >= MAX_VALUE {
        return Err(VarintError::OutOfRange(x));
    }
    let n = cb_len(x);
    for i in (0..n).rev() {
        let group = ((x >> (7 * i)) & 0x7f) as u8;
        out.push(if i == n - 1 { group | TAG } else { group });
    }
    Ok(())
}

pub fn encode_cb(x: u64) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(cb_len(x));
    encode_cb_into(x, &mut out)?;
    Ok(out)
}

/// Decodes the codeword starting at `offset`, returning the value and the
/// offset just past it.
pub fn decode_cb(buf: &[u8], offset: usize) -> Result<(u64, usize)> {
    match buf.get(offset) {
        Some(&b) if b & TAG != 0 => {
            let mut x = (b & 0x7f) as u64;
            let mut pos = offset + 1;
            while pos < buf.len() && buf[pos] & TAG == 0 {
                if pos - offset >= 8 {
                    return Err(VarintError::OutOfRange(x));
                }
                x = (x << 7) | buf[pos] as u64;
                pos += 1;
            }
            Ok((x, pos))
        }
        Some(_) => Err(VarintError::UntaggedStart(offset)),
        None => Err(VarintError::Truncated(offset)),
    }
}

/// Decodes every codeword in `buf`.
pub fn decode_all(buf: &[u8]) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < buf.len() {
        let (x, next) = decode_cb(buf, pos)?;
        out.push(x);
        pos = next;
    }
    Ok(out)
}

/// Zigzag mapping so signed deltas can use the unsigned code.
pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

/// Encodes a strictly increasing list of positive integers as an absolute
/// first value followed by gaps.
pub fn encode_gaps(values: &[u64]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut prev = 0u64;
    for (i, &v) in values.iter().enumerate() {
        if v <= prev {
            return Err(VarintError::NotIncreasing(i));
        }
        encode_cb_into(v - prev, &mut out)?;
        prev = v;
    }
    Ok(out)
}

pub fn decode_gaps(bytes: &[u8]) -> Result<Vec<u64>> {
    let mut vals = decode_all(bytes)?;
    let mut acc = 0u64;
    for (i, v) in vals.iter_mut().enumerate() {
        if *v == 0 {
            return Err(VarintError::NotIncreasing(i));
        }
        acc += *v;
        *v = acc;
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_codewords() {
        assert_eq!(encode_cb(0).unwrap(), vec![0x80]);
        assert_eq!(encode_cb(127).unwrap(), vec![0xFF]);
        assert_eq!(encode_cb(128).unwrap(), vec![0x81, 0x00]);
        assert_eq!(encode_cb(MAX_VALUE), Err(VarintError::OutOfRange(MAX_VALUE)));
        assert_eq!(encode_cb(MAX_VALUE - 1).unwrap().len(), 8);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_cb(&[0x81, 0x00], 0).unwrap(), (128, 2));
        let two = [0x80, 0xFF];
        assert_eq!(decode_cb(&two, 0).unwrap(), (0, 1));
        assert_eq!(decode_cb(&two, 1).unwrap(), (127, 2));
        assert_eq!(decode_cb(&[0x00], 0), Err(VarintError::UntaggedStart(0)));
        assert_eq!(decode_cb(&[0x80], 1), Err(VarintError::Truncated(1)));
    }

    #[test]
    fn exhaustive_round_trip_and_length() {
        let mut buf = Vec::new();
        for x in 0..(1u64 << 21) {
            buf.clear();
            encode_cb_into(x, &mut buf).unwrap();
            let bits = 64 - x.leading_zeros() as usize;
            assert_eq!(buf.len(), std::cmp::max(1, bits.div_ceil(7)));
            assert_eq!(decode_cb(&buf, 0).unwrap(), (x, buf.len()));
        }
    }

    #[test]
    fn gaps() {
        assert!(encode_gaps(&[]).unwrap().is_empty());
        let mut expect = encode_cb(3).unwrap();
        expect.extend(encode_cb(2).unwrap());
        expect.extend(encode_cb(7).unwrap());
        assert_eq!(encode_gaps(&[3, 5, 12]).unwrap(), expect);
        assert_eq!(decode_gaps(&expect).unwrap(), vec![3, 5, 12]);
        assert_eq!(encode_gaps(&[3, 3]), Err(VarintError::NotIncreasing(1)));
        assert_eq!(encode_gaps(&[0]), Err(VarintError::NotIncreasing(0)));
    }

    #[test]
    fn zigzag_round_trip() {
        for v in [-5i64, -1, 0, 1, 2, 1 << 40, -(1 << 40)] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
        assert_eq!(zigzag(0), 0);
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
    }

    proptest! {
        #[test]
        fn starts_are_exactly_tagged_bytes(xs in prop::collection::vec(0u64..MAX_VALUE, 0..50)) {
            let mut buf = Vec::new();
            let mut starts = Vec::new();
            for &x in &xs {
                starts.push(buf.len());
                encode_cb_into(x, &mut buf).unwrap();
            }
            let tagged: Vec<usize> = (0..buf.len()).filter(|&i| buf[i] & 0x80 != 0).collect();
            prop_assert_eq!(tagged, starts);
            prop_assert_eq!(decode_all(&buf).unwrap(), xs);
        }

        #[test]
        fn gap_round_trip(mut v in prop::collection::btree_set(1u64..1_000_000_000, 0..200)) {
            let v: Vec<u64> = std::mem::take(&mut v).into_iter().collect();
            prop_assert_eq!(decode_gaps(&encode_gaps(&v).unwrap()).unwrap(), v);
        }
    }
}
