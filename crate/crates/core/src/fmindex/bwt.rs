//! Burrows-Wheeler transform with a terminator ordered below every byte.

use super::{FmError, Result};
use crate::suffarr;

/// Last column of the sorted rotations of T#. The terminator's row is kept
/// in `primary` (1-based) and shows up as 0x00 in `l`, so texts that contain
/// 0x00 themselves still round-trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BwtString {
    pub l: Vec<u8>,
    pub primary: usize,
}

impl BwtString {
    /// `l` with the terminator shown as `#`.
    pub fn rendered(&self) -> String {
        self.l
            .iter()
            .enumerate()
            .map(|(i, &b)| if i + 1 == self.primary { '#' } else { b as char })
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.l.len()
    }

    /// Rebuilds the text by walking LF from the terminator row.
    pub fn invert(&self) -> Result<Vec<u8>> {
        let rows = self.l.len();
        if self.primary == 0 || self.primary > rows {
            return Err(FmError::NotABwt);
        }
        let mut counts = [0usize; 256];
        let mut rank = Vec::with_capacity(rows);
        for (i, &b) in self.l.iter().enumerate() {
            if i + 1 == self.primary {
                rank.push(0);
                continue;
            }
            counts[b as usize] += 1;
            rank.push(counts[b as usize]);
        }
        let mut c = [0usize; 256];
        let mut acc = 1;
        for (b, slot) in c.iter_mut().enumerate() {
            *slot = acc;
            acc += counts[b];
        }
        let n = rows - 1;
        let mut text = vec![0u8; n];
        let mut i = 1;
        for k in (0..n).rev() {
            if i == self.primary {
                return Err(FmError::NotABwt);
            }
            let b = self.l[i - 1];
            text[k] = b;
            i = c[b as usize] + rank[i - 1];
        }
        if i != self.primary {
            return Err(FmError::NotABwt);
        }
        Ok(text)
    }
}

/// Suffix order of T# (0-based starts, the terminator suffix first).
pub(crate) fn rotation_order(text: &[u8]) -> Vec<usize> {
    let mut symbols: Vec<u32> = text.iter().map(|&b| b as u32 + 1).collect();
    symbols.push(0);
    suffarr::suffix_order(&symbols)
}

pub(crate) fn bwt_from_order(text: &[u8], order: &[usize]) -> BwtString {
    let mut primary = 0;
    let l = order
        .iter()
        .enumerate()
        .map(|(r, &p)| {
            if p == 0 {
                primary = r + 1;
                0
            } else {
                text[p - 1]
            }
        })
        .collect();
    BwtString { l, primary }
}

/// BWT of `text`, which must not contain 0x00.
pub fn bwt_forward(text: &[u8]) -> Result<BwtString> {
    if let Some(i) = text.iter().position(|&b| b == 0) {
        return Err(FmError::ReservedByte(i));
    }
    Ok(bwt_forward_raw(text))
}

/// BWT of arbitrary bytes.
pub fn bwt_forward_raw(text: &[u8]) -> BwtString {
    bwt_from_order(text, &rotation_order(text))
}

/// Inverts a last column given with the terminator as its only 0x00 byte.
pub fn bwt_inverse(l: &[u8]) -> Result<Vec<u8>> {
    let zeros: Vec<usize> = l.iter().enumerate().filter(|x| *x.1 == 0).map(|x| x.0).collect();
    if zeros.len() != 1 {
        return Err(FmError::Terminators(zeros.len()));
    }
    BwtString {
        l: l.to_vec(),
        primary: zeros[0] + 1,
    }
    .invert()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mississippi() {
        let b = bwt_forward(b"mississippi").unwrap();
        assert_eq!(b.rendered(), "ipssm#pissii");
        assert_eq!(b.primary, 6);
        assert_eq!(bwt_inverse(&b.l).unwrap(), b"mississippi");
    }

    #[test]
    fn empty_text() {
        let b = bwt_forward(b"").unwrap();
        assert_eq!(b.rendered(), "#");
        assert_eq!(bwt_inverse(&[0]).unwrap(), b"");
    }

    #[test]
    fn terminator_count() {
        assert!(matches!(bwt_inverse(b"abc"), Err(FmError::Terminators(0))));
        assert!(matches!(bwt_inverse(b"a\0\0"), Err(FmError::Terminators(2))));
        assert!(matches!(bwt_forward(b"a\0b"), Err(FmError::ReservedByte(1))));
    }

    #[test]
    fn raw_bytes_round_trip() {
        let t = [0u8, 0, 1, 0, 255, 0];
        assert_eq!(bwt_forward_raw(&t).invert().unwrap(), t);
    }

    #[test]
    fn short_cycle_rejected() {
        // row 1 ends with T[n], so a terminator there means a cycle of length 1
        assert!(matches!(bwt_inverse(b"\0ab"), Err(FmError::NotABwt)));
    }
}
