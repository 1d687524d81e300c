//! Compression of one chunk of L: move-to-front, zero runs written in
//! bijective base 2 (RUNA/RUNB), then a canonical Huffman code over the
//! resulting 258-symbol alphabet.
//!
//! ```text
//! lengths: 258 bytes (0 = unused symbol)
//! count:   u32 LE number of bytes in the chunk
//! bits:    Huffman stream, MSB first, padded to a byte
//! ```

use super::huffman::{canonical_codes, code_lengths, BitWriter, Decoder};

const RUNA: usize = 0;
const RUNB: usize = 1;
const EOB: usize = 257;
const ALPHABET: usize = 258;

fn mtf_symbols(data: &[u8]) -> Vec<usize> {
    let mut table: Vec<u8> = (0..=255).collect();
    let mut out = Vec::with_capacity(data.len() + 1);
    let mut run = 0usize;
    let flush = |run: &mut usize, out: &mut Vec<usize>| {
        while *run > 0 {
            if *run & 1 == 1 {
                out.push(RUNA);
                *run = (*run - 1) / 2;
            } else {
                out.push(RUNB);
                *run = (*run - 2) / 2;
            }
        }
    };
    for &b in data {
        let k = table.iter().position(|&x| x == b).expect("byte in table");
        if k == 0 {
            run += 1;
            continue;
        }
        flush(&mut run, &mut out);
        table.copy_within(0..k, 1);
        table[0] = b;
        out.push(k + 1);
    }
    flush(&mut run, &mut out);
    out.push(EOB);
    out
}

pub fn encode_chunk(data: &[u8], out: &mut Vec<u8>) {
    let syms = mtf_symbols(data);
    let mut freqs = vec![0u64; ALPHABET];
    for &s in &syms {
        freqs[s] += 1;
    }
    let lens = code_lengths(&freqs);
    let codes = canonical_codes(&lens);
    out.extend_from_slice(&lens);
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    let mut w = BitWriter::default();
    for &s in &syms {
        w.put(codes[s], lens[s]);
    }
    out.extend_from_slice(&w.finish());
}

/// Decodes a chunk written by [`encode_chunk`].
pub fn decode_chunk(buf: &[u8]) -> Option<Vec<u8>> {
    let lens = buf.get(..ALPHABET)?;
    let count = u32::from_le_bytes(buf.get(ALPHABET..ALPHABET + 4)?.try_into().ok()?) as usize;
    let bits = &buf[ALPHABET + 4..];
    let dec = Decoder::new(lens);
    let mut table: Vec<u8> = (0..=255).collect();
    let mut out = Vec::with_capacity(count);
    let mut pos = 0;
    let (mut run, mut weight) = (0usize, 1usize);
    loop {
        let s = dec.decode(bits, &mut pos)?;
        if s == RUNA || s == RUNB {
            run = run.checked_add(weight * (s + 1))?;
            weight = weight.checked_mul(2)?;
            if run > count {
                return None;
            }
            continue;
        }
        out.extend(std::iter::repeat_n(table[0], run));
        run = 0;
        weight = 1;
        if s == EOB {
            break;
        }
        let k = s - 1;
        let b = table[k];
        table.copy_within(0..k, 1);
        table[0] = b;
        out.push(b);
    }
    (out.len() == count).then_some(out)
}
