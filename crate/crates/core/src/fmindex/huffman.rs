//! Canonical binary Huffman codes and MSB-first bit streams.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub const MAX_CODE_LEN: u8 = 32;

/// Code lengths for `freqs`; unused symbols get 0. A lone used symbol gets
/// length 1. Lengths are capped at [`MAX_CODE_LEN`] by flattening the counts.
pub fn code_lengths(freqs: &[u64]) -> Vec<u8> {
    let mut f: Vec<u64> = freqs.to_vec();
    loop {
        let lens = unbounded_lengths(&f);
        if lens.iter().all(|&l| l <= MAX_CODE_LEN) {
            return lens;
        }
        for x in f.iter_mut().filter(|x| **x > 0) {
            *x = (*x).div_ceil(2);
        }
    }
}

fn unbounded_lengths(freqs: &[u64]) -> Vec<u8> {
    let mut lens = vec![0u8; freqs.len()];
    let used: Vec<usize> = (0..freqs.len()).filter(|&i| freqs[i] > 0).collect();
    match used.len() {
        0 => return lens,
        1 => {
            lens[used[0]] = 1;
            return lens;
        }
        _ => {}
    }
    // nodes 0..used.len() are leaves, later ones internal
    let mut parent: Vec<usize> = vec![usize::MAX; used.len()];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = used.iter().enumerate().map(|(k, &i)| Reverse((freqs[i], k))).collect();
    while heap.len() > 1 {
        let Reverse((fa, a)) = heap.pop().expect("two nodes");
        let Reverse((fb, b)) = heap.pop().expect("two nodes");
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a] = id;
        parent[b] = id;
        heap.push(Reverse((fa + fb, id)));
    }
    // parents always have larger ids, so depths fill in one backward pass
    let mut depth = vec![0u32; parent.len()];
    for v in (0..parent.len()).rev() {
        if parent[v] != usize::MAX {
            depth[v] = depth[parent[v]] + 1;
        }
    }
    for (k, &i) in used.iter().enumerate() {
        lens[i] = depth[k].min(255) as u8;
    }
    lens
}

/// Canonical codes: shorter codes first, ties by symbol value.
pub fn canonical_codes(lens: &[u8]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..lens.len()).filter(|&i| lens[i] > 0).collect();
    order.sort_by_key(|&i| (lens[i], i));
    let mut codes = vec![0u32; lens.len()];
    let mut code: u64 = 0;
    let mut prev = 0u8;
    for (k, &i) in order.iter().enumerate() {
        if k > 0 {
            code += 1;
        }
        code <<= lens[i] - prev;
        prev = lens[i];
        codes[i] = code as u32;
    }
    codes
}

#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn put(&mut self, code: u32, len: u8) {
        self.acc = (self.acc << len) | code as u64;
        self.nbits += len as u32;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.bytes.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.bytes.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.bytes
    }
}

/// Canonical decoder walking one bit at a time.
pub struct Decoder {
    /// per length: (first code, number of codes, index into `symbols`)
    table: Vec<(u64, u64, usize)>,
    symbols: Vec<usize>,
}

impl Decoder {
    pub fn new(lens: &[u8]) -> Self {
        let mut symbols: Vec<usize> = (0..lens.len()).filter(|&i| lens[i] > 0).collect();
        symbols.sort_by_key(|&i| (lens[i], i));
        let max = lens.iter().copied().max().unwrap_or(0) as usize;
        let mut table = vec![(0u64, 0u64, 0usize); max + 1];
        let mut code = 0u64;
        let mut idx = 0;
        for (l, slot) in table.iter_mut().enumerate().skip(1) {
            let n = symbols[idx..].iter().take_while(|&&s| lens[s] as usize == l).count() as u64;
            *slot = (code, n, idx);
            idx += n as usize;
            code = (code + n) << 1;
        }
        Decoder { table, symbols }
    }

    /// Decodes one symbol from `bits` starting at bit `pos`.
    pub fn decode(&self, bits: &[u8], pos: &mut usize) -> Option<usize> {
        let mut code = 0u64;
        for &(first, n, idx) in self.table.iter().skip(1) {
            let byte = *bits.get(*pos / 8)?;
            code = (code << 1) | ((byte >> (7 - *pos % 8)) & 1) as u64;
            *pos += 1;
            if code >= first && code - first < n {
                return Some(self.symbols[idx + (code - first) as usize]);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kraft_and_round_trip() {
        let freqs = [5u64, 0, 9, 12, 13, 16, 45];
        let lens = code_lengths(&freqs);
        assert_eq!(lens[1], 0);
        let kraft: f64 = lens.iter().filter(|&&l| l > 0).map(|&l| 0.5f64.powi(l as i32)).sum();
        assert!((kraft - 1.0).abs() < 1e-12);
        let codes = canonical_codes(&lens);
        let msg = [6usize, 0, 2, 3, 4, 5, 6, 6];
        let mut w = BitWriter::default();
        for &s in &msg {
            w.put(codes[s], lens[s]);
        }
        let bits = w.finish();
        let d = Decoder::new(&lens);
        let mut pos = 0;
        let got: Vec<usize> = (0..msg.len()).map(|_| d.decode(&bits, &mut pos).unwrap()).collect();
        assert_eq!(got, msg);
    }

    #[test]
    fn single_symbol() {
        let lens = code_lengths(&[0, 7, 0]);
        assert_eq!(lens, vec![0, 1, 0]);
        let d = Decoder::new(&lens);
        let mut pos = 0;
        assert_eq!(d.decode(&[0], &mut pos), Some(1));
    }

    #[test]
    fn fibonacci_counts_stay_bounded() {
        let mut f = vec![1u64, 1];
        while f.len() < 60 {
            let n = f.len();
            f.push(f[n - 1] + f[n - 2]);
        }
        let lens = code_lengths(&f);
        assert!(lens.iter().all(|&l| (1..=MAX_CODE_LEN).contains(&l)));
    }
}
