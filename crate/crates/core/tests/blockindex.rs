use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use textidx::blockindex::{corpus_stats, cut_blocks, BlockIndex};
use textidx::huffword::tokenize;
use textidx::pager::PagedStore;

fn corpus(rng: &mut impl Rng, words: usize, tokens: usize) -> Vec<u8> {
    let dict: Vec<String> = (0..words)
        .map(|_| {
            let len = rng.random_range(1..7);
            (0..len).map(|_| (b'a' + rng.random_range(0..6u8)) as char).collect()
        })
        .collect();
    let seps = [" ", " ", " ", ", ", ".\n"];
    let mut out = String::new();
    for _ in 0..tokens {
        let u: f64 = rng.random();
        out.push_str(&dict[((u * u) * words as f64) as usize]);
        out.push_str(seps[rng.random_range(0..seps.len())]);
    }
    out.into_bytes()
}

fn build(text: &[u8], block_size: usize, mem_budget: usize) -> BlockIndex {
    BlockIndex::build(text, block_size, mem_budget, PagedStore::in_memory(256, 4096).unwrap())
        .unwrap()
        .0
}

fn token_oracle(text: &[u8]) -> BTreeMap<Vec<u8>, Vec<u64>> {
    let mut m: BTreeMap<Vec<u8>, Vec<u64>> = BTreeMap::new();
    for t in tokenize(text) {
        m.entry(t.bytes.to_vec()).or_default().push(t.offset as u64);
    }
    m
}

#[test]
fn word_queries_match_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for round in 0..60 {
        let (words, tokens) = (rng.random_range(1..150), rng.random_range(1..600));
        let text = corpus(&mut rng, words, tokens);
        let bs = [64, 256, 1024, 4096][round % 4];
        let mut idx = build(&text, bs, 1 << 16);
        let blocks = cut_blocks(&text, bs);
        for (term, offs) in token_oracle(&text) {
            assert_eq!(idx.query_word(&term).unwrap(), offs);
            // posting minimality: exactly the blocks containing an occurrence
            let expect: BTreeSet<u32> = offs
                .iter()
                .map(|&o| blocks.iter().position(|r| r.contains(&(o as usize))).unwrap() as u32 + 1)
                .collect();
            assert_eq!(idx.postings(&term).unwrap(), expect.into_iter().collect::<Vec<_>>());
        }
    }
}

#[test]
fn blocks_decode_to_the_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for _ in 0..30 {
        let tokens = rng.random_range(1..800);
        let text = corpus(&mut rng, 80, tokens);
        let mut idx = build(&text, 64 + rng.random_range(0..300), 1 << 16);
        let mut back = Vec::new();
        for b in 1..=idx.block_count() as u32 {
            let e = idx.block_entry(b);
            assert_eq!(e.src_off as usize, back.len());
            back.extend(idx.decode_block(b).unwrap());
        }
        assert_eq!(back, text);
    }
}

#[test]
fn prefix_queries_match_merged_word_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..40 {
        let text = corpus(&mut rng, 120, 500);
        let mut idx = build(&text, 128, 1 << 16);
        let oracle = token_oracle(&text);
        for _ in 0..8 {
            let p: Vec<u8> = (0..rng.random_range(1..3)).map(|_| b'a' + rng.random_range(0..7u8)).collect();
            let expect: BTreeMap<Vec<u8>, Vec<u64>> = oracle
                .iter()
                .filter(|(k, _)| k.starts_with(&p) && k[0].is_ascii_alphanumeric())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            assert_eq!(idx.query_prefix(&p).unwrap(), expect);
        }
    }
}

#[test]
fn small_budget_spills_runs_and_gives_identical_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let text = corpus(&mut rng, 400, 8000);
    let (one, r1) = BlockIndex::build(&text, 64, 1 << 24, PagedStore::in_memory(256, 4096).unwrap()).unwrap();
    let (many, rn) = BlockIndex::build(&text, 64, 512, PagedStore::in_memory(256, 4096).unwrap()).unwrap();
    assert_eq!(r1.runs, 0);
    assert!(rn.runs >= 3, "only {} runs", rn.runs);
    assert!(rn.scratch_io.page_writes > 0);
    assert_eq!(r1.pairs, rn.pairs);
    assert_eq!(one.into_store().read_all().unwrap(), many.into_store().read_all().unwrap());
}

#[test]
fn word_query_reads_only_candidate_block_pages() {
    // four filler blocks, "zebra" only in the middle of the third
    let mut text = Vec::new();
    for b in 0..4 {
        text.extend_from_slice(format!("filler{b} ").repeat(30).as_bytes());
        if b == 2 {
            text.extend_from_slice(b"zebra ");
        }
        text.extend_from_slice(format!("filler{b} ").repeat(30).as_bytes());
    }
    let (idx, _) = BlockIndex::build(&text, 500, 4096, PagedStore::in_memory(64, 4096).unwrap()).unwrap();
    let mut idx = BlockIndex::open(idx.into_store()).unwrap();
    assert_eq!(idx.block_count(), 4);
    assert_eq!(idx.postings(b"zebra").unwrap(), vec![3]);
    idx.reset_stats();
    let hits = idx.query_word(b"zebra").unwrap();
    assert_eq!(hits, vec![2 * 480 + 240]);
    let pages = idx.block_pages(3);
    let io = idx.io_stats();
    assert_eq!(io.page_reads, pages.end - pages.start);
    assert_eq!(io.seeks, 1);
    idx.reset_stats();
    assert!(idx.query_word(b"absent").unwrap().is_empty());
    assert_eq!(idx.io_stats().page_reads, 0);
}

#[test]
fn file_backed_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("idx.bix");
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let text = corpus(&mut rng, 200, 3000);
    let store = PagedStore::create(&path, 512, 8192).unwrap();
    let (mut idx, _) = BlockIndex::build(&text, 1024, 8192, store).unwrap();
    let before = idx.query_prefix(b"a").unwrap();
    drop(idx);
    let mut back = BlockIndex::open(PagedStore::open(&path, 512, 8192).unwrap()).unwrap();
    assert_eq!(back.query_prefix(b"a").unwrap(), before);
}

#[test]
fn zipf_exponent_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let z = Zipf::new(1_000_000.0, 1.8).unwrap();
    let mut text = String::new();
    for _ in 0..1_000_000 {
        let r = z.sample(&mut rng) as u64;
        text.push('w');
        text.push_str(&r.to_string());
        text.push(' ');
    }
    let s = corpus_stats(text.as_bytes()).unwrap();
    assert_eq!(s.n_tokens, 1_000_000);
    assert!((s.zipf_theta - 1.8).abs() <= 0.15, "theta {}", s.zipf_theta);
}

#[test]
fn heaps_exponent_on_english() {
    let text = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/english_sample.txt")).unwrap();
    assert!(text.len() >= 1 << 20);
    let s = corpus_stats(&text).unwrap();
    assert!((0.3..=0.7).contains(&s.heaps_beta), "beta {}", s.heaps_beta);
    assert!(s.zipf_theta > 0.0);
}
