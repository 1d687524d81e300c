use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textidx::huffword::tokenize;
use textidx::pager::PagedStore;
use textidx::wfm::{WfmConfig, WfmIndex};

fn corpus(rng: &mut impl Rng, words: usize, tokens: usize) -> Vec<u8> {
    let dict: Vec<String> = (0..words)
        .map(|_| {
            let len = rng.random_range(1..6);
            (0..len).map(|_| (b'a' + rng.random_range(0..5u8)) as char).collect()
        })
        .collect();
    let seps = [" ", " ", ", ", ".\n", "; "];
    let mut out = String::new();
    for _ in 0..tokens {
        let u: f64 = rng.random();
        out.push_str(&dict[((u * u) * words as f64) as usize]);
        out.push_str(seps[rng.random_range(0..seps.len())]);
    }
    out.into_bytes()
}

/// Offsets of every token, grouped by token text.
fn token_oracle(text: &[u8]) -> BTreeMap<Vec<u8>, Vec<u64>> {
    let mut m: BTreeMap<Vec<u8>, Vec<u64>> = BTreeMap::new();
    for t in tokenize(text) {
        m.entry(t.bytes.to_vec()).or_default().push(t.offset as u64);
    }
    m
}

#[test]
fn word_queries_match_token_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..200 {
        let words = rng.random_range(1..200);
        let tokens = rng.random_range(0..250);
        let text = corpus(&mut rng, words, tokens);
        let cfg = WfmConfig {
            sample_rate: rng.random_range(1..20),
            bucket_size: 64,
            align_every: rng.random_range(1..10),
        };
        let idx = WfmIndex::build(&text, cfg).unwrap();
        let oracle = token_oracle(&text);
        for (term, offs) in &oracle {
            assert_eq!(idx.word_count(term).unwrap(), offs.len() as u64);
            assert_eq!(&idx.word_locate(term).unwrap(), offs);
        }
        // strings that only occur inside words never match
        for probe in [&b"zz"[..], b"a a", b"q"] {
            if !oracle.contains_key(probe) {
                assert_eq!(idx.word_count(probe).unwrap(), 0);
            }
        }
        for _ in 0..5 {
            let plen = rng.random_range(1..3);
            let p: Vec<u8> = (0..plen).map(|_| b'a' + rng.random_range(0..6u8)).collect();
            let expect: BTreeMap<Vec<u8>, Vec<u64>> = oracle
                .iter()
                .filter(|(k, _)| k.starts_with(&p) && k[0].is_ascii_alphanumeric())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            assert_eq!(idx.prefix_word_search(&p).unwrap(), expect);
        }
    }
}

#[test]
fn counting_agrees_with_locating_on_english() {
    let text = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/english_sample.txt")).unwrap();
    let sample = &text[..60_000];
    let idx = WfmIndex::build(sample, WfmConfig::default()).unwrap();
    let oracle = token_oracle(sample);
    for w in [&b"the"[..], b"return", b"object", b"None", b"xyzzy"] {
        let offs = idx.word_locate(w).unwrap();
        assert_eq!(idx.word_count(w).unwrap(), offs.len() as u64);
        assert_eq!(offs, oracle.get(w).cloned().unwrap_or_default());
    }
    // whole-word semantics: "the" inside "then" or "other" is not reported
    let raw = sample.windows(3).filter(|w| *w == b"the").count() as u64;
    assert!(idx.word_count(b"the").unwrap() < raw);
}

#[test]
fn saved_bundle_answers_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let text = corpus(&mut rng, 300, 3000);
    let idx = WfmIndex::build(&text, WfmConfig::default()).unwrap();
    let mut store = PagedStore::in_memory(1024, 1 << 16).unwrap();
    idx.save(&mut store).unwrap();
    let back = WfmIndex::load(&mut store).unwrap();
    for term in token_oracle(&text).keys() {
        assert_eq!(back.word_locate(term).unwrap(), idx.word_locate(term).unwrap());
    }
    let mut bytes = idx.to_bytes();
    let n = bytes.len();
    bytes.truncate(n - 3);
    assert!(WfmIndex::from_bytes(&bytes).is_err());
}
