use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textidx::fmindex::{bwt_forward, bwt_inverse, FmConfig, FmIndex, Mode};
use textidx::pager::PagedStore;
use textidx::suffarr::{build_sa_internal, sa_search};

/// Rotations of T# sorted directly, with the terminator as value 0 and
/// bytes shifted up by one. Returns 1-based start positions.
fn naive_rotations(t: &[u8]) -> Vec<usize> {
    let s: Vec<u16> = t.iter().map(|&b| b as u16 + 1).chain([0]).collect();
    let n = s.len();
    let mut rows: Vec<usize> = (0..n).collect();
    rows.sort_by(|&a, &b| {
        let ra = s[a..].iter().chain(&s[..a]);
        let rb = s[b..].iter().chain(&s[..b]);
        ra.cmp(rb)
    });
    rows.into_iter().map(|r| r + 1).collect()
}

fn naive_l(t: &[u8]) -> Vec<u8> {
    naive_rotations(t)
        .into_iter()
        .map(|p| if p == 1 { 0 } else { t[p - 2] })
        .collect()
}

fn naive_count(t: &[u8], p: &[u8]) -> u64 {
    t.windows(p.len()).filter(|w| *w == p).count() as u64
}

fn random_text(rng: &mut impl Rng, len: usize, sigma: u8) -> Vec<u8> {
    (0..len).map(|_| b'a' + rng.random_range(0..sigma)).collect()
}

fn config(mode: Mode, s: usize, bucket: usize) -> FmConfig {
    FmConfig {
        mode,
        sample_rate: s,
        bucket_size: bucket,
    }
}

#[test]
fn bwt_matches_rotation_sort_and_inverts() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let len = rng.random_range(0..200);
        let sigma = rng.random_range(1..6);
        let t = random_text(&mut rng, len, sigma);
        let b = bwt_forward(&t).unwrap();
        assert_eq!(b.l, naive_l(&t));
        assert_eq!(bwt_inverse(&b.l).unwrap(), t);
    }
}

#[test]
fn occ_matches_prefix_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..40 {
        let len = rng.random_range(1..300);
        let t = random_text(&mut rng, len, 4);
        let fm = FmIndex::build(&t, config(Mode::Tiny, 8, rng.random_range(1..40))).unwrap();
        let l = naive_l(&t);
        let primary = l.iter().position(|&b| b == 0).unwrap();
        for c in [b'a', b'b', b'c', b'd', b'z', 0] {
            let mut naive = 0;
            for k in 0..=l.len() {
                assert_eq!(fm.occ(c, k).unwrap(), naive, "c={c} k={k}");
                if k < l.len() && l[k] == c && k != primary {
                    naive += 1;
                }
            }
        }
    }
}

#[test]
fn rows_count_and_locate_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for round in 0..200 {
        let len = rng.random_range(1..250);
        let sigma = [2, 3, 26][round % 3];
        let t = random_text(&mut rng, len, sigma);
        let s = rng.random_range(1..12);
        let fm = FmIndex::build(&t, config(Mode::Fat, s, 16)).unwrap();
        let rot = naive_rotations(&t);
        // every row locates to its rotation start within s steps
        for (i, &start) in rot.iter().enumerate() {
            let (pos, steps) = fm.locate_steps(i + 1).unwrap();
            assert_eq!(pos as usize, start);
            assert!(steps <= s);
        }
        let sa = build_sa_internal(&t).unwrap();
        for _ in 0..10 {
            let plen = rng.random_range(1..5);
            let p = random_text(&mut rng, plen, sigma + 1);
            let rows: Vec<usize> = (0..rot.len())
                .filter(|&r| t[rot[r] - 1..].starts_with(&p))
                .map(|r| r + 1)
                .collect();
            let got = fm.get_rows(&p).unwrap();
            match got {
                None => assert!(rows.is_empty()),
                Some((f, l)) => assert_eq!((f..=l).collect::<Vec<_>>(), rows),
            }
            assert_eq!(fm.count(&p).unwrap(), naive_count(&t, &p));
            assert_eq!(fm.locate_all(&p).unwrap(), sa_search(&t, &sa, &p).unwrap());
        }
    }
}

#[test]
fn lf_is_a_single_cycle() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..50 {
        let len = rng.random_range(0..150);
        let t = random_text(&mut rng, len, 3);
        let fm = FmIndex::build(&t, FmConfig::default()).unwrap();
        let mut seen = vec![false; fm.rows() + 1];
        let mut i = 1;
        for _ in 0..fm.rows() {
            assert!(!seen[i]);
            seen[i] = true;
            i = fm.lf(i).unwrap();
        }
        assert_eq!(i, 1);
    }
}

#[test]
fn serialization_preserves_answers() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let t = random_text(&mut rng, 200_000, 5);
    for mode in [Mode::Tiny, Mode::Fat] {
        let fm = FmIndex::build(&t, config(mode, 16, 128)).unwrap();
        let mut store = PagedStore::in_memory(4096, 1 << 16).unwrap();
        fm.save(&mut store).unwrap();
        let back = FmIndex::load(&mut store).unwrap();
        assert_eq!(back.bwt(), fm.bwt());
        for _ in 0..100 {
            let plen = rng.random_range(1..8);
            let p = random_text(&mut rng, plen, 6);
            assert_eq!(back.get_rows(&p).unwrap(), fm.get_rows(&p).unwrap());
            if mode == Mode::Fat {
                assert_eq!(back.locate_all(&p).unwrap(), fm.locate_all(&p).unwrap());
            }
        }
    }
}

#[test]
fn tiny_index_compresses_english() {
    let text = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/english_sample.txt")).unwrap();
    let sample = &text[..200_000];
    let tiny = FmIndex::build(sample, config(Mode::Tiny, 32, 256)).unwrap();
    let bytes = tiny.to_bytes();
    assert!(bytes.len() < sample.len() / 2, "{} vs {}", bytes.len(), sample.len());
    assert_eq!(tiny.count(b"the").unwrap(), naive_count(sample, b"the"));
}
