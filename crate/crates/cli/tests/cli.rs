use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use tempfile::TempDir;

fn textidx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textidx"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = textidx(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    textidx(args, dir).status.code().expect("exit code")
}

fn key_values(s: &str) -> HashMap<String, String> {
    s.lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap_or_else(|| panic!("not key=value: {l}"));
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn workdir(files: &[(&str, &[u8])]) -> TempDir {
    let d = tempfile::tempdir().unwrap();
    for (name, bytes) in files {
        std::fs::write(d.path().join(name), bytes).unwrap();
    }
    d
}

const SIX: [&str; 6] = [
    "ababbccbab",
    "bbbccaaabb",
    "ababbcaabb",
    "bbbcccccaa",
    "aabbccbbaa",
    "abccaabcab",
];

#[test]
fn fm_count_and_locate_on_mississippi() {
    let d = workdir(&[("m.txt", b"mississippi")]);
    let p = d.path();
    let build = key_values(&ok(&["build-fm", "m.txt", "--out", "m.fm", "--fat", "--sample-rate", "4"], p));
    assert_eq!(build["kind"], "fm");
    assert_eq!(build["text_len"], "11");
    assert_eq!(ok(&["query-fm", "m.fm", "--count", "--pattern", "si"], p), "2\n");
    assert_eq!(ok(&["query-fm", "m.fm", "--locate", "--pattern", "si"], p), "4\n7\n");
    assert_eq!(ok(&["query-fm", "m.fm", "--pattern", "ssi"], p), "3\n6\n");
    assert_eq!(ok(&["query-fm", "m.fm", "--pattern", "xyz"], p), "");
    ok(&["build-fm", "m.txt", "--out", "t.fm", "--tiny"], p);
    assert_eq!(ok(&["query-fm", "t.fm", "--count", "--pattern", "s"], p), "4\n");
    assert_eq!(code(&["query-fm", "t.fm", "--locate", "--pattern", "s"], p), 3);
}

#[test]
fn sbt_and_sa_queries_on_abababbc() {
    let d = workdir(&[("a.txt", b"abababbc"), ("b.txt", b"cabab")]);
    let p = d.path();
    ok(&["build-sbt", "a.txt", "--out", "a.sbt"], p);
    assert_eq!(ok(&["query-sbt", "a.sbt", "--pattern", "ab"], p), "1\n3\n5\n");
    assert_eq!(ok(&["query-sbt", "a.sbt", "--pattern", "baa"], p), "");
    ok(&["build-sa", "a.txt", "--out", "a.sa"], p);
    assert_eq!(ok(&["query-sa", "a.sa", "--text", "a.txt", "--pattern", "ab"], p), "1\n3\n5\n");
    assert_eq!(ok(&["query-sa", "a.sa", "--text", "a.txt", "--pattern", "baa"], p), "");
    // two texts: (text, offset) lines
    ok(&["build-sbt", "a.txt", "b.txt", "--out", "ab.sbt", "--page-size", "256"], p);
    let got = ok(&["query-sbt", "ab.sbt", "--pattern", "bab", "--page-size", "256"], p);
    let mut lines: Vec<&str> = got.lines().collect();
    lines.sort_unstable();
    assert_eq!(lines, vec!["0 2", "0 4", "1 3"]);
}

#[test]
fn sort_strings_six_string_fixture() {
    let mut framed = (SIX.len() as u32).to_le_bytes().to_vec();
    for s in SIX {
        framed.extend_from_slice(&(s.len() as u32).to_le_bytes());
        framed.extend_from_slice(s.as_bytes());
    }
    let lines = SIX.join("\n") + "\n";
    let d = workdir(&[("six.bin", &framed), ("six.txt", lines.as_bytes())]);
    let p = d.path();
    assert_eq!(ok(&["sort-strings", "six.bin", "--L", "16"], p), "5\n3\n1\n6\n2\n4\n");
    assert_eq!(ok(&["sort-strings", "six.txt", "--lines", "--L", "16", "--seed", "7"], p), "5\n3\n1\n6\n2\n4\n");
    assert_eq!(code(&["sort-strings", "six.txt", "--L", "16"], p), 3);
    assert_eq!(code(&["sort-strings", "six.bin", "--L", "12"], p), 3);
}

#[test]
fn word_indexes_and_huffword() {
    let text = b"the cat the cap, then the cat";
    let d = workdir(&[("w.txt", text)]);
    let p = d.path();
    ok(&["build-wfm", "w.txt", "--out", "w.wfm"], p);
    assert_eq!(ok(&["query-wfm", "w.wfm", "--word", "the"], p), "0\n8\n22\n");
    assert_eq!(ok(&["query-wfm", "w.wfm", "--word", "the", "--count"], p), "3\n");
    assert_eq!(ok(&["query-wfm", "w.wfm", "--prefix", "ca"], p), "cap\t12\ncat\t4\ncat\t26\n");
    assert_eq!(ok(&["query-wfm", "w.wfm", "--word", "dog"], p), "");
    assert_eq!(code(&["query-wfm", "w.wfm"], p), 2);

    let build = key_values(&ok(&["build-block", "w.txt", "--out", "w.bix", "--block-size", "64"], p));
    assert_eq!(build["blocks"], "1");
    assert_eq!(ok(&["query-block", "w.bix", "--word", "cat"], p), "4\n26\n");
    assert_eq!(ok(&["query-block", "w.bix", "--prefix", "th"], p), "the\t0\nthe\t8\nthe\t22\nthen\t17\n");
    assert_eq!(code(&["build-block", "w.txt", "--out", "x.bix", "--block-size", "8"], p), 3);

    ok(&["huffword-encode", "w.txt", "--out", "w.hw"], p);
    assert_eq!(ok(&["huffword-find", "w.hw", "--word", "cat"], p), "4\n26\n");
    ok(&["huffword-decode", "w.hw", "--out", "back.txt"], p);
    assert_eq!(std::fs::read(p.join("back.txt")).unwrap(), text);
}

#[test]
fn queries_are_byte_identical_across_runs() {
    let d = workdir(&[("t.txt", b"to be or not to be, that is the question")]);
    let p = d.path();
    ok(&["build-fm", "t.txt", "--out", "t.fm"], p);
    let run = || textidx(&["query-fm", "t.fm", "--pattern", "to"], p);
    let (a, b) = (run(), run());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    assert_eq!(String::from_utf8(a.stdout).unwrap(), "1\n14\n");
}

#[test]
fn exit_codes() {
    let d = workdir(&[("empty.txt", b""), ("junk.fm", b"not an index at all")]);
    let p = d.path();
    for kind in ["build-sa", "build-fm", "build-wfm", "build-block"] {
        assert_eq!(code(&[kind, "empty.txt", "--out", "o"], p), 3, "{kind}");
    }
    assert_eq!(code(&["build-sbt", "empty.txt", "--out", "o"], p), 3);
    assert_eq!(code(&["query-fm", "missing.fm", "--pattern", "a"], p), 3);
    assert_eq!(code(&["query-block", "missing.bix", "--word", "a"], p), 3);
    assert_eq!(code(&["query-fm", "junk.fm", "--pattern", "a", "--page-size", "64"], p), 3);
    assert_eq!(code(&["frobnicate"], p), 2);
    assert_eq!(code(&["build-fm", "empty.txt"], p), 2);
    assert_eq!(code(&["build-fm", "x", "--out", "y", "--tiny", "--fat"], p), 2);
    let out = textidx(&["stats", "empty.txt"], p);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn stats_on_tiny_and_zipf_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let z = Zipf::new(100_000.0, 1.8).unwrap();
    let mut corpus = String::new();
    for _ in 0..200_000 {
        corpus.push_str(&format!("w{} ", z.sample(&mut rng) as u64));
    }
    let d = workdir(&[("tiny.txt", b"just a few words here"), ("zipf.txt", corpus.as_bytes())]);
    let p = d.path();
    let out = textidx(&["stats", "tiny.txt"], p);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus too small"));
    let kv = key_values(&ok(&["stats", "zipf.txt"], p));
    assert_eq!(kv["n_tokens"], "200000");
    let theta: f64 = kv["zipf_theta"].parse().unwrap();
    assert!((theta - 1.8).abs() <= 0.15, "theta {theta}");
}

#[test]
fn build_fm_on_english_sample_writes_pages() {
    let sample = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/english_sample.txt");
    let d = tempfile::tempdir().unwrap();
    let kv = key_values(&ok(&["build-fm", sample, "--out", "e.fm", "--tiny"], d.path()));
    assert!(kv["page_writes"].parse::<u64>().unwrap() > 0);
    let raw = std::fs::metadata(sample).unwrap().len();
    assert!(kv["index_bytes"].parse::<u64>().unwrap() < raw);
}
