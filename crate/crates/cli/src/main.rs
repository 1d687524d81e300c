//! `textidx`: build and query the indexes of the textidx crate.
//!
//! Build commands print `key=value` lines on stdout. Query commands print one
//! result per line on stdout and their I/O counters on stderr.
//!
//! Exit codes: 0 success, 2 usage, 3 bad input (missing, empty or malformed
//! file), 4 internal failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use textidx::blockindex::{corpus_stats, BlockIndex};
use textidx::fmindex::{FmConfig, FmIndex, Mode};
use textidx::huffword::{compressed_find, tokenize, HuffwordModel, Vocabulary};
use textidx::pager::{IoStats, PagedStore};
use textidx::sbtree::StringBTree;
use textidx::strsort::{sort_strings, ScratchSpec, SortConfig, DEFAULT_PIECE_BITS};
use textidx::suffarr::{build_sa_internal, write_sa_file, SaFile};
use textidx::wfm::{WfmConfig, WfmIndex};

#[derive(Debug, Parser)]
#[command(name = "textidx", version, about = "Disk-conscious full-text indexing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
struct Paging {
    /// Bytes per page; queries must use the value the index was built with.
    #[arg(long, default_value_t = 4096)]
    page_size: usize,
    /// Bytes of simulated internal memory.
    #[arg(long, default_value_t = 64 << 20)]
    mem_budget: usize,
}

#[derive(Debug, Args)]
struct Build {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    paging: Paging,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct WordOrPrefix {
    #[arg(long)]
    word: Option<String>,
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Suffix array file of a text.
    BuildSa(Build),
    /// String B-tree over one or more texts; texts go to `<out>.texts`.
    BuildSbt {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        paging: Paging,
    },
    /// FM-index of a text.
    BuildFm {
        #[command(flatten)]
        build: Build,
        #[arg(long, conflicts_with = "fat")]
        tiny: bool,
        #[arg(long)]
        fat: bool,
        #[arg(long, default_value_t = 32)]
        sample_rate: usize,
    },
    /// Word-based FM-index over the Huffword-compressed text.
    BuildWfm {
        #[command(flatten)]
        build: Build,
        #[arg(long, default_value_t = 32)]
        sample_rate: usize,
    },
    /// Block-addressing inverted index.
    BuildBlock {
        #[command(flatten)]
        build: Build,
        #[arg(long, default_value_t = 4096)]
        block_size: usize,
    },
    /// 1-based occurrences of a pattern via the suffix array.
    QuerySa {
        index: PathBuf,
        /// The indexed text.
        #[arg(long)]
        text: PathBuf,
        #[arg(long)]
        pattern: String,
        #[command(flatten)]
        paging: Paging,
    },
    /// Occurrences of a pattern in the String B-tree.
    QuerySbt {
        index: PathBuf,
        #[arg(long)]
        pattern: String,
        #[command(flatten)]
        paging: Paging,
    },
    /// Count or locate a pattern in an FM-index.
    QueryFm {
        index: PathBuf,
        #[arg(long)]
        pattern: String,
        /// Print the number of occurrences instead of their positions.
        #[arg(long, conflicts_with = "locate")]
        count: bool,
        #[arg(long)]
        locate: bool,
        #[command(flatten)]
        paging: Paging,
    },
    /// Word or prefix query on a word-based FM-index; prints 0-based byte offsets.
    QueryWfm {
        index: PathBuf,
        #[command(flatten)]
        what: WordOrPrefix,
        #[arg(long, conflicts_with = "prefix")]
        count: bool,
        #[command(flatten)]
        paging: Paging,
    },
    /// Word or prefix query on a block index; prints 0-based byte offsets.
    QueryBlock {
        index: PathBuf,
        #[command(flatten)]
        what: WordOrPrefix,
        #[command(flatten)]
        paging: Paging,
    },
    /// Sorts a string set; prints the 1-based input indices in sorted order.
    SortStrings {
        input: PathBuf,
        /// Input is one string per line instead of the length-prefixed format.
        #[arg(long)]
        lines: bool,
        /// Piece length in bits.
        #[arg(long = "L", default_value_t = DEFAULT_PIECE_BITS)]
        piece_bits: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        max_retries: u32,
        #[command(flatten)]
        paging: Paging,
    },
    /// Token counts and Heaps/Zipf fits of a corpus.
    Stats { input: PathBuf },
    /// Writes the Huffword model followed by the compressed text.
    HuffwordEncode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Restores the source text from a Huffword file.
    HuffwordDecode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Source offsets of a word, found by scanning the compressed text.
    HuffwordFind {
        input: PathBuf,
        #[arg(long)]
        word: String,
    },
}

/// Marks an error as caused by the input rather than by the program.
#[derive(Debug)]
struct InputError;

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("bad input")
    }
}

impl std::error::Error for InputError {}

trait InputContext<T> {
    fn input(self) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> InputContext<T> for std::result::Result<T, E> {
    fn input(self) -> Result<T> {
        self.map_err(|e| e.into().context(InputError))
    }
}

fn input_err(msg: String) -> anyhow::Error {
    anyhow!(msg).context(InputError)
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .input()?;
    if bytes.is_empty() {
        return Err(input_err(format!("{} is empty", path.display())));
    }
    Ok(bytes)
}

fn create_store(path: &Path, p: Paging) -> Result<PagedStore> {
    PagedStore::create(path, p.page_size, p.mem_budget)
        .with_context(|| format!("cannot create {}", path.display()))
        .input()
}

fn open_store(path: &Path, p: Paging) -> Result<PagedStore> {
    PagedStore::open(path, p.page_size, p.mem_budget)
        .with_context(|| format!("cannot open index {}", path.display()))
        .input()
}

fn texts_path(index: &Path) -> PathBuf {
    let mut s = index.as_os_str().to_owned();
    s.push(".texts");
    PathBuf::from(s)
}

fn fm_config(tiny: bool, sample_rate: usize) -> FmConfig {
    FmConfig {
        mode: if tiny { Mode::Tiny } else { Mode::Fat },
        sample_rate,
        ..FmConfig::default()
    }
}

fn lines_of<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for x in items {
        writeln!(out, "{x}").expect("writing to a String");
    }
    out
}

fn prefix_lines(m: &BTreeMap<Vec<u8>, Vec<u64>>) -> String {
    let mut out = String::new();
    for (w, offs) in m {
        let w = String::from_utf8_lossy(w);
        for o in offs {
            writeln!(out, "{w}\t{o}").expect("writing to a String");
        }
    }
    out
}

/// Length-prefixed string set: count u32 LE, then (length u32 LE, bytes).
fn parse_string_set(buf: &[u8]) -> Result<Vec<Vec<u8>>> {
    let bad = || input_err("truncated string set".into());
    let u32_at = |at: usize| -> Result<usize> {
        Ok(u32::from_le_bytes(buf.get(at..at + 4).ok_or_else(bad)?.try_into().expect("4 bytes")) as usize)
    };
    let count = u32_at(0)?;
    let mut pos = 4;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len = u32_at(pos)?;
        out.push(buf.get(pos + 4..pos + 4 + len).ok_or_else(bad)?.to_vec());
        pos += 4 + len;
    }
    if pos != buf.len() {
        return Err(input_err("trailing bytes after the string set".into()));
    }
    Ok(out)
}

/// Output of a command: stdout text and an optional stderr report.
struct Output {
    stdout: String,
    stderr: String,
}

impl Output {
    fn out(stdout: String) -> Self {
        Output {
            stdout,
            stderr: String::new(),
        }
    }

    fn with_io(stdout: String, io: IoStats) -> Self {
        Output {
            stdout,
            stderr: io.report(""),
        }
    }
}

fn run(cmd: Command) -> Result<Output> {
    match cmd {
        Command::BuildSa(b) => {
            let text = read_input(&b.input)?;
            let sa = build_sa_internal(&text).input()?;
            let mut store = create_store(&b.out, b.paging)?;
            write_sa_file(&mut store, &sa)?;
            Ok(Output::out(format!("kind=sa\nsuffixes={}\n{}", sa.len(), store.io_stats().report(""))))
        }
        Command::BuildSbt { inputs, out, paging } => {
            let texts = inputs.iter().map(|p| read_input(p)).collect::<Result<Vec<_>>>()?;
            let store = create_store(&out, paging)?;
            let text_store = create_store(&texts_path(&out), paging)?;
            let tree = StringBTree::build(&texts, store, text_store, None).input()?;
            Ok(Output::out(format!(
                "kind=sbt\ntexts={}\nkeys={}\nheight={}\nbranching={}\n{}{}",
                texts.len(),
                tree.len(),
                tree.height(),
                tree.branching(),
                tree.index_stats().report(""),
                tree.text_stats().report("text_"),
            )))
        }
        Command::BuildFm {
            build,
            tiny,
            fat: _,
            sample_rate,
        } => {
            let text = read_input(&build.input)?;
            let fm = FmIndex::build(&text, fm_config(tiny, sample_rate)).input()?;
            let mut store = create_store(&build.out, build.paging)?;
            fm.save(&mut store)?;
            Ok(Output::out(format!(
                "kind=fm\nmode={}\ntext_len={}\nmarked_rows={}\nindex_bytes={}\n{}",
                if tiny { "tiny" } else { "fat" },
                fm.text_len(),
                fm.marked_rows(),
                fm.to_bytes().len(),
                store.io_stats().report("")
            )))
        }
        Command::BuildWfm { build, sample_rate } => {
            let text = read_input(&build.input)?;
            let cfg = WfmConfig {
                sample_rate,
                ..WfmConfig::default()
            };
            let idx = WfmIndex::build(&text, cfg).input()?;
            let mut store = create_store(&build.out, build.paging)?;
            idx.save(&mut store)?;
            Ok(Output::out(format!(
                "kind=wfm\ntext_len={}\nvocabulary={}\ndigested_len={}\nindex_bytes={}\n{}",
                idx.text_len(),
                idx.model().map_or(0, |m| m.len()),
                idx.digested_len(),
                idx.to_bytes().len(),
                store.io_stats().report("")
            )))
        }
        Command::BuildBlock { build, block_size } => {
            let text = read_input(&build.input)?;
            let store = create_store(&build.out, build.paging)?;
            let (idx, report) = BlockIndex::build(&text, block_size, build.paging.mem_budget, store).input()?;
            Ok(Output::out(format!(
                "kind=block\nblocks={}\nvocabulary={}\npairs={}\nruns={}\npostings_bytes={}\n{}{}",
                idx.block_count(),
                idx.model().map_or(0, |m| m.len()),
                report.pairs,
                report.runs,
                idx.postings_len(),
                idx.io_stats().report(""),
                report.scratch_io.report("scratch_"),
            )))
        }
        Command::QuerySa {
            index,
            text,
            pattern,
            paging,
        } => {
            let text = read_input(&text)?;
            let mut store = open_store(&index, paging)?;
            let mut sa = SaFile::new(&mut store).input()?;
            let mut hits = sa.search(&text, pattern.as_bytes()).input()?;
            let io = sa.io_stats();
            hits.sort_unstable();
            Ok(Output::with_io(lines_of(hits), io))
        }
        Command::QuerySbt { index, pattern, paging } => {
            let store = open_store(&index, paging)?;
            let text_store = open_store(&texts_path(&index), paging)?;
            let mut tree = StringBTree::open(store, text_store).input()?;
            tree.reset_stats();
            let hits = tree.search(pattern.as_bytes()).input()?;
            let single = tree.texts().live_ids().len() == 1;
            let lines = hits.iter().map(|&(t, o)| if single { o.to_string() } else { format!("{t} {o}") });
            let mut io = tree.index_stats();
            let ts = tree.text_stats();
            io.page_reads += ts.page_reads;
            io.seeks += ts.seeks;
            io.bulk_runs += ts.bulk_runs;
            io.max_run_len = io.max_run_len.max(ts.max_run_len);
            Ok(Output::with_io(lines_of(lines), io))
        }
        Command::QueryFm {
            index,
            pattern,
            count,
            locate: _,
            paging,
        } => {
            let mut store = open_store(&index, paging)?;
            let fm = FmIndex::load(&mut store).input()?;
            let io = store.io_stats();
            let p = pattern.as_bytes();
            let stdout = if count {
                format!("{}\n", fm.count(p).input()?)
            } else {
                lines_of(fm.locate_all(p).input()?)
            };
            Ok(Output::with_io(stdout, io))
        }
        Command::QueryWfm {
            index,
            what,
            count,
            paging,
        } => {
            let mut store = open_store(&index, paging)?;
            let idx = WfmIndex::load(&mut store).input()?;
            let io = store.io_stats();
            let stdout = match (what.word, what.prefix) {
                (Some(w), _) if count => format!("{}\n", idx.word_count(w.as_bytes())?),
                (Some(w), _) => lines_of(idx.word_locate(w.as_bytes())?),
                (None, Some(p)) => prefix_lines(&idx.prefix_word_search(p.as_bytes()).input()?),
                (None, None) => unreachable!("clap requires one of --word and --prefix"),
            };
            Ok(Output::with_io(stdout, io))
        }
        Command::QueryBlock { index, what, paging } => {
            let store = open_store(&index, paging)?;
            let mut idx = BlockIndex::open(store).input()?;
            idx.reset_stats();
            let stdout = match (what.word, what.prefix) {
                (Some(w), _) => lines_of(idx.query_word(w.as_bytes())?),
                (None, Some(p)) => prefix_lines(&idx.query_prefix(p.as_bytes()).input()?),
                (None, None) => unreachable!("clap requires one of --word and --prefix"),
            };
            Ok(Output::with_io(stdout, idx.io_stats()))
        }
        Command::SortStrings {
            input,
            lines,
            piece_bits,
            seed,
            max_retries,
            paging,
        } => {
            let buf = read_input(&input)?;
            let strings: Vec<Vec<u8>> = if lines {
                let body = buf.strip_suffix(b"\n").unwrap_or(&buf);
                body.split(|&b| b == b'\n')
                    .map(|l| l.strip_suffix(b"\r").unwrap_or(l).to_vec())
                    .collect()
            } else {
                parse_string_set(&buf)?
            };
            let cfg = SortConfig {
                piece_bits,
                seed,
                max_retries,
                scratch: ScratchSpec {
                    page_size: paging.page_size,
                    mem_budget: paging.mem_budget,
                },
            };
            let out = sort_strings(&strings, &cfg).input()?;
            let stderr = format!("attempts={}\ncollisions={}\nfailed_checks={}\n", out.attempts, out.collisions, out.failed_checks);
            Ok(Output {
                stdout: lines_of(out.order.iter().map(|i| i + 1)),
                stderr,
            })
        }
        Command::Stats { input } => {
            let text = read_input(&input)?;
            Ok(Output::out(corpus_stats(&text).input()?.report()))
        }
        Command::HuffwordEncode { input, out } => {
            let text = read_input(&input)?;
            let model = HuffwordModel::build(&Vocabulary::build(&tokenize(&text)))?;
            let dt = model.encode_text(&text)?;
            let mut buf = model.to_bytes();
            let model_bytes = buf.len();
            buf.extend_from_slice(&dt);
            std::fs::write(&out, &buf).with_context(|| format!("cannot write {}", out.display()))?;
            Ok(Output::out(format!(
                "text_len={}\nvocabulary={}\nmodel_bytes={model_bytes}\ndigested_len={}\n",
                text.len(),
                model.len(),
                dt.len()
            )))
        }
        Command::HuffwordDecode { input, out } => {
            let buf = read_input(&input)?;
            let (model, used) = HuffwordModel::from_prefix(&buf).input()?;
            let text = model.decode(&buf[used..]).input()?;
            std::fs::write(&out, &text).with_context(|| format!("cannot write {}", out.display()))?;
            Ok(Output::out(format!("text_len={}\n", text.len())))
        }
        Command::HuffwordFind { input, word } => {
            let buf = read_input(&input)?;
            let (model, used) = HuffwordModel::from_prefix(&buf).input()?;
            let dt = &buf[used..];
            let Some(cw) = model.codeword(word.as_bytes()) else {
                return Ok(Output::out(String::new()));
            };
            let hits = compressed_find(dt, cw);
            let mut offsets = Vec::with_capacity(hits.len());
            let (mut src, mut h) = (0u64, 0);
            for (off, id) in model.codewords(dt).input()? {
                if h < hits.len() && hits[h] == off {
                    offsets.push(src);
                    h += 1;
                }
                src += model.term(id).len() as u64;
            }
            if h != hits.len() {
                bail!("match off a codeword boundary");
            }
            Ok(Output::out(lines_of(offsets)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let input = e.downcast_ref::<InputError>().is_some();
            // the input marker is always the outermost context
            let msg: Vec<String> = e.chain().skip(usize::from(input)).map(|c| c.to_string()).collect();
            eprintln!("error: {}", msg.join(": "));
            let code = if input { 3 } else { 4 };
            ExitCode::from(code)
        }
    }
}
