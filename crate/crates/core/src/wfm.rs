//! Word-based index: an FM-index over the Huffword-digested text DT.
//!
//! A word query becomes a byte-pattern query for its codeword on DT. Counting
//! uses only the FM structures. Locating maps DT offsets back to source
//! offsets through align samples taken every `align_every` codewords.
//!
//! Bundle file:
//!
//! ```text
//! "WFM1" text_len:u64 align_every:u32
//! model_len:u64 model ("HWM1", absent when model_len = 0)
//! fm_len:u64 fm ("FMI1")
//! "ALN1" count:u64 (dt_offset:u64, src_offset:u64) x count
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fmindex::{FmConfig, FmError, FmIndex, Mode};
use crate::huffword::{is_word_byte, tokenize, HuffError, HuffwordModel, Vocabulary};
use crate::pager::{PagedStore, PagerError};

const MAGIC: &[u8; 4] = b"WFM1";
const ALIGN_MAGIC: &[u8; 4] = b"ALN1";

#[derive(Debug, Error)]
pub enum WfmError {
    #[error("prefix is empty")]
    EmptyPattern,
    #[error("align interval must be positive")]
    BadConfig,
    #[error("corrupt bundle: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Huff(#[from] HuffError),
    #[error(transparent)]
    Fm(#[from] FmError),
    #[error(transparent)]
    Pager(#[from] PagerError),
}

pub type Result<T> = std::result::Result<T, WfmError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WfmConfig {
    pub sample_rate: usize,
    pub bucket_size: usize,
    pub align_every: usize,
}

impl Default for WfmConfig {
    fn default() -> Self {
        WfmConfig {
            sample_rate: 32,
            bucket_size: 256,
            align_every: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WfmIndex {
    model: Option<HuffwordModel>,
    fm: FmIndex,
    dt: Vec<u8>,
    /// (DT offset, source offset) of every `align_every`-th codeword
    align: Vec<(u64, u64)>,
    align_every: usize,
    text_len: u64,
}

impl WfmIndex {
    pub fn build(text: &[u8], config: WfmConfig) -> Result<Self> {
        if config.align_every == 0 {
            return Err(WfmError::BadConfig);
        }
        let tokens = tokenize(text);
        let (model, dt, align) = if tokens.is_empty() {
            (None, Vec::new(), Vec::new())
        } else {
            let model = HuffwordModel::build(&Vocabulary::build(&tokens))?;
            let mut dt = Vec::new();
            let mut align = Vec::new();
            for (k, t) in tokens.iter().enumerate() {
                if k % config.align_every == 0 {
                    align.push((dt.len() as u64, t.offset as u64));
                }
                dt.extend_from_slice(model.codeword(t.bytes).expect("term from the same tokens"));
            }
            (Some(model), dt, align)
        };
        let fm = FmIndex::build_raw(
            &dt,
            FmConfig {
                mode: Mode::Fat,
                sample_rate: config.sample_rate,
                bucket_size: config.bucket_size,
            },
        )?;
        Ok(WfmIndex {
            model,
            fm,
            dt,
            align,
            align_every: config.align_every,
            text_len: text.len() as u64,
        })
    }

    pub fn model(&self) -> Option<&HuffwordModel> {
        self.model.as_ref()
    }

    pub fn fm(&self) -> &FmIndex {
        &self.fm
    }

    pub fn digested_len(&self) -> usize {
        self.dt.len()
    }

    pub fn text_len(&self) -> u64 {
        self.text_len
    }

    fn codeword(&self, w: &[u8]) -> Option<&[u8]> {
        self.model.as_ref()?.codeword(w)
    }

    /// Occurrences of the term `w`, from the FM-index alone.
    pub fn word_count(&self, w: &[u8]) -> Result<u64> {
        match self.codeword(w) {
            Some(cw) => Ok(self.fm.count(cw)?),
            None => Ok(0),
        }
    }

    /// Source byte offsets of the term `w`, ascending.
    pub fn word_locate(&self, w: &[u8]) -> Result<Vec<u64>> {
        let Some(cw) = self.codeword(w) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for pos in self.fm.locate_all(cw)? {
            let off = pos as usize - 1;
            if self.dt[off] & 0x80 == 0 {
                return Err(WfmError::Corrupt("codeword match at an untagged byte"));
            }
            out.push(self.source_offset(off)?);
        }
        Ok(out)
    }

    /// Source offset of the codeword starting at DT offset `off`.
    fn source_offset(&self, off: usize) -> Result<u64> {
        let model = self.model.as_ref().ok_or(WfmError::Corrupt("no model"))?;
        let k = self.align.partition_point(|&(d, _)| d as usize <= off) - 1;
        let (mut d, mut src) = (self.align[k].0 as usize, self.align[k].1);
        while d < off {
            let len = 1 + self.dt[d + 1..].iter().take_while(|&&b| b & 0x80 == 0).count();
            let id = model.term_of_code(&self.dt[d..d + len]).ok_or(WfmError::Corrupt("unknown codeword"))?;
            src += model.term(id).len() as u64;
            d += len;
        }
        if d != off {
            return Err(WfmError::Corrupt("offset is not a codeword start"));
        }
        Ok(src)
    }

    /// Words starting with `p`, each with its ascending source offsets.
    pub fn prefix_word_search(&self, p: &[u8]) -> Result<BTreeMap<Vec<u8>, Vec<u64>>> {
        if p.is_empty() {
            return Err(WfmError::EmptyPattern);
        }
        let mut out = BTreeMap::new();
        let Some(model) = &self.model else {
            return Ok(out);
        };
        let terms = model.terms();
        let lo = terms.partition_point(|t| t.as_slice() < p);
        for t in terms[lo..].iter().take_while(|t| t.starts_with(p)) {
            if is_word_byte(t[0]) {
                out.insert(t.clone(), self.word_locate(t)?);
            }
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.text_len.to_le_bytes());
        out.extend_from_slice(&(self.align_every as u32).to_le_bytes());
        let model = self.model.as_ref().map(|m| m.to_bytes()).unwrap_or_default();
        out.extend_from_slice(&(model.len() as u64).to_le_bytes());
        out.extend_from_slice(&model);
        let fm = self.fm.to_bytes();
        out.extend_from_slice(&(fm.len() as u64).to_le_bytes());
        out.extend_from_slice(&fm);
        out.extend_from_slice(ALIGN_MAGIC);
        out.extend_from_slice(&(self.align.len() as u64).to_le_bytes());
        for &(d, s) in &self.align {
            out.extend_from_slice(&d.to_le_bytes());
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = buf.get(pos..pos + n).ok_or(WfmError::Corrupt("truncated"))?;
            pos += n;
            Ok(s)
        };
        let u64_of = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8 bytes"));
        if take(4)? != MAGIC {
            return Err(WfmError::Corrupt("bad magic"));
        }
        let text_len = u64_of(take(8)?);
        let align_every = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let model_len = u64_of(take(8)?) as usize;
        let model = match model_len {
            0 => None,
            n => Some(HuffwordModel::from_bytes(take(n)?)?),
        };
        let fm_len = u64_of(take(8)?) as usize;
        let fm = FmIndex::from_bytes(take(fm_len)?)?;
        if take(4)? != ALIGN_MAGIC {
            return Err(WfmError::Corrupt("bad align magic"));
        }
        let count = u64_of(take(8)?) as usize;
        let mut align = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let d = u64_of(take(8)?);
            let s = u64_of(take(8)?);
            align.push((d, s));
        }
        if pos != buf.len() {
            return Err(WfmError::Corrupt("trailing bytes"));
        }
        let dt = fm.bwt().invert()?;
        if model.is_some() == dt.is_empty() {
            return Err(WfmError::Corrupt("model presence differs from the digested text"));
        }
        if !dt.is_empty() && align.first().map(|a| a.0) != Some(0) {
            return Err(WfmError::Corrupt("align table does not start at offset 0"));
        }
        if align.iter().any(|&(d, s)| d as usize >= dt.len() || s >= text_len) {
            return Err(WfmError::Corrupt("align sample out of range"));
        }
        Ok(WfmIndex {
            model,
            fm,
            dt,
            align,
            align_every,
            text_len,
        })
    }

    pub fn save(&self, store: &mut PagedStore) -> Result<()> {
        Ok(store.write_stream(&self.to_bytes())?)
    }

    pub fn load(store: &mut PagedStore) -> Result<Self> {
        Self::from_bytes(&store.read_stream()?)
    }
}
