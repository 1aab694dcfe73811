//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "RNTNCKPT"
//! 8       4     manifest length M, u32 little-endian
//! 12      M     manifest, UTF-8 JSON
//! 12+M    8     parameter count N, u64 little-endian
//! 20+M    8N    parameters, f64 little-endian
//! ```
//!
//! The manifest holds the format version, cell kind, task level,
//! dimensions, parameter count and the id-ordered vocabulary. Parameters
//! follow [`LanguageModel`]'s canonical buffer order: embedding table
//! `E` (V×e), then the cell buffers (see [`CellParams`](crate::cells::CellParams)),
//! then `W_hy` (d×V) and `b_y` (V). Matrices are row-major; the tensor is
//! stored slice by slice, each slice an e×d row-major matrix.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cells::CellKind;
use crate::data::{Level, Vocab};
use crate::error::{Error, Result};
use crate::model::{count_params, LanguageModel};
use crate::params::ParamSet;

pub const MAGIC: &[u8; 8] = b"RNTNCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub cell: CellKind,
    pub level: Level,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub param_count: usize,
    pub vocab: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: LanguageModel,
    pub vocab: Vocab,
}

impl Checkpoint {
    pub fn new(model: LanguageModel, vocab: Vocab) -> Result<Self> {
        if model.vocab_size() != vocab.len() {
            return Err(Error::VocabMismatch(format!(
                "model has {} outputs, vocabulary has {} tokens",
                model.vocab_size(),
                vocab.len()
            )));
        }
        Ok(Checkpoint { model, vocab })
    }

    pub fn manifest(&self) -> Manifest {
        let m = &self.model;
        Manifest {
            format_version: FORMAT_VERSION,
            cell: m.kind(),
            level: self.vocab.level(),
            vocab_size: m.vocab_size(),
            embed_dim: m.embed_dim(),
            hidden_dim: m.hidden_dim(),
            param_count: m.num_params(),
            vocab: self.vocab.tokens().to_vec(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest = serde_json::to_vec(&self.manifest()).expect("manifest serializes");
        let params = self.model.to_flat();
        let mut out = Vec::with_capacity(20 + manifest.len() + 8 * params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend_from_slice(&(params.len() as u64).to_le_bytes());
        for v in params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_owned());
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let mlen = u32::from_le_bytes(cur.array().ok_or_else(|| bad("truncated header"))?) as usize;
        let manifest: Manifest =
            serde_json::from_slice(cur.take(mlen).ok_or_else(|| bad("truncated manifest"))?).map_err(|e| bad(&format!("manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {}", manifest.format_version)));
        }
        let n = u64::from_le_bytes(cur.array().ok_or_else(|| bad("truncated payload header"))?) as usize;
        let expected = count_params(manifest.cell, manifest.embed_dim, manifest.hidden_dim, manifest.vocab_size, manifest.embed_dim);
        if n != expected || n != manifest.param_count {
            return Err(bad(&format!("payload has {n} parameters, dimensions imply {expected}")));
        }
        if manifest.vocab.len() != manifest.vocab_size {
            return Err(bad("vocabulary length disagrees with vocab_size"));
        }
        let payload = cur.take(n.checked_mul(8).ok_or_else(|| bad("payload size overflow"))?).ok_or_else(|| bad("truncated payload"))?;
        if cur.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        let flat: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let mut model = LanguageModel::zeros(manifest.cell, manifest.vocab_size, manifest.embed_dim, manifest.hidden_dim);
        model.load_flat(&flat);
        Checkpoint::new(model, Vocab::from_tokens(manifest.vocab, manifest.level))
    }

    /// Writes through a temporary file so a crash never leaves a torn checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, self.to_bytes())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

/// Path of the best-validation copy next to `checkpoint`.
pub fn best_path(checkpoint: &Path) -> PathBuf {
    let mut p = checkpoint.as_os_str().to_owned();
    p.push(".best");
    PathBuf::from(p)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn array<const N: usize>(&mut self) -> Option<[u8; N]> {
        self.take(N).map(|s| s.try_into().unwrap())
    }
}
