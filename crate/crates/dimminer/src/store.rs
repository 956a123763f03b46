//! On-disk layout under the data directory:
//!
//! ```text
//! corpus.json          ingested corpus, raw texts, and the config used
//! bases/<key>.eig      cached eigenbases, keyed by content hash
//! profiles/e<i>.json   dimension profiles
//! sessions/<id>.json   feedback sessions
//! ```

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use dimminer_core::corpus::{load_lexicon, load_mpqa_lexicon, Corpus, RawDocument, SubjectivityLexicon};
use dimminer_core::dimension::DimensionProfile;
use dimminer_core::spectral::{EigenBasis, LaplacianKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{AppError, AppResult};

pub const CORPUS_FILE: &str = "corpus.json";
const FORMAT_VERSION: u32 = 1;
const BASIS_MAGIC: &[u8; 4] = b"DMEB";

/// Reads one JSON document per line: `{"id", "text", "label"?, "domain"?}`.
/// Blank lines are skipped.
pub fn read_jsonl(path: &Path) -> AppResult<Vec<RawDocument>> {
    let file = fs::File::open(path).map_err(|e| AppError::io(format!("opening {}", path.display()), e))?;
    let mut docs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line)
            .map_err(|e| AppError::parse(format!("{} line {}", path.display(), n + 1), e))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_jsonl(path: &Path, docs: &[RawDocument]) -> AppResult<()> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d).map_err(|e| AppError::Internal(e.to_string()))?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Loads either the MPQA clue format (`word1=… priorpolarity=…`) or a
/// `term<TAB>polarity` file, whichever the contents look like.
pub fn read_lexicon(path: &Path) -> AppResult<SubjectivityLexicon> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
    let lexicon = if text.contains("priorpolarity=") {
        load_mpqa_lexicon(&text)?
    } else {
        load_lexicon(&text)?
    };
    Ok(lexicon)
}

/// Hex SHA-256 of `parts`, each length-prefixed so boundaries matter.
pub fn content_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredCorpus {
    pub v: u32,
    pub corpus_ref: String,
    pub config: PipelineConfig,
    pub corpus: Corpus,
    /// Raw text per document, in corpus order; used for snippets.
    pub texts: Vec<String>,
}

impl StoredCorpus {
    pub fn new(corpus: Corpus, texts: Vec<String>, config: PipelineConfig) -> AppResult<Self> {
        let json = serde_json::to_vec(&corpus).map_err(|e| AppError::Internal(e.to_string()))?;
        Ok(StoredCorpus {
            v: FORMAT_VERSION,
            corpus_ref: content_hash(&[&json]),
            config,
            corpus,
            texts,
        })
    }
}

/// Cache key of the eigenbasis of `corpus_ref` under the given Laplacian.
pub fn basis_key(corpus_ref: &str, kind: LaplacianKind, m: usize, irm_k: Option<usize>) -> String {
    let kind = match kind {
        LaplacianKind::Normalized => "normalized",
        LaplacianKind::Irm => "irm",
    };
    let k = irm_k.map_or(String::new(), |k| k.to_string());
    content_hash(&[
        corpus_ref.as_bytes(),
        kind.as_bytes(),
        &(m as u64).to_le_bytes(),
        k.as_bytes(),
    ])
}

/// Little-endian binary encoding of an eigenbasis, prefixed by a magic
/// number, a format version and the cache key it was stored under.
pub fn encode_basis(basis: &EigenBasis, key: &str) -> Vec<u8> {
    let n = basis.n_active();
    let mut out = Vec::with_capacity(64 + 8 * (basis.m() * (n + 1) + basis.n_total()));
    out.extend_from_slice(BASIS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(key.len() as u32).to_le_bytes());
    out.extend_from_slice(key.as_bytes());
    out.push(match basis.kind {
        LaplacianKind::Normalized => 0,
        LaplacianKind::Irm => 1,
    });
    for v in [basis.m(), n, basis.isolated.len()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&basis.residual_tol.to_le_bytes());
    for &i in basis.active.iter().chain(&basis.isolated) {
        out.extend_from_slice(&(i as u64).to_le_bytes());
    }
    for &v in basis.eigenvalues.iter().chain(basis.eigenvectors.iter().flatten()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> AppResult<&'a [u8]> {
        if self.buf.len() < n {
            return Err(AppError::parse("eigenbasis cache", "truncated file"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> AppResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> AppResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> AppResult<usize> {
        usize::try_from(self.u64()?).map_err(|_| AppError::parse("eigenbasis cache", "size overflow"))
    }

    fn f64(&mut self) -> AppResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decodes [`encode_basis`] output; returns the stored key alongside.
pub fn decode_basis(bytes: &[u8]) -> AppResult<(EigenBasis, String)> {
    let bad = |msg: &str| AppError::parse("eigenbasis cache", msg);
    let mut r = Reader { buf: bytes };
    if r.take(4)? != BASIS_MAGIC {
        return Err(bad("not an eigenbasis file"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let key_len = r.u32()? as usize;
    let key = String::from_utf8(r.take(key_len)?.to_vec()).map_err(|_| bad("key is not UTF-8"))?;
    let kind = match r.take(1)?[0] {
        0 => LaplacianKind::Normalized,
        1 => LaplacianKind::Irm,
        _ => return Err(bad("unknown Laplacian kind")),
    };
    let (m, n, n_isolated) = (r.usize()?, r.usize()?, r.usize()?);
    let expected = m
        .checked_mul(n)
        .and_then(|v| v.checked_add(n))
        .and_then(|v| v.checked_add(n_isolated))
        .and_then(|v| v.checked_add(m + 1))
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| bad("size overflow"))?;
    if r.buf.len() != expected {
        return Err(bad("length does not match header"));
    }
    let residual_tol = r.f64()?;
    let active = (0..n).map(|_| r.usize()).collect::<AppResult<Vec<_>>>()?;
    let isolated = (0..n_isolated).map(|_| r.usize()).collect::<AppResult<Vec<_>>>()?;
    let eigenvalues = (0..m).map(|_| r.f64()).collect::<AppResult<Vec<_>>>()?;
    let eigenvectors = (0..m)
        .map(|_| (0..n).map(|_| r.f64()).collect::<AppResult<Vec<_>>>())
        .collect::<AppResult<Vec<_>>>()?;
    Ok((
        EigenBasis {
            eigenvalues,
            eigenvectors,
            residual_tol,
            kind,
            active,
            isolated,
        },
        key,
    ))
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| AppError::io(format!("creating {}", dir.display()), e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| AppError::io(format!("writing {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(format!("renaming to {}", path.display()), e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> AppResult<T> {
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            AppError::NotFound(format!("{} does not exist", path.display()))
        } else {
            AppError::io(format!("reading {}", path.display()), e)
        }
    })?;
    serde_json::from_slice(&bytes).map_err(|e| AppError::parse(path.display().to_string(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| AppError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// The data directory.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.root.join("sessions")
    }

    pub fn profiles_dir(&self) -> PathBuf {
        self.root.join("profiles")
    }

    fn basis_path(&self, key: &str) -> PathBuf {
        self.root.join("bases").join(format!("{key}.eig"))
    }

    pub fn save_corpus(&self, stored: &StoredCorpus) -> AppResult<()> {
        write_json(&self.root.join(CORPUS_FILE), stored)
    }

    pub fn load_corpus(&self) -> AppResult<StoredCorpus> {
        let path = self.root.join(CORPUS_FILE);
        let mut stored: StoredCorpus = read_json(&path).map_err(|e| match e {
            AppError::NotFound(_) => AppError::NotFound(format!(
                "no corpus in {}; run `dimminer ingest` first",
                self.root.display()
            )),
            other => other,
        })?;
        if stored.v != FORMAT_VERSION {
            return Err(AppError::parse(path.display().to_string(), format!("unsupported version {}", stored.v)));
        }
        stored.corpus.rebuild_index();
        Ok(stored)
    }

    pub fn load_basis(&self, key: &str) -> AppResult<Option<EigenBasis>> {
        let path = self.basis_path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(AppError::io(format!("reading {}", path.display()), e)),
        };
        let (basis, stored_key) = decode_basis(&bytes)?;
        if stored_key != key {
            log::warn!("ignoring {}: stored under a different key", path.display());
            return Ok(None);
        }
        Ok(Some(basis))
    }

    pub fn save_basis(&self, key: &str, basis: &EigenBasis) -> AppResult<PathBuf> {
        let path = self.basis_path(key);
        write_atomic(&path, &encode_basis(basis, key))?;
        Ok(path)
    }

    /// One file per profile, `e<i>.json`.
    pub fn save_profiles(&self, profiles: &[DimensionProfile]) -> AppResult<Vec<PathBuf>> {
        profiles
            .iter()
            .map(|p| {
                let path = self.profiles_dir().join(format!("e{}.json", p.eig_index));
                write_json(&path, p).map(|_| path)
            })
            .collect()
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&self, path: &Path) -> AppResult<T> {
        read_json(path)
    }
}
