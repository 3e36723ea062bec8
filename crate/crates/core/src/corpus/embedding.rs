//! Padded sentence-embedding documents and the `FEMB0001` binary container.
//!
//! Layout (little-endian): the 8 magic bytes, a `u32` record count, then per
//! record a `u32`-length-prefixed UTF-8 meeting id, a `u32`-length-prefixed
//! UTF-8 member id, a `u16` sentence count and `256 x 768` `f32` values in
//! row-major order. Rows at or beyond the sentence count are zero.
//!
//! In memory only the populated rows are kept; the padding is implied.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"FEMB0001";
pub const MAX_SENTENCES: usize = 256;
pub const EMBED_DIM: usize = 768;

/// One speaker-meeting document as a padded `256 x 768` sentence-embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTranscript {
    meeting_id: String,
    member_id: String,
    n_sentences: usize,
    // n_sentences * EMBED_DIM values, row-major.
    rows: Vec<f32>,
}

impl EmbeddedTranscript {
    /// Builds a document from its populated rows (`n_sentences * 768` values).
    pub fn new(
        meeting_id: impl Into<String>,
        member_id: impl Into<String>,
        rows: Vec<f32>,
    ) -> Result<Self> {
        let meeting_id = meeting_id.into();
        let member_id = member_id.into();
        if rows.len() % EMBED_DIM != 0 {
            return Err(Error::Corruption(format!(
                "{meeting_id}/{member_id}: {} values is not a whole number of {EMBED_DIM}-wide rows",
                rows.len()
            )));
        }
        let n_sentences = rows.len() / EMBED_DIM;
        if n_sentences > MAX_SENTENCES {
            return Err(Error::Corruption(format!(
                "{meeting_id}/{member_id}: {n_sentences} sentences exceeds {MAX_SENTENCES}"
            )));
        }
        if let Some(pos) = rows.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "{meeting_id}/{member_id}: non-finite value at sentence {}, column {}",
                pos / EMBED_DIM,
                pos % EMBED_DIM
            )));
        }
        Ok(Self {
            meeting_id,
            member_id,
            n_sentences,
            rows,
        })
    }

    /// Builds a document from a full padded `256 x 768` matrix.
    pub fn from_padded(
        meeting_id: impl Into<String>,
        member_id: impl Into<String>,
        padded: &[f32],
        n_sentences: usize,
    ) -> Result<Self> {
        let meeting_id = meeting_id.into();
        let member_id = member_id.into();
        if padded.len() != MAX_SENTENCES * EMBED_DIM {
            return Err(Error::Corruption(format!(
                "{meeting_id}/{member_id}: expected {} values, got {}",
                MAX_SENTENCES * EMBED_DIM,
                padded.len()
            )));
        }
        if n_sentences > MAX_SENTENCES {
            return Err(Error::Corruption(format!(
                "{meeting_id}/{member_id}: sentence count {n_sentences} exceeds {MAX_SENTENCES}"
            )));
        }
        let split = n_sentences * EMBED_DIM;
        if let Some(pos) = padded[split..].iter().position(|&v| v != 0.0) {
            return Err(Error::Corruption(format!(
                "{meeting_id}/{member_id}: padding row {} is not zero",
                (split + pos) / EMBED_DIM
            )));
        }
        Self::new(meeting_id, member_id, padded[..split].to_vec())
    }

    pub fn meeting_id(&self) -> &str {
        &self.meeting_id
    }

    pub fn member_id(&self) -> &str {
        &self.member_id
    }

    pub fn n_sentences(&self) -> usize {
        self.n_sentences
    }

    /// Row `i` of the logical `256 x 768` matrix; padding rows are zeros.
    pub fn row(&self, i: usize) -> Vec<f32> {
        assert!(i < MAX_SENTENCES, "row {i} out of range");
        if i < self.n_sentences {
            self.rows[i * EMBED_DIM..(i + 1) * EMBED_DIM].to_vec()
        } else {
            vec![0.0; EMBED_DIM]
        }
    }

    /// The populated rows, row-major.
    pub fn content(&self) -> &[f32] {
        &self.rows
    }

    /// The full padded matrix, row-major.
    pub fn to_padded(&self) -> Vec<f32> {
        let mut out = vec![0.0f32; MAX_SENTENCES * EMBED_DIM];
        out[..self.rows.len()].copy_from_slice(&self.rows);
        out
    }

    /// Attention mask over the 256 rows: `true` marks a padded row.
    pub fn padding_mask(&self) -> Vec<bool> {
        (0..MAX_SENTENCES).map(|i| i >= self.n_sentences).collect()
    }

    /// The populated rows as an `n_sentences x 768` matrix.
    pub fn content_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            self.n_sentences,
            EMBED_DIM,
            self.rows.iter().map(|&v| f64::from(v)),
        )
    }

    /// Mean of the populated rows, used as a document vector.
    pub fn mean_vector(&self) -> Vec<f64> {
        let mut acc = vec![0.0f64; EMBED_DIM];
        for row in self.rows.chunks_exact(EMBED_DIM) {
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += f64::from(v);
            }
        }
        if self.n_sentences > 0 {
            let n = self.n_sentences as f64;
            acc.iter_mut().for_each(|a| *a /= n);
        }
        acc
    }
}

pub fn write_embeddings(path: &Path, records: &[EmbeddedTranscript]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode_embeddings(&mut w, records).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn encode_embeddings<W: Write>(w: &mut W, records: &[EmbeddedTranscript]) -> std::io::Result<()> {
    w.write_all(EMBEDDING_MAGIC)?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    let zero_row = [0u8; EMBED_DIM * 4];
    for rec in records {
        for id in [&rec.meeting_id, &rec.member_id] {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
        }
        w.write_all(&(rec.n_sentences as u16).to_le_bytes())?;
        let mut buf = Vec::with_capacity(rec.rows.len() * 4);
        for v in &rec.rows {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        for _ in rec.n_sentences..MAX_SENTENCES {
            w.write_all(&zero_row)?;
        }
    }
    Ok(())
}

pub fn load_embeddings(path: &Path) -> Result<Vec<EmbeddedTranscript>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(BufReader::new(file))
}

pub fn decode_embeddings<R: Read>(mut r: R) -> Result<Vec<EmbeddedTranscript>> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic header").map_err(|_| {
        Error::Format("file too short for the FEMB0001 header".into())
    })?;
    if &magic != EMBEDDING_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected FEMB0001",
            String::from_utf8_lossy(&magic)
        )));
    }
    let count = read_u32(&mut r, "record count")? as usize;
    let mut out = Vec::with_capacity(count.min(4096));
    let mut payload = vec![0u8; MAX_SENTENCES * EMBED_DIM * 4];
    for idx in 0..count {
        let meeting_id = read_string(&mut r, idx, "meeting id")?;
        let member_id = read_string(&mut r, idx, "member id")?;
        let mut n = [0u8; 2];
        read_exact(&mut r, &mut n, "sentence count").map_err(|e| truncated(idx, e))?;
        let n_sentences = u16::from_le_bytes(n) as usize;
        read_exact(&mut r, &mut payload, "matrix").map_err(|e| truncated(idx, e))?;
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "record {idx} ({meeting_id}/{member_id}): non-finite value at row {}, column {}",
                pos / EMBED_DIM,
                pos % EMBED_DIM
            )));
        }
        out.push(EmbeddedTranscript::from_padded(
            meeting_id,
            member_id,
            &values,
            n_sentences,
        )?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|e| Error::Corruption(e.to_string()))? != 0 {
        return Err(Error::Corruption(format!(
            "trailing bytes after the {count} declared records"
        )));
    }
    Ok(out)
}

fn truncated(idx: usize, what: String) -> Error {
    Error::Corruption(format!("record {idx}: truncated while reading {what}"))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> std::result::Result<(), String> {
    r.read_exact(buf).map_err(|_| what.to_string())
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what).map_err(|w| Error::Corruption(format!("truncated {w}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_string<R: Read>(r: &mut R, idx: usize, what: &str) -> Result<String> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what).map_err(|e| truncated(idx, e))?;
    let len = u32::from_le_bytes(b) as usize;
    if len > 1 << 16 {
        return Err(Error::Corruption(format!("record {idx}: {what} length {len} is implausible")));
    }
    let mut s = vec![0u8; len];
    read_exact(r, &mut s, what).map_err(|e| truncated(idx, e))?;
    String::from_utf8(s).map_err(|_| Error::Corruption(format!("record {idx}: {what} is not UTF-8")))
}
