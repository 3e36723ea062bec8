//! `FWTS0001` weight files: a named-tensor directory.
//!
//! Little-endian. Magic, `u32` tensor count, then per tensor a `u32` name
//! length, the UTF-8 name, a `u8` rank, `rank` dims as `u32` and the `f32`
//! payload in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::ParamSet;
use super::tape::Matrix;
use crate::error::{Error, Result};

pub const WEIGHTS_MAGIC: &[u8; 8] = b"FWTS0001";

pub fn encode_weights<W: Write>(w: &mut W, params: &ParamSet) -> std::io::Result<()> {
    w.write_all(WEIGHTS_MAGIC)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, m) in params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[2u8])?;
        w.write_all(&(m.nrows() as u32).to_le_bytes())?;
        w.write_all(&(m.ncols() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(m.len() * 4);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                buf.extend_from_slice(&(m[(i, j)] as f32).to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn save_weights(path: &Path, params: &ParamSet) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode_weights(&mut w, params).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn decode_weights<R: Read>(mut r: R) -> Result<ParamSet> {
    let corrupt = |what: &str| Error::Corruption(format!("weights file truncated in {what}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::Format("missing FWTS0001 header".into()))?;
    if &magic != WEIGHTS_MAGIC {
        return Err(Error::Format("bad magic, expected FWTS0001".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf).map_err(|_| corrupt("count"))?;
    let count = u32::from_le_bytes(u32buf);
    let mut params = ParamSet::new();
    for _ in 0..count {
        r.read_exact(&mut u32buf).map_err(|_| corrupt("name length"))?;
        let mut name = vec![0u8; u32::from_le_bytes(u32buf) as usize];
        r.read_exact(&mut name).map_err(|_| corrupt("name"))?;
        let name = String::from_utf8(name).map_err(|_| Error::Corruption("tensor name is not UTF-8".into()))?;
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank).map_err(|_| corrupt("rank"))?;
        let mut dims = Vec::new();
        for _ in 0..rank[0] {
            r.read_exact(&mut u32buf).map_err(|_| corrupt("dims"))?;
            dims.push(u32::from_le_bytes(u32buf) as usize);
        }
        let (rows, cols) = match dims.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            other => {
                return Err(Error::Format(format!("{name}: unsupported rank {}", other.len())));
            }
        };
        let mut payload = vec![0u8; rows * cols * 4];
        r.read_exact(&mut payload).map_err(|_| corrupt(&name))?;
        let values: Vec<f64> = payload
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{name}: non-finite weight")));
        }
        params.insert(name, Matrix::from_row_slice(rows, cols, &values))?;
    }
    Ok(params)
}

pub fn load_weights(path: &Path) -> Result<ParamSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_weights(BufReader::new(file))
}
