//! Model file format: magic bytes `EFGP\x01`, a little-endian u32 length,
//! a JSON header, the weight vector as interleaved re/im doubles, and the
//! Toeplitz lattice vector (so posterior variance works on a loaded model).
//! Doubles are stored bit-exactly, so load-then-predict reproduces
//! fit-then-predict to the last bit.

use crate::error::{EfgpError, Result};
use crate::grid::FourierGrid;
use crate::kernel::Kernel;
use crate::model::{BoxMap, EfgpModel, FitStats};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 5] = b"EFGP\x01";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kernel: String,
    d: usize,
    h: f64,
    m: usize,
    sigma: f64,
    nufft_tol: f64,
    /// Affine map from raw data coordinates into the unit box.
    box_map: BoxMap,
    stats: FitStats,
    n_beta: usize,
    n_lattice: usize,
}

fn write_complex(buf: &mut Vec<u8>, values: &[Complex64]) {
    for z in values {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
}

fn read_complex(bytes: &[u8], count: usize) -> Result<(Vec<Complex64>, &[u8])> {
    let need = count * 16;
    if bytes.len() < need {
        return Err(EfgpError::ModelFormat(format!(
            "truncated array: need {need} bytes, have {}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for chunk in bytes[..need].chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        out.push(Complex64::new(re, im));
    }
    Ok((out, &bytes[need..]))
}

/// Serializes a model (plus the affine map used to rescale the raw data)
/// to bytes.
pub fn to_bytes(model: &EfgpModel, box_map: &BoxMap) -> Result<Vec<u8>> {
    let lattice = model
        .toeplitz_lattice()
        .ok_or_else(|| EfgpError::ModelFormat("model lacks a retained lattice vector".into()))?;
    let header = Header {
        format_version: 1,
        kernel: model.kernel().spec_string(),
        d: model.grid().dim(),
        h: model.grid().h(),
        m: model.grid().m(),
        sigma: model.sigma(),
        nufft_tol: model.nufft_tol(),
        box_map: box_map.clone(),
        stats: model.stats().clone(),
        n_beta: model.beta().len(),
        n_lattice: lattice.len(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| EfgpError::ModelFormat(format!("header encode: {e}")))?;
    let mut buf = Vec::with_capacity(
        MAGIC.len() + 4 + header_json.len() + 16 * (header.n_beta + header.n_lattice),
    );
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    write_complex(&mut buf, model.beta());
    write_complex(&mut buf, lattice);
    Ok(buf)
}

/// Deserializes a model and the affine map it was fitted under.
pub fn from_bytes(bytes: &[u8]) -> Result<(EfgpModel, BoxMap)> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(EfgpError::ModelFormat("bad magic bytes".into()));
    }
    let rest = &bytes[MAGIC.len()..];
    let header_len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
    let rest = &rest[4..];
    if rest.len() < header_len {
        return Err(EfgpError::ModelFormat("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&rest[..header_len])
        .map_err(|e| EfgpError::ModelFormat(format!("header decode: {e}")))?;
    if header.format_version != 1 {
        return Err(EfgpError::ModelFormat(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let rest = &rest[header_len..];
    let (beta, rest) = read_complex(rest, header.n_beta)?;
    let (lattice, _) = read_complex(rest, header.n_lattice)?;
    let kernel = Kernel::parse(&header.kernel)?;
    let grid = FourierGrid::new(header.h, header.m, header.d)?;
    let model = EfgpModel::from_parts(
        kernel,
        grid,
        header.sigma,
        header.nufft_tol,
        beta,
        header.stats,
        lattice,
    )?;
    Ok((model, header.box_map))
}

pub fn save(model: &EfgpModel, box_map: &BoxMap, path: &Path) -> Result<()> {
    let bytes = to_bytes(model, box_map)?;
    // atomic write: temp file in the same directory, then rename
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile_in(dir)?;
    tmp.1.write_all(&bytes)?;
    tmp.1.sync_all()?;
    drop(tmp.1);
    std::fs::rename(&tmp.0, path)?;
    Ok(())
}

fn tempfile_in(dir: &Path) -> Result<(std::path::PathBuf, std::fs::File)> {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nonce = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let path = dir.join(format!(".efgp-model-{}-{nonce}.tmp", std::process::id()));
    let file = std::fs::File::create(&path)?;
    Ok((path, file))
}

pub fn load(path: &Path) -> Result<(EfgpModel, BoxMap)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
