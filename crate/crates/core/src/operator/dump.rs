//! Binary archive of dense operators.
//!
//! Layout: 4-byte magic `HFCT`, `u16` format version, `u16` resolution `N`,
//! 8 zero bytes of padding (16 bytes in all), then the `2^N × 2^N` atom-basis
//! matrix as row-major little-endian `f64`.

use std::io::{Read, Write};

use super::{LinearOperator, OperatorForm, DENSE_CAP};
use crate::error::{HaarError, Result};

pub const DUMP_MAGIC: [u8; 4] = *b"HFCT";
pub const DUMP_VERSION: u16 = 1;
pub const DUMP_HEADER_LEN: usize = 16;

/// Writes the dense matrix of `op`, materializing composite forms first.
pub fn write_dense(op: &LinearOperator, mut out: impl Write) -> Result<()> {
    let dense = match op.form() {
        OperatorForm::Dense(_) => op.clone(),
        _ => op.materialize()?,
    };
    let OperatorForm::Dense(m) = dense.form() else { unreachable!("materialize returns a dense form") };
    let mut header = [0u8; DUMP_HEADER_LEN];
    header[..4].copy_from_slice(&DUMP_MAGIC);
    header[4..6].copy_from_slice(&DUMP_VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&(op.resolution() as u16).to_le_bytes());
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(m.dim() * 8);
    for row in m.row_major().chunks(m.dim()) {
        buf.clear();
        row.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dense(mut input: impl Read) -> Result<LinearOperator> {
    let bad = |reason: &str| HaarError::Parse { what: "operator dump".into(), reason: reason.into() };
    let mut header = [0u8; DUMP_HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[..4] != DUMP_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != DUMP_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u16::from_le_bytes([header[6], header[7]]) as u32;
    if n > DENSE_CAP {
        return Err(HaarError::DenseTooLarge { resolution: n, cap: DENSE_CAP });
    }
    let dim = 1usize << n;
    let mut bytes = vec![0u8; dim * dim * 8];
    input.read_exact(&mut bytes)?;
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    LinearOperator::dense(n, data)
}
