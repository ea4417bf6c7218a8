//! Binary operator container.
//!
//! ```text
//! b"AWKO"            magic
//! u32                format version (1)
//! u8                 hermitian flag
//! u64                dimension n
//! u64 + bytes        basis descriptor (JSON)
//! u64 + bytes        twist, strict upper triangle of theta (JSON)
//! n*n * (f64, f64)   entries, row-major, (re, im)
//! ```
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Basis, KernelOperator};
use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};
use crate::magnetics::MagneticCocycle;

const MAGIC: &[u8; 4] = b"AWKO";
const VERSION: u32 = 1;

fn bad(message: impl Into<String>) -> Error {
    Error::Parse { line: 0, message: message.into() }
}

fn json_error(e: serde_json::Error) -> Error {
    bad(e.to_string())
}

pub fn write_operator(mut w: impl Write, op: &KernelOperator) -> Result<()> {
    let n = op.len();
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u8(op.hermitian as u8)?;
    w.write_u64::<LittleEndian>(n as u64)?;
    let basis = serde_json::to_vec(&op.basis).map_err(json_error)?;
    w.write_u64::<LittleEndian>(basis.len() as u64)?;
    w.write_all(&basis)?;
    let twist = serde_json::to_vec(&(op.twist.dim(), op.twist.upper())).map_err(json_error)?;
    w.write_u64::<LittleEndian>(twist.len() as u64)?;
    w.write_all(&twist)?;
    for i in 0..n {
        for j in 0..n {
            let v = op.matrix[(i, j)];
            w.write_f64::<LittleEndian>(v.re)?;
            w.write_f64::<LittleEndian>(v.im)?;
        }
    }
    Ok(())
}

pub fn read_operator(mut r: impl Read) -> Result<KernelOperator> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not an operator file"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(bad(format!("unsupported operator format version {version}")));
    }
    let hermitian = r.read_u8()? != 0;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let read_block = |r: &mut dyn Read| -> Result<Vec<u8>> {
        let len = r.read_u64::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        Ok(buf)
    };
    let basis: Basis = serde_json::from_slice(&read_block(&mut r)?).map_err(json_error)?;
    let (dim, upper): (usize, Vec<f64>) = serde_json::from_slice(&read_block(&mut r)?).map_err(json_error)?;
    let twist = MagneticCocycle::from_upper(dim, &upper)?;
    if basis.len() != n {
        return Err(Error::BasisMismatch);
    }
    let mut matrix = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            matrix[(i, j)] = c64::new(re, im);
        }
    }
    Ok(KernelOperator { matrix, basis, hermitian, twist })
}

pub fn save(path: &std::path::Path, op: &KernelOperator) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_operator(&mut w, op)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<KernelOperator> {
    read_operator(std::io::BufReader::new(std::fs::File::open(path)?))
}
