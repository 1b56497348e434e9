//! Output formats: CSV and JSON writers with fixed float formatting, and the
//! SPLM dense-matrix format.
//!
//! SPLM layout: magic `SPLM`, then little-endian `u32` rows, `u32` cols and
//! `u32` flags (bit 0 set for complex), then the entries row-major as
//! little-endian `f64`, complex entries as interleaved `(re, im)` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use topeig_core::{c64, DiscreteMeasure, Matrix};

use crate::error::{AppError, Result};

const MAGIC: &[u8; 4] = b"SPLM";
const FLAG_COMPLEX: u32 = 1;

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvTable {
    writer: csv::Writer<File>,
}

impl CsvTable {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| AppError::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| AppError::io(path, e))?;
    w.flush().map_err(|e| AppError::io(path, e))
}

/// `location,weight`.
pub fn write_measure(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    let mut t = CsvTable::create(path, &["location", "weight"])?;
    for &(x, w) in mu.atoms() {
        t.row([fmt_f64(x), fmt_f64(w)])?;
    }
    t.finish()
}

pub fn write_splm(path: &Path, m: &Matrix) -> Result<()> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let too_big = |n: usize| {
        u32::try_from(n).map_err(|_| AppError::config(format!("dimension {n} exceeds SPLM limits")))
    };
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(16);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&too_big(rows)?.to_le_bytes());
    header.extend_from_slice(&too_big(cols)?.to_le_bytes());
    let flags = if m.is_complex() { FLAG_COMPLEX } else { 0 };
    header.extend_from_slice(&flags.to_le_bytes());
    let io_err = |e| AppError::io(path, e);
    w.write_all(&header).map_err(io_err)?;
    for i in 0..rows {
        for j in 0..cols {
            let z = m.get(i, j);
            w.write_all(&z.re.to_le_bytes()).map_err(io_err)?;
            if m.is_complex() {
                w.write_all(&z.im.to_le_bytes()).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

fn read_header(r: &mut impl Read, path: &Path) -> Result<(usize, usize, bool)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|e| AppError::io(path, e))?;
    if &header[..4] != MAGIC {
        return Err(AppError::config(format!(
            "{} is not an SPLM file",
            path.display()
        )));
    }
    let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().expect("4 bytes"));
    let flags = word(12);
    if flags & !FLAG_COMPLEX != 0 {
        return Err(AppError::config(format!(
            "{}: unknown SPLM flags {flags:#x}",
            path.display()
        )));
    }
    Ok((
        word(4) as usize,
        word(8) as usize,
        flags & FLAG_COMPLEX != 0,
    ))
}

/// `(rows, cols)` from the header alone.
pub fn splm_shape(path: &Path) -> Result<(usize, usize)> {
    let mut f = File::open(path).map_err(|e| AppError::io(path, e))?;
    let (rows, cols, _) = read_header(&mut f, path)?;
    Ok((rows, cols))
}

pub fn read_splm(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut r = BufReader::new(file);
    let (rows, cols, complex) = read_header(&mut r, path)?;
    let per = if complex { 2 } else { 1 };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| AppError::io(path, e))?;
    if bytes.len() != rows * cols * per * 8 {
        return Err(AppError::config(format!(
            "{}: expected {} payload bytes for a {rows}x{cols} matrix, found {}",
            path.display(),
            rows * cols * per * 8,
            bytes.len()
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(if complex {
        Matrix::Complex(faer_from_fn(rows, cols, |i, j| {
            let k = 2 * (i * cols + j);
            c64::new(vals[k], vals[k + 1])
        }))
    } else {
        Matrix::Real(faer_from_fn(rows, cols, |i, j| vals[i * cols + j]))
    })
}

fn faer_from_fn<T>(
    rows: usize,
    cols: usize,
    f: impl FnMut(usize, usize) -> T,
) -> topeig_core::faer::Mat<T> {
    topeig_core::faer::Mat::from_fn(rows, cols, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        for x in [std::f64::consts::PI, -1e-300, 123456.789, f64::MAX] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn splm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.splm");
        let real = Matrix::Real(faer_from_fn(2, 3, |i, j| (i * 3 + j) as f64 + 0.5));
        write_splm(&path, &real).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16 + 6 * 8);
        assert_eq!(&bytes[..4], b"SPLM");
        // row-major: second value is entry (0, 1)
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 1.5);
        assert_eq!(read_splm(&path).unwrap(), real);
        assert_eq!(splm_shape(&path).unwrap(), (2, 3));

        let cplx = Matrix::Complex(faer_from_fn(2, 2, |i, j| c64::new(i as f64, -(j as f64))));
        write_splm(&path, &cplx).unwrap();
        assert_eq!(read_splm(&path).unwrap(), cplx);
    }

    #[test]
    fn splm_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.splm");
        std::fs::write(&path, b"NOPE000000000000").unwrap();
        assert!(read_splm(&path).is_err());
        let mut ok = b"SPLM".to_vec();
        ok.extend_from_slice(&1u32.to_le_bytes());
        ok.extend_from_slice(&1u32.to_le_bytes());
        ok.extend_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, &ok).unwrap();
        assert!(read_splm(&path).is_err());
    }
}
