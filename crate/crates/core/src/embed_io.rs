//! Dense embedding matrices and the SDEM file format.
//!
//! SDEM layout (all integers little-endian):
//!
//! | offset | size        | content                         |
//! |--------|-------------|---------------------------------|
//! | 0      | 4           | magic `SDEM`                    |
//! | 4      | 1           | version `0x01`                  |
//! | 5      | 4           | rows, `u32`                     |
//! | 9      | 4           | cols, `u32`                     |
//! | 13     | 4·rows·cols | IEEE-754 binary32, row-major    |
//!
//! Values are held as `f64` in memory and stored as `f32` on disk, so a
//! matrix read from an SDEM file always survives a write/read cycle bit for
//! bit. Files ending in `.csv` are read and written as plain comma separated
//! reals, one row per line.

use std::path::Path;

use nalgebra::DMatrix;

use crate::{util, Error, Result};

pub const SDEM_MAGIC: &[u8; 4] = b"SDEM";
pub const SDEM_VERSION: u8 = 0x01;
pub const SDEM_HEADER_LEN: usize = 13;

/// Row-major dense matrix, one row per document. Every entry is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::shape(format!(
                "row {i} has {} values, expected {cols}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend(m.row(i).iter());
        }
        Self::new(rows, cols, data)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: indices.len(), cols: self.cols, data }
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::shape(format!(
                "cannot stack {} columns onto {}",
                other.cols, self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Encode as SDEM bytes. Fails on values that do not fit in binary32.
    pub fn to_sdem_bytes(&self) -> Result<Vec<u8>> {
        let rows = u32::try_from(self.rows)
            .map_err(|_| Error::invalid("row count does not fit in u32"))?;
        let cols = u32::try_from(self.cols)
            .map_err(|_| Error::invalid("column count does not fit in u32"))?;
        let mut out = Vec::with_capacity(SDEM_HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(SDEM_MAGIC);
        out.push(SDEM_VERSION);
        out.extend_from_slice(&rows.to_le_bytes());
        out.extend_from_slice(&cols.to_le_bytes());
        for (pos, &v) in self.data.iter().enumerate() {
            let narrow = v as f32;
            if !narrow.is_finite() {
                return Err(Error::NonFinite { row: pos / self.cols, col: pos % self.cols });
            }
            out.extend_from_slice(&narrow.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_sdem_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != SDEM_MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < SDEM_HEADER_LEN {
            return Err(Error::Truncated { expected: SDEM_HEADER_LEN, actual: bytes.len() });
        }
        if bytes[4] != SDEM_VERSION {
            return Err(Error::BadVersion(bytes[4]));
        }
        let rows = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(SDEM_HEADER_LEN))
            .ok_or_else(|| Error::invalid("SDEM dimensions overflow"))?;
        if bytes.len() != expected {
            return Err(Error::Truncated { expected, actual: bytes.len() });
        }
        let data = bytes[SDEM_HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Self::new(rows, cols, data)
    }

    /// Parse comma separated reals, one row per line. A first line that does
    /// not parse as numbers is treated as a header and skipped.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => {
                    if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                        return Err(Error::NonFinite { row: rows.len(), col: j });
                    }
                    rows.push(row);
                }
                Err(_) if rows.is_empty() && lineno == 0 => continue,
                Err(e) => {
                    return Err(Error::Parse { line: lineno + 1, message: e.to_string() })
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Self::from_rows(&rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.row_iter() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Write `m` to `path`; SDEM unless the extension is `.csv`. Nothing is
/// written when the matrix cannot be encoded.
pub fn write_embeddings(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let bytes = if is_csv(path) { m.to_csv_string().into_bytes() } else { m.to_sdem_bytes()? };
    util::write_atomic(path, &bytes)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path)?;
    if is_csv(path) {
        let text = String::from_utf8(bytes)
            .map_err(|e| Error::invalid(format!("{}: not UTF-8: {e}", path.display())))?;
        EmbeddingMatrix::from_csv_str(&text)
    } else {
        EmbeddingMatrix::from_sdem_bytes(&bytes)
    }
}
