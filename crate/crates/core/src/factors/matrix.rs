use std::io::{Read, Write};

use chrono::DateTime;

use crate::types::{format_timestamp, Timestamp};

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("corrupt factor cache: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Dense T x C feature table for one asset with per-cell validity. Invalid
/// cells always hold 0.0.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    symbol: String,
    calendar: Vec<Timestamp>,
    columns: Vec<String>,
    values: Vec<f64>,
    valid: Vec<bool>,
}

const MAGIC: &[u8; 4] = b"TLFM";
const VERSION: u32 = 1;

impl FactorMatrix {
    /// `values` and `valid` are row-major. Values of invalid cells are reset
    /// to 0.
    pub fn new(
        symbol: String,
        calendar: Vec<Timestamp>,
        columns: Vec<String>,
        mut values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, MatrixError> {
        let cells = calendar.len() * columns.len();
        if values.len() != cells || valid.len() != cells {
            return Err(MatrixError::Shape(format!(
                "{} rows x {} columns needs {cells} cells, got {} values / {} flags",
                calendar.len(),
                columns.len(),
                values.len(),
                valid.len()
            )));
        }
        for (v, ok) in values.iter_mut().zip(&valid) {
            if !ok {
                *v = 0.0;
            }
        }
        Ok(FactorMatrix { symbol, calendar, columns, values, valid })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn calendar(&self) -> &[Timestamp] {
        &self.calendar
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn value(&self, t: usize, c: usize) -> f64 {
        self.values[t * self.columns.len() + c]
    }

    pub fn is_valid(&self, t: usize, c: usize) -> bool {
        self.valid[t * self.columns.len() + c]
    }

    pub fn get(&self, t: usize, c: usize) -> Option<f64> {
        self.is_valid(t, c).then(|| self.value(t, c))
    }

    pub(crate) fn set(&mut self, t: usize, c: usize, v: f64) {
        let n = self.columns.len();
        self.values[t * n + c] = v;
    }

    #[cfg(test)]
    pub(crate) fn invalidate(&mut self, t: usize, c: usize) {
        let n = self.columns.len();
        self.values[t * n + c] = 0.0;
        self.valid[t * n + c] = false;
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column by name, `None` entries for invalid cells.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let c = self.column_index(name)?;
        Some((0..self.n_rows()).map(|t| self.get(t, c)).collect())
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.columns.len();
        &self.values[t * n..(t + 1) * n]
    }

    /// CSV with a `timestamp` column followed by the canonical column order.
    /// Invalid cells are written as empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["timestamp".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for t in 0..self.n_rows() {
            let mut rec = Vec::with_capacity(self.n_cols() + 1);
            rec.push(format_timestamp(&self.calendar[t]));
            for c in 0..self.n_cols() {
                rec.push(self.get(t, c).map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columnar little-endian binary layout: header, names, calendar, then
    /// each column's values followed by its validity bytes.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<(), MatrixError> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        write_str(&mut out, &self.symbol)?;
        out.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        out.write_all(&(self.n_cols() as u64).to_le_bytes())?;
        for name in &self.columns {
            write_str(&mut out, name)?;
        }
        for ts in &self.calendar {
            let utc = ts.and_utc();
            out.write_all(&utc.timestamp().to_le_bytes())?;
            out.write_all(&utc.timestamp_subsec_nanos().to_le_bytes())?;
        }
        for c in 0..self.n_cols() {
            for t in 0..self.n_rows() {
                out.write_all(&self.value(t, c).to_bits().to_le_bytes())?;
            }
            let flags: Vec<u8> = (0..self.n_rows()).map(|t| self.is_valid(t, c) as u8).collect();
            out.write_all(&flags)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self, MatrixError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(MatrixError::Corrupt("bad magic".into()));
        }
        if read_u32(&mut input)? != VERSION {
            return Err(MatrixError::Corrupt("unsupported version".into()));
        }
        let symbol = read_str(&mut input)?;
        let rows = read_u64(&mut input)? as usize;
        let cols = read_u64(&mut input)? as usize;
        let columns = (0..cols).map(|_| read_str(&mut input)).collect::<Result<Vec<_>, _>>()?;
        let mut calendar = Vec::with_capacity(rows);
        for _ in 0..rows {
            let secs = read_u64(&mut input)? as i64;
            let nanos = read_u32(&mut input)?;
            let ts = DateTime::from_timestamp(secs, nanos)
                .ok_or_else(|| MatrixError::Corrupt("timestamp out of range".into()))?;
            calendar.push(ts.naive_utc());
        }
        let mut values = vec![0.0; rows * cols];
        let mut valid = vec![false; rows * cols];
        for c in 0..cols {
            for t in 0..rows {
                values[t * cols + c] = f64::from_bits(read_u64(&mut input)?);
            }
            let mut flags = vec![0u8; rows];
            input.read_exact(&mut flags)?;
            for t in 0..rows {
                valid[t * cols + c] = flags[t] == 1;
            }
        }
        FactorMatrix::new(symbol, calendar, columns, values, valid)
    }
}

fn write_str<W: Write>(out: &mut W, s: &str) -> std::io::Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())
}

fn read_u32<R: Read>(input: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(input: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_str<R: Read>(input: &mut R) -> Result<String, MatrixError> {
    let len = read_u32(input)? as usize;
    if len > 1 << 20 {
        return Err(MatrixError::Corrupt("string too long".into()));
    }
    let mut buf = vec![0u8; len];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| MatrixError::Corrupt("non-utf8 string".into()))
}
