use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

const BINARY_MAGIC: &[u8; 4] = b"FTRX";

/// Row-major `num_frames x dim` matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub num_frames: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(num_frames: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::data("feature dimension must be at least 1"));
        }
        if data.len() != num_frames * dim {
            return Err(Error::data(format!(
                "feature data has {} values, expected {num_frames} x {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("feature matrix contains non-finite values"));
        }
        Ok(Self {
            num_frames,
            dim,
            data,
        })
    }

    pub fn zeros(num_frames: usize, dim: usize) -> Self {
        Self {
            num_frames,
            dim,
            data: vec![0.0; num_frames * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::data("ragged feature rows"));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub fn get(&self, t: usize, d: usize) -> f64 {
        self.data[t * self.dim + d]
    }

    pub fn set(&mut self, t: usize, d: usize, v: f64) {
        self.data[t * self.dim + d] = v;
    }

    /// Text layout: `"T D"`, then `T` lines of `D` values with 17
    /// significant digits.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.num_frames, self.dim)?;
        for row in self.rows().take(self.num_frames) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::data("feature file is empty"))??;
        let mut fields = header.split_whitespace();
        let (t, d) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(d), None) => (parse_count(t)?, parse_count(d)?),
            _ => return Err(Error::data(format!("bad feature header {header:?}"))),
        };
        let mut data = Vec::with_capacity(t.saturating_mul(d).min(1 << 24));
        for i in 0..t {
            let line = lines
                .next()
                .ok_or_else(|| Error::data(format!("feature file ends before row {}", i + 1)))??;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::data(format!("bad number {tok:?} in row {}", i + 1)))?,
                );
            }
            if data.len() - before != d {
                return Err(Error::data(format!(
                    "row {} has {} values, expected {d}",
                    i + 1,
                    data.len() - before
                )));
            }
        }
        for rest in lines {
            if !rest?.trim().is_empty() {
                return Err(Error::data("trailing content after the last feature row"));
            }
        }
        Self::new(t, d, data)
    }

    /// Binary layout: `"FTRX"`, `u32` T, `u32` D (little-endian), then
    /// `T * D` little-endian `f64` values row-major.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let t = u32::try_from(self.num_frames).map_err(|_| Error::data("too many frames"))?;
        let d = u32::try_from(self.dim).map_err(|_| Error::data("dimension too large"))?;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&t.to_le_bytes())?;
        out.write_all(&d.to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() < 12 || &bytes[..4] != BINARY_MAGIC {
            return Err(Error::data("missing FTRX magic"));
        }
        let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[12..];
        if Some(body.len()) != t.checked_mul(d).and_then(|n| n.checked_mul(8)) {
            return Err(Error::data(format!(
                "binary feature body has {} bytes, expected {t} x {d} doubles",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(t, d, data)
    }

    /// Reads either layout, detected by the magic bytes.
    pub fn read_any(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(BINARY_MAGIC) {
            Self::read_binary(bytes)
        } else {
            Self::read_text(bytes)
        }
    }
}

fn parse_count(tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::data(format!("bad count {tok:?} in feature header")))
}
