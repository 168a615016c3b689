use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{check_len, Error, Result};

/// Magic bytes of the binary sinogram format, padded to 8 bytes.
const MAGIC: &[u8; 8] = b"SGRAM\0\0\0";

/// `K × detectors` matrix of line integrals, one row per angle.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    num_angles: usize,
    detector_count: usize,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn new(num_angles: usize, detector_count: usize, data: Vec<f64>) -> Result<Self> {
        if num_angles == 0 || detector_count == 0 {
            return Err(Error::Empty("Sinogram"));
        }
        check_len("sinogram data", num_angles * detector_count, data.len())?;
        Ok(Self {
            num_angles,
            detector_count,
            data,
        })
    }

    pub fn num_angles(&self) -> usize {
        self.num_angles
    }

    pub fn detector_count(&self) -> usize {
        self.detector_count
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, angle: usize) -> &[f64] {
        let d = self.detector_count;
        &self.data[angle * d..(angle + 1) * d]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for k in 0..self.num_angles {
            let line: Vec<String> = self.row(k).iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|_| Error::NotFound(path.to_path_buf()))?;
        let mut data = Vec::new();
        let mut width = None;
        let mut rows = 0;
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })?;
            match width {
                None => width = Some(values.len()),
                Some(w) if w != values.len() => {
                    return Err(Error::Format {
                        path: path.to_path_buf(),
                        reason: format!("row {rows} has {} values, expected {w}", values.len()),
                    })
                }
                _ => {}
            }
            data.extend(values);
            rows += 1;
        }
        Self::new(rows, width.unwrap_or(0), data)
    }

    /// Little-endian binary: 8-byte magic, `u32` angle count, `u32` detector
    /// count, then `f64` samples row by row.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.to_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .map_err(|_| Error::NotFound(path.to_path_buf()))?
            .read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes).map_err(|reason| Error::Format {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.num_angles as u32).to_le_bytes());
        out.extend_from_slice(&(self.detector_count as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err("missing SGRAM header".into());
        }
        let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if body.len() != 8 * k * d {
            return Err(format!(
                "expected {} payload bytes for {k}x{d}, found {}",
                8 * k * d,
                body.len()
            ));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(k, d, data).map_err(|e| e.to_string())
    }
}
