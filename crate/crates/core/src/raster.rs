//! Square grayscale images stored row-major.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Image {
    size: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(size: usize, pixels: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(Error::Empty("Image"));
        }
        check_len("Image pixels", size * size, pixels.len())?;
        Ok(Self { size, pixels })
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            pixels: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.size + col] = value;
    }

    /// Left-right mirror image.
    pub fn mirrored(&self) -> Self {
        let n = self.size;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, self.get(r, n - 1 - c));
            }
        }
        out
    }

    /// Zeroes every pixel outside `mask` (same size, nonzero = keep).
    pub fn apply_mask(&mut self, mask: &Image) {
        assert_eq!(self.size, mask.size);
        for (p, m) in self.pixels.iter_mut().zip(&mask.pixels) {
            if *m == 0.0 {
                *p = 0.0;
            }
        }
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    /// Writes an 8-bit binary PGM after clipping to `[0, 1]`.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write!(w, "P5\n{} {}\n255\n", self.size, self.size)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        w.write_all(&bytes)?;
        w.flush()?;
        Ok(())
    }

    /// One image row per CSV line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for row in self.pixels.chunks_exact(self.size) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}
