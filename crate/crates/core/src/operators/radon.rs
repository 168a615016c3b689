//! Discrete parallel-beam Radon transform.
//!
//! Rays are sampled at unit steps inside the circular field of view and each
//! sample reads the image by bilinear interpolation. The adjoint is the exact
//! transpose of those weights. Pixel `(row, col)` sits at `x = col - c`,
//! `y = c - row` with `c = (size - 1) / 2`; detector `d` sits at offset
//! `s = d - (detectors - 1) / 2` along `(cos θ, sin θ)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{LinearOperator, Sinogram};
use crate::error::{check_len, Error, Result};
use crate::raster::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CtGeometry {
    pub image_size: usize,
    pub detector_count: usize,
    pub num_angles: usize,
}

impl CtGeometry {
    /// Detector count defaults to the image width.
    pub fn new(image_size: usize, num_angles: usize) -> Result<Self> {
        Self::with_detectors(image_size, image_size, num_angles)
    }

    pub fn with_detectors(image_size: usize, detector_count: usize, num_angles: usize) -> Result<Self> {
        if image_size == 0 || detector_count == 0 || num_angles == 0 {
            return Err(Error::InvalidArgument(
                "CT geometry needs positive image size, detector count and angle count".into(),
            ));
        }
        Ok(Self {
            image_size,
            detector_count,
            num_angles,
        })
    }

    /// `kπ/K` for `k = 0..K`.
    pub fn angles(&self) -> Vec<f64> {
        (0..self.num_angles)
            .map(|k| k as f64 * PI / self.num_angles as f64)
            .collect()
    }

    pub fn pixel_count(&self) -> usize {
        self.image_size * self.image_size
    }

    pub fn ray_count(&self) -> usize {
        self.num_angles * self.detector_count
    }
}

struct RayTracer {
    size: usize,
    center: f64,
    det_center: f64,
    radius2: f64,
    trig: Vec<(f64, f64)>,
    detectors: usize,
}

impl RayTracer {
    fn new(geom: &CtGeometry) -> Self {
        let size = geom.image_size;
        let half = size as f64 / 2.0;
        Self {
            size,
            center: (size as f64 - 1.0) / 2.0,
            det_center: (geom.detector_count as f64 - 1.0) / 2.0,
            radius2: half * half,
            trig: geom.angles().iter().map(|a| (a.cos(), a.sin())).collect(),
            detectors: geom.detector_count,
        }
    }

    /// Calls `f(pixel, weight)` for every bilinear tap of ray `ray`
    /// (`ray = angle * detectors + detector`). Taps may repeat a pixel.
    fn trace(&self, ray: usize, mut f: impl FnMut(usize, f64)) {
        let (cos, sin) = self.trig[ray / self.detectors];
        let s = (ray % self.detectors) as f64 - self.det_center;
        if s * s > self.radius2 {
            return;
        }
        let n = self.size;
        for j in 0..n {
            let t = j as f64 - self.center;
            let x = s * cos - t * sin;
            let y = s * sin + t * cos;
            if x * x + y * y > self.radius2 {
                continue;
            }
            let col = x + self.center;
            let row = self.center - y;
            let c0 = col.floor();
            let r0 = row.floor();
            let fx = col - c0;
            let fy = row - r0;
            let (c0, r0) = (c0 as isize, r0 as isize);
            let taps = [
                (0, 0, (1.0 - fx) * (1.0 - fy)),
                (0, 1, fx * (1.0 - fy)),
                (1, 0, (1.0 - fx) * fy),
                (1, 1, fx * fy),
            ];
            for (dr, dc, w) in taps {
                let (r, c) = (r0 + dr, c0 + dc);
                if w != 0.0 && r >= 0 && c >= 0 && (r as usize) < n && (c as usize) < n {
                    f(r as usize * n + c as usize, w);
                }
            }
        }
    }

    /// Taps of one ray merged per pixel, sorted by pixel index.
    fn merged_row(&self, ray: usize) -> Vec<(u32, f64)> {
        let mut taps = Vec::with_capacity(4 * self.size);
        self.trace(ray, |p, w| taps.push((p as u32, w)));
        taps.sort_by_key(|&(p, _)| p);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(taps.len());
        for (p, w) in taps {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += w,
                _ => merged.push((p, w)),
            }
        }
        merged
    }
}

fn check_image(image: &Image, geom: &CtGeometry) -> Result<()> {
    check_len("radon image size", geom.image_size, image.size())
}

/// Line integrals of `image` along every ray of `geom` (matrix-free).
pub fn radon_forward(image: &Image, geom: &CtGeometry) -> Result<Sinogram> {
    check_image(image, geom)?;
    let tracer = RayTracer::new(geom);
    let px = image.pixels();
    let data: Vec<f64> = (0..geom.ray_count())
        .into_par_iter()
        .map(|ray| {
            let mut acc = 0.0;
            tracer.trace(ray, |p, w| acc += w * px[p]);
            acc
        })
        .collect();
    Sinogram::new(geom.num_angles, geom.detector_count, data)
}

/// Unfiltered backprojection: the exact transpose of [`radon_forward`].
pub fn radon_adjoint(sino: &Sinogram, geom: &CtGeometry) -> Result<Image> {
    check_sinogram(sino, geom)?;
    let tracer = RayTracer::new(geom);
    let mut out = Image::zeros(geom.image_size);
    let px = out.pixels_mut();
    for (ray, &v) in sino.data().iter().enumerate() {
        if v != 0.0 {
            tracer.trace(ray, |p, w| px[p] += w * v);
        }
    }
    Ok(out)
}

fn check_sinogram(sino: &Sinogram, geom: &CtGeometry) -> Result<()> {
    check_len("sinogram angles", geom.num_angles, sino.num_angles())?;
    check_len("sinogram detectors", geom.detector_count, sino.detector_count())
}

// Compressed rows: `ptr[r]..ptr[r + 1]` index into `idx`/`val`.
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl Csr {
    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(r, o)| {
            let (a, b) = (self.ptr[r], self.ptr[r + 1]);
            *o = self.idx[a..b]
                .iter()
                .zip(&self.val[a..b])
                .map(|(&i, &v)| v * x[i as usize])
                .sum();
        });
    }

    fn transpose(&self, cols: usize) -> Csr {
        let mut counts = vec![0usize; cols + 1];
        for &i in &self.idx {
            counts[i as usize + 1] += 1;
        }
        for c in 0..cols {
            counts[c + 1] += counts[c];
        }
        let ptr = counts.clone();
        let mut fill = counts;
        let mut idx = vec![0u32; self.idx.len()];
        let mut val = vec![0.0; self.val.len()];
        for r in 0..self.ptr.len() - 1 {
            for k in self.ptr[r]..self.ptr[r + 1] {
                let c = self.idx[k] as usize;
                idx[fill[c]] = r as u32;
                val[fill[c]] = self.val[k];
                fill[c] += 1;
            }
        }
        Csr { ptr, idx, val }
    }
}

enum Backend {
    Matrix { rows: Csr, cols: Csr },
    MatrixFree(RayTracer),
}

/// Radon transform as a [`LinearOperator`] on flattened images.
///
/// Small geometries cache the projection matrix and its transpose; larger
/// ones fall back to tracing rays on every application.
pub struct RadonOperator {
    geom: CtGeometry,
    backend: Backend,
}

/// Above this many estimated nonzeros the operator traces rays on the fly.
const MATRIX_NNZ_BUDGET: usize = 40_000_000;

impl RadonOperator {
    pub fn new(geom: CtGeometry) -> Self {
        let estimate = geom.ray_count() * geom.image_size * 3;
        if estimate > MATRIX_NNZ_BUDGET {
            Self::matrix_free(geom)
        } else {
            Self::with_matrix(geom)
        }
    }

    pub fn with_matrix(geom: CtGeometry) -> Self {
        let tracer = RayTracer::new(&geom);
        let rows_data: Vec<Vec<(u32, f64)>> = (0..geom.ray_count())
            .into_par_iter()
            .map(|ray| tracer.merged_row(ray))
            .collect();
        let nnz = rows_data.iter().map(Vec::len).sum();
        let mut ptr = Vec::with_capacity(rows_data.len() + 1);
        let mut idx = Vec::with_capacity(nnz);
        let mut val = Vec::with_capacity(nnz);
        ptr.push(0);
        for row in rows_data {
            for (p, w) in row {
                idx.push(p);
                val.push(w);
            }
            ptr.push(idx.len());
        }
        let rows = Csr { ptr, idx, val };
        let cols = rows.transpose(geom.pixel_count());
        Self {
            geom,
            backend: Backend::Matrix { rows, cols },
        }
    }

    pub fn matrix_free(geom: CtGeometry) -> Self {
        let tracer = RayTracer::new(&geom);
        Self {
            geom,
            backend: Backend::MatrixFree(tracer),
        }
    }

    pub fn geometry(&self) -> &CtGeometry {
        &self.geom
    }

    pub fn is_matrix_backed(&self) -> bool {
        matches!(self.backend, Backend::Matrix { .. })
    }
}

impl LinearOperator for RadonOperator {
    fn input_dim(&self) -> usize {
        self.geom.pixel_count()
    }

    fn output_dim(&self) -> usize {
        self.geom.ray_count()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.input_dim());
        assert_eq!(out.len(), self.output_dim());
        match &self.backend {
            Backend::Matrix { rows, .. } => rows.matvec(x, out),
            Backend::MatrixFree(tracer) => out.par_iter_mut().enumerate().for_each(|(ray, o)| {
                let mut acc = 0.0;
                tracer.trace(ray, |p, w| acc += w * x[p]);
                *o = acc;
            }),
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.output_dim());
        assert_eq!(out.len(), self.input_dim());
        match &self.backend {
            Backend::Matrix { cols, .. } => cols.matvec(y, out),
            Backend::MatrixFree(tracer) => {
                out.fill(0.0);
                for (ray, &v) in y.iter().enumerate() {
                    if v != 0.0 {
                        tracer.trace(ray, |p, w| out[p] += w * v);
                    }
                }
            }
        }
    }

    fn column_norms_squared(&self) -> Vec<f64> {
        match &self.backend {
            Backend::Matrix { cols, .. } => (0..self.input_dim())
                .map(|c| cols.val[cols.ptr[c]..cols.ptr[c + 1]].iter().map(|v| v * v).sum())
                .collect(),
            Backend::MatrixFree(tracer) => {
                let mut norms = vec![0.0; self.input_dim()];
                for ray in 0..self.output_dim() {
                    for (p, w) in tracer.merged_row(ray) {
                        norms[p as usize] += w * w;
                    }
                }
                norms
            }
        }
    }
}

/// Ram-Lak filter response for rows zero-padded to `padded` samples, built
/// from the band-limited spatial kernel so the DC bin is handled correctly.
fn ramp_response(padded: usize) -> Vec<f64> {
    let mut kernel = vec![Complex::new(0.0, 0.0); padded];
    kernel[0].re = 0.25;
    for n in 1..=padded / 2 {
        if n % 2 == 1 {
            let v = -1.0 / (PI * n as f64).powi(2);
            kernel[n].re = v;
            kernel[padded - n].re = v;
        }
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut kernel);
    kernel.iter().map(|c| c.re).collect()
}

/// Filtered back-projection with an unwindowed ramp filter.
///
/// Pixels outside the circular field of view are set to zero.
pub fn fbp_reconstruct(sino: &Sinogram, geom: &CtGeometry) -> Result<Image> {
    check_sinogram(sino, geom)?;
    let d = geom.detector_count;
    let padded = (2 * d).next_power_of_two();
    let response = ramp_response(padded);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(padded);
    let inv = planner.plan_fft_inverse(padded);

    let filtered: Vec<Vec<f64>> = (0..geom.num_angles)
        .map(|k| {
            let mut buf = vec![Complex::new(0.0, 0.0); padded];
            for (b, &v) in buf.iter_mut().zip(sino.row(k)) {
                b.re = v;
            }
            fwd.process(&mut buf);
            for (b, &h) in buf.iter_mut().zip(&response) {
                *b *= h;
            }
            inv.process(&mut buf);
            buf[..d].iter().map(|c| c.re / padded as f64).collect()
        })
        .collect();

    let n = geom.image_size;
    let center = (n as f64 - 1.0) / 2.0;
    let det_center = (d as f64 - 1.0) / 2.0;
    let radius2 = (n as f64 / 2.0).powi(2);
    let trig: Vec<(f64, f64)> = geom.angles().iter().map(|a| (a.cos(), a.sin())).collect();
    let weight = PI / geom.num_angles as f64;

    let pixels: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|p| {
            let x = (p % n) as f64 - center;
            let y = center - (p / n) as f64;
            if x * x + y * y > radius2 {
                return 0.0;
            }
            let mut acc = 0.0;
            for ((cos, sin), row) in trig.iter().zip(&filtered) {
                let u = x * cos + y * sin + det_center;
                let i0 = u.floor();
                let f = u - i0;
                let i0 = i0 as isize;
                let at = |i: isize| {
                    if i >= 0 && (i as usize) < d {
                        row[i as usize]
                    } else {
                        0.0
                    }
                };
                acc += (1.0 - f) * at(i0) + f * at(i0 + 1);
            }
            acc * weight
        })
        .collect();
    Image::new(n, pixels)
}
