//! Orthonormal DCT-II and its inverse.
//!
//! The fast path reorders the input and runs a single complex FFT of length
//! `n` (Makhoul's algorithm). [`reference`] keeps the direct O(n²) summation
//! as an independent check.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};
use crate::operators::LinearOperator;

/// Which way a [`DctBasis`] maps when used as a [`LinearOperator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Ψ: coefficients to signal.
    Synthesis,
    /// Ψᵀ: signal to coefficients.
    Analysis,
}

/// Orthonormal DCT-II basis of length `n` with cached FFT plans.
#[derive(Clone)]
pub struct DctBasis {
    n: usize,
    orientation: Orientation,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // e^{-iπk/2n}
    twiddles: Vec<Complex<f64>>,
}

impl fmt::Debug for DctBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DctBasis")
            .field("n", &self.n)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl DctBasis {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_orientation(n, Orientation::Synthesis)
    }

    pub fn with_orientation(n: usize, orientation: Orientation) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("DctBasis::new"));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let twiddles = (0..n)
            .map(|k| Complex::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64)))
            .collect();
        Ok(Self {
            n,
            orientation,
            forward,
            inverse,
            twiddles,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The same basis viewed in the opposite direction.
    pub fn transposed(&self) -> Self {
        let mut t = self.clone();
        t.orientation = match self.orientation {
            Orientation::Synthesis => Orientation::Analysis,
            Orientation::Analysis => Orientation::Synthesis,
        };
        t
    }

    fn scale(&self, k: usize) -> f64 {
        let n = self.n as f64;
        if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        }
    }

    /// Signal to coefficients (Ψᵀx).
    pub fn analyze(&self, signal: &[f64]) -> Result<Vec<f64>> {
        check_len("dct_analyze", self.n, signal.len())?;
        let mut out = vec![0.0; self.n];
        self.analyze_into(signal, &mut out);
        Ok(out)
    }

    /// Coefficients to signal (Ψc).
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len("dct_synthesize", self.n, coeffs.len())?;
        let mut out = vec![0.0; self.n];
        self.synthesize_into(coeffs, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`DctBasis::analyze`]; panics on length mismatch.
    pub fn analyze_into(&self, signal: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(signal.len(), n);
        assert_eq!(out.len(), n);
        with_buffers(n, self.forward.get_inplace_scratch_len(), |buf, scratch| {
            let half = n.div_ceil(2);
            for i in 0..half {
                buf[i] = Complex::new(signal[2 * i], 0.0);
            }
            for i in 0..n / 2 {
                buf[n - 1 - i] = Complex::new(signal[2 * i + 1], 0.0);
            }
            self.forward.process_with_scratch(buf, scratch);
            let (s0, s) = (self.scale(0), self.scale(1));
            out[0] = (buf[0] * self.twiddles[0]).re * s0;
            for k in 1..n {
                out[k] = (buf[k] * self.twiddles[k]).re * s;
            }
        });
    }

    /// Unchecked variant of [`DctBasis::synthesize`]; panics on length mismatch.
    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(coeffs.len(), n);
        assert_eq!(out.len(), n);
        with_buffers(n, self.inverse.get_inplace_scratch_len(), |buf, scratch| {
            let inv_s = 1.0 / self.scale(1);
            // k = 0 has no mirrored partner.
            buf[0] = Complex::new(coeffs[0] / self.scale(0), 0.0);
            for k in 1..n {
                buf[k] = self.twiddles[k].conj() * Complex::new(coeffs[k] * inv_s, -coeffs[n - k] * inv_s);
            }
            self.inverse.process_with_scratch(buf, scratch);
            let inv_n = 1.0 / n as f64;
            let half = n.div_ceil(2);
            for i in 0..half {
                out[2 * i] = buf[i].re * inv_n;
            }
            for i in 0..n / 2 {
                out[2 * i + 1] = buf[n - 1 - i].re * inv_n;
            }
        });
    }

    /// Entry Ψ[row, col] of the synthesis matrix.
    pub fn synthesis_entry(&self, row: usize, col: usize) -> f64 {
        let n = self.n as f64;
        self.scale(col) * (PI * col as f64 * (2.0 * row as f64 + 1.0) / (2.0 * n)).cos()
    }
}

thread_local! {
    static BUFFERS: RefCell<(Vec<Complex<f64>>, Vec<Complex<f64>>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// Runs `f` with per-thread FFT work and scratch buffers of the given sizes.
fn with_buffers<R>(n: usize, scratch_len: usize, f: impl FnOnce(&mut [Complex<f64>], &mut [Complex<f64>]) -> R) -> R {
    BUFFERS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (buf, scratch) = &mut *guard;
        buf.resize(n, Complex::new(0.0, 0.0));
        scratch.resize(scratch_len, Complex::new(0.0, 0.0));
        f(&mut buf[..n], &mut scratch[..scratch_len])
    })
}

impl LinearOperator for DctBasis {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self.orientation {
            Orientation::Synthesis => self.synthesize_into(x, out),
            Orientation::Analysis => self.analyze_into(x, out),
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        match self.orientation {
            Orientation::Synthesis => self.analyze_into(y, out),
            Orientation::Analysis => self.synthesize_into(y, out),
        }
    }

    fn column_norms_squared(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
}

/// Orthonormal DCT-II of `signal`.
pub fn dct_analyze(signal: &[f64]) -> Result<Vec<f64>> {
    DctBasis::new(signal.len())?.analyze(signal)
}

/// Inverse of [`dct_analyze`] (orthonormal DCT-III).
pub fn dct_synthesize(coeffs: &[f64]) -> Result<Vec<f64>> {
    DctBasis::new(coeffs.len())?.synthesize(coeffs)
}

/// Direct-summation DCT used to check the fast path.
pub mod reference {
    use std::f64::consts::PI;

    fn scale(k: usize, n: usize) -> f64 {
        if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        }
    }

    /// Row-major n×n orthonormal DCT-II matrix: `D[k][i]`.
    pub fn dct_matrix(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        scale(k, n) * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn dct_ii(x: &[f64]) -> Vec<f64> {
        dct_matrix(x.len())
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn dct_iii(c: &[f64]) -> Vec<f64> {
        let d = dct_matrix(c.len());
        (0..c.len())
            .map(|i| (0..c.len()).map(|k| d[k][i] * c[k]).sum())
            .collect()
    }
}
