//! Forward operators and their adjoints.

use std::borrow::Cow;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::transforms::{DctBasis, Orientation};

mod radon;
mod sinogram;

pub use radon::{fbp_reconstruct, radon_adjoint, radon_forward, CtGeometry, RadonOperator};
pub use sinogram::Sinogram;

/// A real linear map `A: R^input_dim -> R^output_dim` with its adjoint.
///
/// The `_into` methods are the hot path and panic on length mismatch; the
/// allocating wrappers check dimensions and return errors instead.
pub trait LinearOperator: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("apply", self.input_dim(), x.len())?;
        let mut out = vec![0.0; self.output_dim()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    fn adjoint_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint_apply", self.output_dim(), y.len())?;
        let mut out = vec![0.0; self.input_dim()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }

    /// `Σ_μ A[μ, i]²` for every column `i`.
    fn column_norms_squared(&self) -> Vec<f64> {
        column_norms_by_probing(self)
    }

    /// Rows kept by the operator when it is a pure coordinate selection.
    fn row_selection(&self) -> Option<Cow<'_, [usize]>> {
        None
    }

    /// Square with `AᵀA = I`, so `‖Ax − y‖ = ‖x − Aᵀy‖`.
    fn is_orthogonal(&self) -> bool {
        false
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Arc<T> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adjoint_into(y, out)
    }
    fn column_norms_squared(&self) -> Vec<f64> {
        (**self).column_norms_squared()
    }
    fn row_selection(&self) -> Option<Cow<'_, [usize]>> {
        (**self).row_selection()
    }
    fn is_orthogonal(&self) -> bool {
        (**self).is_orthogonal()
    }
}

/// Column norms obtained by applying the operator to each unit vector.
pub fn column_norms_by_probing<O: LinearOperator + ?Sized>(op: &O) -> Vec<f64> {
    let n = op.input_dim();
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; op.output_dim()];
    (0..n)
        .map(|i| {
            e[i] = 1.0;
            op.apply_into(&e, &mut col);
            e[i] = 0.0;
            col.iter().map(|v| v * v).sum()
        })
        .collect()
}

/// Relative mismatch of the dot test `<Ax, u> = <x, Aᵀu>`.
pub fn adjoint_mismatch<O: LinearOperator + ?Sized>(op: &O, x: &[f64], u: &[f64]) -> Result<f64> {
    let ax = op.apply(x)?;
    let atu = op.adjoint_apply(u)?;
    let lhs = dot(&ax, u);
    let rhs = dot(x, &atu);
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok((lhs - rhs).abs() / scale)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `A = I` on `R^n`.
#[derive(Clone, Copy, Debug)]
pub struct Identity {
    n: usize,
}

pub fn make_identity_operator(n: usize) -> Result<Identity> {
    if n == 0 {
        return Err(Error::Empty("identity operator"));
    }
    Ok(Identity { n })
}

impl LinearOperator for Identity {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
    fn column_norms_squared(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
    fn row_selection(&self) -> Option<Cow<'_, [usize]>> {
        Some(Cow::Owned((0..self.n).collect()))
    }
    fn is_orthogonal(&self) -> bool {
        true
    }
}

/// Observed index set Ω of a length-`n` signal.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MaskSpec {
    n: usize,
    observed: Vec<usize>,
    seed: u64,
}

impl MaskSpec {
    /// `observed` must be strictly increasing, non-empty and below `n`.
    pub fn new(n: usize, observed: Vec<usize>, seed: u64) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::InvalidArgument("mask must observe at least one index".into()));
        }
        for pair in observed.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidArgument(
                    "mask indices must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = observed.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, len: n });
            }
        }
        Ok(Self { n, observed, seed })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Ω^c in increasing order.
    pub fn missing(&self) -> Vec<usize> {
        let mut keep = vec![true; self.n];
        for &i in &self.observed {
            keep[i] = false;
        }
        (0..self.n).filter(|&i| keep[i]).collect()
    }

    /// R = |Ω| / n.
    pub fn ratio(&self) -> f64 {
        self.observed.len() as f64 / self.n as f64
    }
}

/// Keeps the entries at Ω; the adjoint scatters back with zeros elsewhere.
#[derive(Clone, Debug)]
pub struct Subsample {
    mask: MaskSpec,
}

pub fn make_subsample_operator(mask: MaskSpec) -> Result<Subsample> {
    // MaskSpec enforces its invariants on construction; re-check in case of
    // deserialized input.
    let mask = MaskSpec::new(mask.n, mask.observed, mask.seed)?;
    Ok(Subsample { mask })
}

impl Subsample {
    pub fn mask(&self) -> &MaskSpec {
        &self.mask
    }
}

impl LinearOperator for Subsample {
    fn input_dim(&self) -> usize {
        self.mask.n
    }
    fn output_dim(&self) -> usize {
        self.mask.observed.len()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.mask.n);
        for (o, &i) in out.iter_mut().zip(&self.mask.observed) {
            *o = x[i];
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.mask.observed.len());
        out.fill(0.0);
        for (&v, &i) in y.iter().zip(&self.mask.observed) {
            out[i] = v;
        }
    }
    fn column_norms_squared(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.mask.n];
        for &i in &self.mask.observed {
            c[i] = 1.0;
        }
        c
    }
    fn row_selection(&self) -> Option<Cow<'_, [usize]>> {
        Some(Cow::Borrowed(&self.mask.observed))
    }
}

/// Θ = AΨ for a forward operator `A` and a synthesis basis Ψ.
#[derive(Clone)]
pub struct Composed {
    outer: Arc<dyn LinearOperator>,
    basis: DctBasis,
}

pub fn compose(outer: Arc<dyn LinearOperator>, basis: &DctBasis) -> Result<Composed> {
    check_len("compose", outer.input_dim(), basis.len())?;
    let basis = match basis.orientation() {
        Orientation::Synthesis => basis.clone(),
        Orientation::Analysis => basis.transposed(),
    };
    Ok(Composed { outer, basis })
}

impl Composed {
    pub fn basis(&self) -> &DctBasis {
        &self.basis
    }
}

impl LinearOperator for Composed {
    fn input_dim(&self) -> usize {
        self.basis.len()
    }
    fn output_dim(&self) -> usize {
        self.outer.output_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut signal = vec![0.0; self.basis.len()];
        self.basis.synthesize_into(x, &mut signal);
        self.outer.apply_into(&signal, out);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let mut signal = vec![0.0; self.basis.len()];
        self.outer.adjoint_into(y, &mut signal);
        self.basis.analyze_into(&signal, out);
    }
    fn column_norms_squared(&self) -> Vec<f64> {
        let n = self.basis.len();
        match self.outer.row_selection() {
            Some(rows) if rows.len() == n => vec![1.0; n],
            Some(rows) => (0..n)
                .map(|col| {
                    rows.iter()
                        .map(|&r| {
                            let v = self.basis.synthesis_entry(r, col);
                            v * v
                        })
                        .sum()
                })
                .collect(),
            None => column_norms_by_probing(self),
        }
    }
    fn is_orthogonal(&self) -> bool {
        self.outer.is_orthogonal()
    }
}

/// Row-major dense matrix as an operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("DenseOperator"));
        }
        check_len("DenseOperator data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Builds the explicit matrix of any operator by probing unit vectors.
    pub fn materialize<O: LinearOperator + ?Sized>(op: &O) -> Self {
        let (rows, cols) = (op.output_dim(), op.input_dim());
        let mut data = vec![0.0; rows * cols];
        let mut e = vec![0.0; cols];
        let mut col = vec![0.0; rows];
        for j in 0..cols {
            e[j] = 1.0;
            op.apply_into(&e, &mut col);
            e[j] = 0.0;
            for i in 0..rows {
                data[i * cols + j] = col[i];
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }
}

impl LinearOperator for DenseOperator {
    fn input_dim(&self) -> usize {
        self.cols
    }
    fn output_dim(&self) -> usize {
        self.rows
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }
    fn column_norms_squared(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (ci, a) in c.iter_mut().zip(row) {
                *ci += a * a;
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn randn(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn subsample_selects_and_scatters() {
        let op = make_subsample_operator(MaskSpec::new(4, vec![0, 2], 0).unwrap()).unwrap();
        assert_eq!(op.apply(&[5.0, 6.0, 7.0, 8.0]).unwrap(), vec![5.0, 7.0]);
        assert_eq!(op.adjoint_apply(&[5.0, 7.0]).unwrap(), vec![5.0, 0.0, 7.0, 0.0]);
    }

    #[test]
    fn mask_validation() {
        assert!(matches!(
            MaskSpec::new(4, vec![1, 4], 0),
            Err(Error::IndexOutOfRange { index: 4, len: 4 })
        ));
        assert!(MaskSpec::new(4, vec![2, 1], 0).is_err());
        assert!(MaskSpec::new(4, vec![1, 1], 0).is_err());
        assert!(MaskSpec::new(4, vec![], 0).is_err());
        let m = MaskSpec::new(5, vec![0, 3], 7).unwrap();
        assert_eq!(m.missing(), vec![1, 2, 4]);
        assert!((m.ratio() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn subsample_dot_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, 50, 20).into_vec();
        idx.sort_unstable();
        let op = make_subsample_operator(MaskSpec::new(50, idx, 0).unwrap()).unwrap();
        let x = randn(50, &mut rng);
        let u = randn(20, &mut rng);
        assert!(adjoint_mismatch(&op, &x, &u).unwrap() < 1e-12);
    }

    #[test]
    fn identity_is_identity() {
        let op = make_identity_operator(3).unwrap();
        assert_eq!(op.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(op.adjoint_apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(op.column_norms_squared(), vec![1.0; 3]);
        assert_eq!(adjoint_mismatch(&op, &[1.0, -2.0, 0.5], &[0.3, 0.1, 4.0]).unwrap(), 0.0);
        assert!(make_identity_operator(0).is_err());
    }

    #[test]
    fn apply_checks_dimensions() {
        let op = make_identity_operator(3).unwrap();
        assert!(matches!(op.apply(&[1.0]), Err(Error::Dimension { .. })));
        assert!(matches!(op.adjoint_apply(&[1.0; 4]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn compose_with_identity_is_synthesis() {
        let basis = DctBasis::new(16).unwrap();
        let theta = compose(Arc::new(make_identity_operator(16).unwrap()), &basis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = randn(16, &mut rng);
        assert_eq!(theta.apply(&w).unwrap(), basis.synthesize(&w).unwrap());
    }

    #[test]
    fn compose_with_full_mask_is_basis() {
        let basis = DctBasis::new(8).unwrap();
        let sub = make_subsample_operator(MaskSpec::new(8, (0..8).collect(), 0).unwrap()).unwrap();
        let theta = compose(Arc::new(sub), &basis).unwrap();
        let a = DenseOperator::materialize(&theta);
        let b = DenseOperator::materialize(&basis);
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_rejects_mismatch() {
        let basis = DctBasis::new(8).unwrap();
        assert!(compose(Arc::new(make_identity_operator(7).unwrap()), &basis).is_err());
    }

    #[test]
    fn compose_dot_test_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, 64, 30).into_vec();
        idx.sort_unstable();
        let sub = make_subsample_operator(MaskSpec::new(64, idx, 0).unwrap()).unwrap();
        let theta = compose(Arc::new(sub), &DctBasis::new(64).unwrap()).unwrap();
        let w = randn(64, &mut rng);
        let u = randn(30, &mut rng);
        assert!(adjoint_mismatch(&theta, &w, &u).unwrap() < 1e-9);
        let c = 3.5;
        let scaled: Vec<f64> = w.iter().map(|v| c * v).collect();
        let lhs = theta.apply(&scaled).unwrap();
        let rhs = theta.apply(&w).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - c * b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn composed_column_norms_closed_form_matches_probing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, 40, 13).into_vec();
        idx.sort_unstable();
        let sub = make_subsample_operator(MaskSpec::new(40, idx, 0).unwrap()).unwrap();
        let theta = compose(Arc::new(sub), &DctBasis::new(40).unwrap()).unwrap();
        let closed = theta.column_norms_squared();
        let probed = column_norms_by_probing(&theta);
        for (a, b) in closed.iter().zip(&probed) {
            assert!((a - b).abs() < 1e-9);
            assert!((0.0..=1.0 + 1e-12).contains(a));
        }
        let total: f64 = closed.iter().sum();
        assert!((total - 13.0).abs() < 1e-9);
    }

    #[test]
    fn dense_column_norms_match_explicit_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = randn(15, &mut rng);
        let op = DenseOperator::new(5, 3, data.clone()).unwrap();
        let closed = op.column_norms_squared();
        for j in 0..3 {
            let explicit: f64 = (0..5).map(|i| data[i * 3 + j].powi(2)).sum();
            assert!((closed[j] - explicit).abs() < 1e-12);
        }
        let probed = column_norms_by_probing(&op);
        for (a, b) in closed.iter().zip(&probed) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
