use serde::{Deserialize, Serialize};

use super::SparseProblem;
use crate::error::{Error, Result};
use crate::operators::DenseOperator;

/// Largest coefficient count accepted by the exhaustive search.
pub const MAX_EXHAUSTIVE_N: usize = 20;

/// Diagonal jitter added to the normal equations of every support.
const RIDGE_JITTER: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L0Fit {
    /// Selected column indices, increasing.
    pub support: Vec<usize>,
    /// Full-length coefficient vector, zero off the support.
    pub coeffs: Vec<f64>,
    /// `‖y − Θ_S w_S‖₂`.
    pub residual: f64,
}

/// Least squares restricted to `support`, solved through the jittered
/// normal equations.
pub fn restricted_least_squares(theta: &DenseOperator, y: &[f64], support: &[usize]) -> Result<L0Fit> {
    let n = theta.cols();
    let m = theta.rows();
    if y.len() != m {
        return Err(Error::Dimension {
            context: "restricted_least_squares observations",
            expected: m,
            got: y.len(),
        });
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let k = support.len();
    let cols: Vec<Vec<f64>> = support.iter().map(|&i| theta.column(i)).collect();
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for a in 0..k {
        rhs[a] = dot(&cols[a], y);
        for b in 0..=a {
            let g = dot(&cols[a], &cols[b]);
            gram[a * k + b] = g;
            gram[b * k + a] = g;
        }
        gram[a * k + a] += RIDGE_JITTER;
    }
    let ws = cholesky_solve(&mut gram, &mut rhs, k)?;
    let mut fitted = vec![0.0; m];
    for (col, w) in cols.iter().zip(&ws) {
        for (f, c) in fitted.iter_mut().zip(col) {
            *f += w * c;
        }
    }
    let residual = fitted
        .iter()
        .zip(y)
        .map(|(f, y)| (y - f) * (y - f))
        .sum::<f64>()
        .sqrt();
    let mut coeffs = vec![0.0; n];
    for (&i, w) in support.iter().zip(ws) {
        coeffs[i] = w;
    }
    Ok(L0Fit {
        support: support.to_vec(),
        coeffs,
        residual,
    })
}

/// Exhaustive best-subset regression over supports of size `0..=max_support`.
///
/// Supports are visited by size, then lexicographically; a later support
/// only replaces the incumbent when it lowers the residual by more than
/// `1e-12 (1 + ‖y‖)`, so the smallest and lexicographically first optimum wins.
pub fn brute_force_l0(problem: &SparseProblem, max_support: usize) -> Result<L0Fit> {
    let n = problem.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::TooLarge {
            n,
            limit: MAX_EXHAUSTIVE_N,
        });
    }
    let theta = DenseOperator::materialize(problem.theta());
    let y = problem.y();
    let tol = 1e-12 * (1.0 + dot(y, y).sqrt());
    let mut best = restricted_least_squares(&theta, y, &[])?;
    for size in 1..=max_support.min(n) {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            let fit = restricted_least_squares(&theta, y, &subset)?;
            if fit.residual < best.residual - tol {
                best = fit;
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    Ok(best)
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for pos in (0..k).rev() {
        if subset[pos] < n - k + pos {
            subset[pos] += 1;
            for later in pos + 1..k {
                subset[later] = subset[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, k×k),
/// overwriting `a` with its Cholesky factor.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], k: usize) -> Result<Vec<f64>> {
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= a[j * k + p] * a[j * k + p];
        }
        if !(d > 0.0) {
            return Err(Error::InvalidArgument("normal equations not positive definite".into()));
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= a[i * k + p] * a[j * k + p];
            }
            a[i * k + j] = s / d;
        }
    }
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= a[i * k + p] * b[p];
        }
        b[i] = s / a[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in i + 1..k {
            s -= a[p * k + i] * b[p];
        }
        b[i] = s / a[i * k + i];
    }
    Ok(b.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        let mut s = vec![0, 1];
        let mut seen = vec![s.clone()];
        while next_combination(&mut s, 4) {
            seen.push(s.clone());
        }
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }

    #[test]
    fn cholesky_matches_known_solution() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        let x = cholesky_solve(&mut a, &mut b, 2).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14 && x[1].abs() < 1e-14);
    }
}
