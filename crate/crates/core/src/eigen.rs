//! Largest eigenpair of a symmetric operator by thick-restart Lanczos.
//!
//! The basis is kept fully orthogonal (classical Gram–Schmidt, applied twice)
//! and the projected matrix is assembled from the orthogonalization
//! coefficients. On restart the leading Ritz vectors are retained together
//! with the current residual direction.

use crate::error::{PamError, Result};
use crate::num::{dot, norm2, Real};

/// A symmetric linear map on ℝ^n applied without forming its matrix.
pub trait LinearOperator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

#[derive(Clone, Debug)]
pub struct EigenOptions<T> {
    /// Stop when ‖Av − θv‖₂ ≤ tol for the unit Ritz vector v.
    pub tol: f64,
    pub max_matvecs: usize,
    /// Krylov basis size; `None` picks one from `memory_budget`.
    pub basis: Option<usize>,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    /// Bytes the basis may occupy.
    pub memory_budget: usize,
    pub start: Option<Vec<T>>,
}

impl<T> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_matvecs: 20_000,
            basis: None,
            keep: 4,
            memory_budget: 512 << 20,
            start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult<T> {
    pub value: T,
    pub vector: Vec<T>,
    pub residual: T,
    pub matvecs: usize,
}

fn basis_size(dim: usize, opts_basis: Option<usize>, budget: usize, elem: usize) -> usize {
    let m = opts_basis.unwrap_or_else(|| (budget / (dim.max(1) * elem)).clamp(8, 40));
    m.min(dim).max(1)
}

/// Largest eigenvalue of a symmetric `op` with its unit eigenvector.
pub fn largest_eigenpair<T: Real>(
    op: &impl LinearOperator<T>,
    opts: &EigenOptions<T>,
) -> Result<EigenResult<T>> {
    let n = op.dim();
    if n == 0 {
        return Err(PamError::Parameter("operator has dimension zero".into()));
    }
    let m = basis_size(n, opts.basis, opts.memory_budget, std::mem::size_of::<T>());
    let keep = opts.keep.clamp(1, m.saturating_sub(1).max(1));
    let tol = T::lit(opts.tol);

    let mut start = match &opts.start {
        Some(v) if v.len() == n => v.clone(),
        Some(v) => return Err(PamError::DimensionMismatch { expected: n, got: v.len() }),
        None => vec![T::one(); n],
    };
    let s = norm2(&start);
    if s.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || !s.is_finite() {
        return Err(PamError::Parameter("start vector must be nonzero and finite".into()));
    }
    start.iter_mut().for_each(|x| *x /= s);

    let mut basis: Vec<Vec<T>> = vec![start];
    let mut h = vec![vec![T::zero(); m]; m];
    let mut w = vec![T::zero(); n];
    let mut aw = vec![T::zero(); n];
    let mut matvecs = 0usize;
    let mut best: Option<(T, Vec<T>, T)> = None;
    let mut k = 0usize;

    loop {
        // extend the basis from column k to m − 1
        let mut beta = T::zero();
        let mut filled = m;
        for j in k..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let mut coeffs = vec![T::zero(); j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(v, &w);
                    coeffs[i] += c;
                    for (wi, &vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            for (i, &c) in coeffs.iter().enumerate() {
                h[i][j] = c;
                h[j][i] = c;
            }
            beta = norm2(&w);
            let scale = coeffs.iter().fold(T::zero(), |a, c| a.max(c.abs()));
            if beta <= T::epsilon() * T::lit(16.0) * scale.max(T::one()) {
                filled = j + 1;
                beta = T::zero();
                break;
            }
            if j + 1 < m {
                basis.push(w.iter().map(|&x| x / beta).collect());
            }
        }

        let size = filled;
        let sub: Vec<Vec<T>> = h.iter().take(size).map(|row| row[..size].to_vec()).collect();
        let (theta, y) = jacobi_eigen(&sub);
        let order = descending_order(&theta);
        let top = order[0];

        // cheap residual estimate, confirmed by an explicit product
        let est = (beta * y[size - 1][top]).abs();
        let ritz = combine(&basis[..size], &y, top);
        if est <= tol || beta == T::zero() || matvecs + 1 >= opts.max_matvecs {
            op.apply(&ritz, &mut aw);
            matvecs += 1;
            let theta_top = theta[top];
            let res = aw
                .iter()
                .zip(&ritz)
                .map(|(&a, &v)| {
                    let r = a - theta_top * v;
                    r * r
                })
                .fold(T::zero(), |a, b| a + b)
                .sqrt();
            if best.as_ref().is_none_or(|b| res < b.2) {
                best = Some((theta_top, ritz.clone(), res));
            }
            if res <= tol {
                return Ok(EigenResult { value: theta_top, vector: ritz, residual: res, matvecs });
            }
            if matvecs >= opts.max_matvecs {
                let (value, vector, residual) = best.expect("at least one Ritz pair");
                return Err(PamError::NonConvergence {
                    iterations: matvecs,
                    best: value.to_f64_lossy(),
                    residual: residual.to_f64_lossy(),
                    best_vector: Some(vector.iter().map(|x| x.to_f64_lossy()).collect()),
                });
            }
        }

        // thick restart: keep the leading Ritz vectors plus the residual direction
        let kk = keep.min(size.saturating_sub(1)).max(1);
        let mut new_basis: Vec<Vec<T>> = order[..kk].iter().map(|&c| combine(&basis[..size], &y, c)).collect();
        for row in h.iter_mut() {
            row.iter_mut().for_each(|x| *x = T::zero());
        }
        for (i, &c) in order[..kk].iter().enumerate() {
            h[i][i] = theta[c];
        }
        if beta > T::zero() {
            new_basis.push(w.iter().map(|&x| x / beta).collect());
        } else {
            // invariant subspace without a converged pair: restart from the best Ritz vector
            new_basis.truncate(1);
        }
        k = new_basis.len() - 1;
        if beta == T::zero() {
            k = 0;
        }
        basis = new_basis;
    }
}

fn combine<T: Real>(basis: &[Vec<T>], y: &[Vec<T>], col: usize) -> Vec<T> {
    let n = basis[0].len();
    let mut out = vec![T::zero(); n];
    for (i, v) in basis.iter().enumerate() {
        let c = y[i][col];
        for (o, &x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    let s = norm2(&out);
    out.iter_mut().for_each(|x| *x /= s);
    out
}

fn descending_order<T: Real>(theta: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..theta.len()).collect();
    idx.sort_by(|&a, &b| theta[b].partial_cmp(&theta[a]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi.
///
/// Returns eigenvalues and a matrix whose columns are the eigenvectors.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigen<T: Real>(a: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let mut a: Vec<Vec<T>> = a.to_vec();
    let mut v = vec![vec![T::zero(); n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += a[i][i] * a[i][i];
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (two * apq);
                let t = tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    struct Dense(Vec<Vec<f64>>);

    impl LinearOperator<f64> for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for (yi, row) in y.iter_mut().zip(&self.0) {
                *yi = dot(row, x);
            }
        }
    }

    struct Path {
        n: usize,
    }

    impl LinearOperator<f32> for Path {
        fn dim(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f32], y: &mut [f32]) {
            for i in 0..self.n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < self.n { x[i + 1] } else { 0.0 };
                y[i] = l + r;
            }
        }
    }

    fn oracle_top(a: &[Vec<f64>]) -> f64 {
        let n = a.len();
        let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]];
        let (mut vals, _) = jacobi_eigen(&a);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s = 2f64.sqrt();
        for (v, w) in vals.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((v - w).abs() < 1e-14);
        }
    }

    #[test]
    fn path_graph_in_single_precision() {
        // top eigenvalue of the path adjacency is 2cos(π/(n+1))
        let n = 200;
        let opts = EigenOptions { tol: 1e-4, basis: Some(30), ..Default::default() };
        let r = largest_eigenpair(&Path { n }, &opts).unwrap();
        let exact = 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((r.value as f64 - exact).abs() < 1e-4, "{}", r.value);
    }

    #[test]
    fn small_basis_forces_restarts() {
        let n = 60;
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { (i as f64).sqrt() } else { 1.0 / (1.0 + (i + j) as f64) }).collect())
            .collect();
        let opts = EigenOptions { tol: 1e-11, basis: Some(6), keep: 2, ..Default::default() };
        let r = largest_eigenpair(&Dense(a.clone()), &opts).unwrap();
        assert!((r.value - oracle_top(&a)).abs() < 1e-10);
        assert!(r.residual <= 1e-11);
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let n: usize = 300;
        let opts = EigenOptions { tol: 1e-14, basis: Some(4), keep: 1, max_matvecs: 12, ..Default::default() };
        let a: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 }).collect()).collect();
        match largest_eigenpair(&Dense(a), &opts) {
            Err(PamError::NonConvergence { best_vector: Some(v), residual, .. }) => {
                assert_eq!(v.len(), n);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_operator_hits_invariant_subspace() {
        let a = vec![vec![3.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 3.0]];
        let r = largest_eigenpair(&Dense(a), &EigenOptions::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn agrees_with_dense_oracle(entries in prop::collection::vec(-1.0f64..1.0, 24 * 24)) {
            let n = 24;
            let a: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| 0.5 * (entries[i * n + j] + entries[j * n + i])).collect())
                .collect();
            let opts = EigenOptions { tol: 1e-9, basis: Some(10), keep: 3, start: Some((0..n).map(|i| 1.0 + 0.01 * i as f64).collect()), ..Default::default() };
            let r = largest_eigenpair(&Dense(a.clone()), &opts).unwrap();
            prop_assert!((r.value - oracle_top(&a)).abs() < 1e-8);
        }
    }
}
