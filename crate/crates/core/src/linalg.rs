//! Dense helpers over `faer` shared by the other modules.

use alloc::format;
use alloc::vec::Vec;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest `|a_ij − conj(a_ji)|`.
pub fn hermitian_defect<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).abs2().sqrt();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn max_abs<T: Scalar>(m: MatRef<'_, T>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].abs2());
        }
    }
    worst.sqrt()
}

/// Replaces `m` by `(m + m*)/2`.
pub fn symmetrize<T: Scalar>(m: &mut Mat<T>) {
    let n = m.nrows();
    for j in 0..n {
        let d = m[(j, j)].re();
        m[(j, j)] = T::from_re(d);
        for i in (j + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()).scale(0.5);
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn check_square<T>(m: MatRef<'_, T>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `alpha · lhs · rhs`.
pub fn product<T: Scalar>(lhs: MatRef<'_, T>, rhs: MatRef<'_, T>, alpha: f64) -> Mat<T> {
    let mut out = Mat::<T>::zeros(lhs.nrows(), rhs.ncols());
    matmul(
        out.as_mut(),
        Accum::Replace,
        lhs,
        rhs,
        T::from_re(alpha),
        Par::Seq,
    );
    out
}

/// `alpha · a · a*`, symmetrized.
pub fn gram<T: Scalar>(a: MatRef<'_, T>, alpha: f64) -> Mat<T> {
    let mut out = Mat::<T>::zeros(a.nrows(), a.nrows());
    matmul(
        out.as_mut(),
        Accum::Replace,
        a,
        a.adjoint(),
        T::from_re(alpha),
        Par::Seq,
    );
    symmetrize(&mut out);
    out
}

/// `alpha · a* · b · a`, symmetrized (`b` Hermitian).
pub fn congruence<T: Scalar>(a: MatRef<'_, T>, b: MatRef<'_, T>, alpha: f64) -> Mat<T> {
    let ba = product(b, a, 1.0);
    let mut out = Mat::<T>::zeros(a.ncols(), a.ncols());
    matmul(
        out.as_mut(),
        Accum::Replace,
        a.adjoint(),
        ba.as_ref(),
        T::from_re(alpha),
        Par::Seq,
    );
    symmetrize(&mut out);
    out
}

/// Full Hermitian eigendecomposition, eigenvalues descending with aligned
/// eigenvector columns.
pub fn eigh<T: Scalar>(m: MatRef<'_, T>) -> Result<(Vec<f64>, Mat<T>)> {
    let n = check_square(m, "eigendecomposition input")?;
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i].re()).collect();
    let vectors = Mat::<T>::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((values, vectors))
}

/// Eigenvalues only, descending.
pub fn eigvalsh<T: Scalar>(m: MatRef<'_, T>) -> Result<Vec<f64>> {
    check_square(m, "eigenvalue input")?;
    let mut values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    values.reverse();
    Ok(values)
}

/// `⟨x, y⟩ = Σ conj(x_i) y_i`.
#[inline]
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    let mut acc = T::from_re(0.0);
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * *b;
    }
    acc
}

#[inline]
pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
}

/// `y += a · x`.
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

/// Dense `y = m · x` for a column-major matrix.
pub fn matvec<T: Scalar>(m: MatRef<'_, T>, x: &[T], y: &mut [T]) {
    let xm = MatRef::from_column_major_slice(x, x.len(), 1);
    let mut ym = faer::MatMut::from_column_major_slice_mut(y, m.nrows(), 1);
    matmul(
        ym.as_mut(),
        Accum::Replace,
        m,
        xm,
        T::from_re(1.0),
        Par::Seq,
    );
}

/// Dense `y = m* · x`.
pub fn adjoint_matvec<T: Scalar>(m: MatRef<'_, T>, x: &[T], y: &mut [T]) {
    let xm = MatRef::from_column_major_slice(x, x.len(), 1);
    let mut ym = faer::MatMut::from_column_major_slice_mut(y, m.ncols(), 1);
    matmul(
        ym.as_mut(),
        Accum::Replace,
        m.adjoint(),
        xm,
        T::from_re(1.0),
        Par::Seq,
    );
}

/// Compensated (Neumaier) sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
