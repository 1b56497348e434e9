//! Lanczos iteration with full reorthogonalization for the top of the
//! spectrum of a Hermitian operator. This is the iterative path used when
//! only `λ1` (and possibly `λ2`) is needed.

use alloc::vec;
use alloc::vec::Vec;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, dot, norm};
use crate::scalar::Scalar;

/// A Hermitian linear map `x ↦ A x` on `T^dim`.
pub trait HermitianOperator<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// A dense Hermitian matrix viewed as an operator.
pub struct DenseOperator<'a, T>(pub MatRef<'a, T>);

impl<T: Scalar> HermitianOperator<T> for DenseOperator<'_, T> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        linalg::matvec(self.0, x, y);
    }
}

/// Real symmetric Toeplitz matrix `(c_{|i−j|})` applied without materializing it.
pub struct ToeplitzOperator {
    first_column: Vec<f64>,
    reversed: Vec<f64>,
}

impl ToeplitzOperator {
    pub fn new(first_column: Vec<f64>) -> Self {
        let reversed = first_column.iter().rev().copied().collect();
        Self {
            first_column,
            reversed,
        }
    }
}

impl HermitianOperator<f64> for ToeplitzOperator {
    fn dim(&self) -> usize {
        self.first_column.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.first_column.len();
        for (i, yi) in y.iter_mut().enumerate() {
            // j < i uses c_{i-j} read backwards, j >= i uses c_{j-i} forwards.
            let lower = &self.reversed[n - 1 - i..n - 1];
            let upper = &self.first_column[..n - i];
            let a: f64 = lower.iter().zip(&x[..i]).map(|(c, v)| c * v).sum();
            let b: f64 = upper.iter().zip(&x[i..]).map(|(c, v)| c * v).sum();
            *yi = a + b;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Stop once every wanted Ritz residual is below `tol · |θ1|`.
    pub tol: f64,
    /// Defaults to the operator dimension.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: None,
            seed: 0x5EED_1A2C_0DE5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPairs<T> {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

fn random_vector<T: Scalar>(dim: usize, rng: &mut SplitMix) -> Vec<T> {
    (0..dim)
        .map(|_| {
            if T::IS_COMPLEX {
                T::from_c64(crate::scalar::c64::new(rng.unit(), rng.unit()))
            } else {
                T::from_re(rng.unit())
            }
        })
        .collect()
}

/// Projects `w` off every vector in `basis` (assumed orthonormal), twice.
fn orthogonalize<T: Scalar>(w: &mut [T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// Eigenpairs of the symmetric tridiagonal matrix, descending.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    linalg::eigh(t.as_ref())
}

/// Top-`k` eigenpairs of `op`, restricted to the orthogonal complement of
/// `deflate` (orthonormal vectors, typically previously found eigenvectors).
pub fn lanczos_top<T: Scalar, Op: HermitianOperator<T> + ?Sized>(
    op: &Op,
    k: usize,
    deflate: &[Vec<T>],
    opts: LanczosOptions,
) -> Result<RitzPairs<T>> {
    let dim = op.dim();
    let available = dim.saturating_sub(deflate.len());
    if k == 0 || k > available {
        return Err(Error::invalid(alloc::format!(
            "requested {k} eigenpairs of a {available}-dimensional operator"
        )));
    }
    let max_iter = opts.max_iter.unwrap_or(available).min(available).max(k);
    let mut rng = SplitMix(opts.seed);

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(max_iter.min(256));
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut q = random_vector::<T>(dim, &mut rng);
    orthogonalize(&mut q, deflate);
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v = v.scale(1.0 / qn));

    let mut w = vec![T::from_re(0.0); dim];
    let mut scale_estimate = 0.0f64;
    let mut last = None;

    for j in 0..max_iter {
        op.apply(&q, &mut w);
        orthogonalize(&mut w, deflate);
        let a = dot(&q, &w).re();
        axpy(T::from_re(-a), &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(T::from_re(-b), prev, &mut w);
        }
        basis.push(q.clone());
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        orthogonalize(&mut w, deflate);
        let mut b = norm(&w);
        scale_estimate = scale_estimate.max(a.abs() + b);

        let steps = j + 1;
        let exhausted = steps == max_iter;
        let breakdown = b <= 1e-13 * scale_estimate.max(f64::MIN_POSITIVE);
        let check = steps >= k && (steps <= 24 || steps % 4 == 0 || exhausted || breakdown);
        if check {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta)?;
            let res: Vec<f64> = (0..k).map(|i| (b * s[(steps - 1, i)]).abs()).collect();
            let threshold = opts.tol * theta[0].abs().max(scale_estimate * 1e-3);
            let converged = res.iter().all(|&r| r <= threshold);
            if converged || exhausted {
                last = Some((theta, s, res, steps, converged || breakdown));
                break;
            }
        }

        if breakdown {
            // Invariant subspace reached: restart with a fresh direction.
            // The zero coupling keeps the tridiagonal matrix exact.
            b = 0.0;
            let mut fresh = random_vector::<T>(dim, &mut rng);
            orthogonalize(&mut fresh, deflate);
            orthogonalize(&mut fresh, &basis);
            let fnorm = norm(&fresh);
            if fnorm == 0.0 {
                break;
            }
            fresh.iter_mut().for_each(|v| *v = v.scale(1.0 / fnorm));
            w.copy_from_slice(&fresh);
        } else {
            w.iter_mut().for_each(|v| *v = v.scale(1.0 / b));
        }
        beta.push(b);
        core::mem::swap(&mut q, &mut w);
    }

    let (theta, s, residuals, iterations, ok) = match last {
        Some(v) => v,
        None => {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta)?;
            let res = (0..k).map(|_| 0.0).collect();
            let steps = alpha.len();
            (theta, s, res, steps, true)
        }
    };
    if !ok {
        return Err(Error::NonConvergence {
            method: "lanczos",
            iterations,
            residual: residuals.iter().copied().fold(0.0, f64::max),
        });
    }

    let vectors = (0..k)
        .map(|i| {
            let mut v = vec![T::from_re(0.0); dim];
            for (l, ql) in basis.iter().enumerate() {
                axpy(T::from_re(s[(l, i)]), ql, &mut v);
            }
            let n = norm(&v);
            v.iter_mut().for_each(|x| *x = x.scale(1.0 / n));
            v
        })
        .collect();

    Ok(RitzPairs {
        values: theta[..k].to_vec(),
        vectors,
        residuals,
        iterations,
    })
}
