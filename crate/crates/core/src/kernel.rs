//! Toeplitz matrices with regularly varying symbols against the integral
//! operator `(Kf)(x) = ∫₀¹ |x − y|^ρ f(y) dy`.
//!
//! The eigenvalues of `T_N(c)/(N R(N))` are those of the piecewise-constant
//! operator with kernel `R(⌊Nx⌋ − ⌊Ny⌋)/R(N)`, so they are computed from the
//! Toeplitz matrix directly. The limit operator is discretized by projecting
//! onto cell indicators with exactly integrated entries.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::covariance::AutocovarianceSpec;
use crate::error::{Error, Result};
use crate::lanczos::{lanczos_top, LanczosOptions, ToeplitzOperator};
use crate::linalg;

pub const DEFAULT_GRIDS: [usize; 4] = [256, 512, 1024, 2048];
/// Required ratio between the `a1 − a2` gap and the extrapolation error.
pub const SEPARATION_FACTOR: f64 = 10.0;
/// Below this size the Toeplitz spectrum is computed densely.
const DENSE_LIMIT: usize = 300;

/// The symbol `R(h) = |γ(⌊|h|⌋)|` with `ρ = 2d − 1`. A phase `θ` does not
/// change Toeplitz spectra, so only the magnitude is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub autocovariance: AutocovarianceSpec,
}

impl KernelSpec {
    pub fn new(autocovariance: AutocovarianceSpec) -> Result<Self> {
        autocovariance.validate()?;
        Ok(Self { autocovariance })
    }

    /// `L ≡ 1` with `d = (ρ + 1)/2`.
    pub fn pure(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Self::new(AutocovarianceSpec::pure((rho + 1.0) / 2.0)?)
    }

    pub fn rho(&self) -> f64 {
        self.autocovariance.rho()
    }

    pub fn r(&self, h: i64) -> f64 {
        self.autocovariance.magnitude(h)
    }

    fn first_column(&self, n: usize) -> Vec<f64> {
        (0..n as i64).map(|h| self.r(h)).collect()
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > -1.0 && rho < 0.0) {
        return Err(Error::invalid(format!("ρ must lie in (−1, 0), got {rho}")));
    }
    Ok(())
}

fn top_symmetric_toeplitz(
    column: Vec<f64>,
    k: usize,
    vectors: bool,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = column.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ {n}, got k = {k}")));
    }
    if n <= DENSE_LIMIT || 4 * k > n {
        let t = faer::Mat::<f64>::from_fn(n, n, |i, j| column[i.abs_diff(j)]);
        if !vectors {
            let mut v = linalg::eigvalsh(t.as_ref())?;
            v.truncate(k);
            return Ok((v, Vec::new()));
        }
        let (mut v, u) = linalg::eigh(t.as_ref())?;
        v.truncate(k);
        let vecs = (0..k).map(|j| u.col_as_slice(j).to_vec()).collect();
        return Ok((v, vecs));
    }
    let op = ToeplitzOperator::new(column);
    let pairs = lanczos_top(&op, k, &[], LanczosOptions::default())?;
    Ok((pairs.values, pairs.vectors))
}

/// Top `k` eigenvalues of `T_N(c)/(N R(N))`, descending.
pub fn widom_shampine_eigs(spec: &KernelSpec, n: usize, k: usize) -> Result<Vec<f64>> {
    let scale = n as f64 * spec.r(n as i64);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("R({n}) must be nonzero")));
    }
    let (values, _) = top_symmetric_toeplitz(spec.first_column(n), k, false)?;
    Ok(values.into_iter().map(|v| v / scale).collect())
}

/// Second difference `g(m+1) − 2g(m) + g(m−1)` of
/// `g(u) = |u|^a/(a(a−1))`, `a = ρ + 2`, evaluated without cancellation.
fn second_difference(a: f64, m: usize) -> f64 {
    let g = |u: f64| u.abs().powf(a) / (a * (a - 1.0));
    if m < 8 {
        let m = m as f64;
        return g(m + 1.0) - 2.0 * g(m) + g(m - 1.0);
    }
    // (m+1)^a + (m−1)^a − 2m^a = 2 m^a Σ_{j≥1} C(a, 2j) m^{−2j}
    let m = m as f64;
    let inv2 = 1.0 / (m * m);
    let mut binom = a * (a - 1.0) / 2.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for j in 1..40 {
        let term = binom * power;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        let k = 2.0 * j as f64;
        binom *= (a - k) * (a - k - 1.0) / ((k + 1.0) * (k + 2.0));
        power *= inv2;
    }
    2.0 * m.powf(a - 2.0) * sum / (a * (a - 1.0))
}

/// First column of the projected operator on `grid` equal cells:
/// `(1/h) ∫∫_{cells i, j} |x − y|^ρ`, which depends on `|i − j|` only.
pub fn galerkin_column(rho: f64, grid: usize) -> Result<Vec<f64>> {
    check_rho(rho)?;
    if grid == 0 {
        return Err(Error::invalid("grid must be ≥ 1"));
    }
    let a = rho + 2.0;
    let h = 1.0 / grid as f64;
    let scale = h.powf(rho + 1.0);
    Ok((0..grid).map(|m| scale * second_difference(a, m)).collect())
}

/// Top `k` eigenvalues of the cell-averaged discretization of `|x − y|^ρ`.
pub fn nystrom_limit_eigs(rho: f64, grid: usize, k: usize) -> Result<Vec<f64>> {
    if grid < k {
        return Err(Error::invalid(format!(
            "grid {grid} is smaller than k = {k}"
        )));
    }
    Ok(top_symmetric_toeplitz(galerkin_column(rho, grid)?, k, false)?.0)
}

/// As [`nystrom_limit_eigs`], with eigenvectors (cell values, unit norm,
/// the leading one signed to have a positive sum).
pub fn nystrom_limit_eigenpairs(
    rho: f64,
    grid: usize,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if grid < k {
        return Err(Error::invalid(format!(
            "grid {grid} is smaller than k = {k}"
        )));
    }
    let (values, mut vectors) = top_symmetric_toeplitz(galerkin_column(rho, grid)?, k, true)?;
    for v in &mut vectors {
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok((values, vectors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificationStatus {
    Certified,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEigenEstimate {
    pub rho: f64,
    pub grids: Vec<usize>,
    /// Extrapolated `a1, a2`, descending.
    pub a: Vec<f64>,
    /// Raw values per grid, `raw[g][k]`.
    pub raw: Vec<Vec<f64>>,
    pub extrapolated: bool,
    pub gap_ratio: f64,
    pub error_estimate: f64,
    pub status: CertificationStatus,
}

/// Richardson extrapolation of a sequence on halving mesh sizes with the
/// order fitted from the last three terms. Returns `(limit, error, fitted)`.
fn richardson(values: &[f64]) -> (f64, f64, bool) {
    let n = values.len();
    if n < 3 {
        let last = values[n - 1];
        let err = if n == 2 {
            (last - values[0]).abs()
        } else {
            f64::INFINITY
        };
        return (last, err, false);
    }
    let (v1, v2, v3) = (values[n - 3], values[n - 2], values[n - 1]);
    let (d1, d2) = (v2 - v1, v3 - v2);
    if d2 == 0.0 {
        return (v3, 0.0, true);
    }
    let q = d1 / d2;
    if !(q > 1.0 && q.is_finite()) {
        // not in the asymptotic regime: no extrapolation, last step as error
        return (v3, d2.abs(), false);
    }
    // q = 2^p
    let correction = d2 / (q - 1.0);
    (v3 + correction, correction.abs(), true)
}

/// Estimates `a1`, `a2` of the limit operator from [`DEFAULT_GRIDS`].
pub fn gap_ratio_estimate(rho: f64) -> Result<KernelEigenEstimate> {
    gap_ratio_estimate_on(rho, &DEFAULT_GRIDS)
}

pub fn gap_ratio_estimate_on(rho: f64, grids: &[usize]) -> Result<KernelEigenEstimate> {
    check_rho(rho)?;
    if grids.is_empty() || grids.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid("grids must be a nonempty doubling sequence"));
    }
    let raw: Vec<Vec<f64>> = grids
        .iter()
        .map(|&g| nystrom_limit_eigs(rho, g, 2))
        .collect::<Result<_>>()?;
    let mut a = Vec::with_capacity(2);
    let mut error: f64 = 0.0;
    let mut extrapolated = true;
    for k in 0..2 {
        let seq: Vec<f64> = raw.iter().map(|v| v[k]).collect();
        let (limit, err, fitted) = richardson(&seq);
        a.push(limit);
        error = error.max(err);
        extrapolated &= fitted;
    }
    let (a1, a2) = (a[0], a[1]);
    let certified =
        a1 > 0.0 && a2 >= -error && a1 - a2 > SEPARATION_FACTOR * error && error.is_finite();
    Ok(KernelEigenEstimate {
        rho,
        grids: grids.to_vec(),
        gap_ratio: (a2 / a1).max(0.0),
        a,
        raw,
        extrapolated,
        error_estimate: error,
        status: if certified {
            CertificationStatus::Certified
        } else {
            CertificationStatus::Inconclusive
        },
    })
}

/// `∫_lo^hi |c − |x − y|^ρ| dx` in closed form, `c > 0`.
fn cell_integral(c: f64, rho: f64, y: f64, lo: f64, hi: f64) -> f64 {
    // |u|^ρ crosses c at |u| = c^{1/ρ}
    let cross = c.powf(1.0 / rho);
    let prim = |u: f64| u.powf(rho + 1.0) / (rho + 1.0);
    // integral over u ∈ [u0, u1] ⊂ [0, ∞) of |c − u^ρ|
    let one_sided = |u0: f64, u1: f64| -> f64 {
        if u1 <= u0 {
            return 0.0;
        }
        let mut total = 0.0;
        // u < cross: u^ρ > c
        let m = cross.clamp(u0, u1);
        if m > u0 {
            total += (prim(m) - prim(u0)) - c * (m - u0);
        }
        if u1 > m {
            total += c * (u1 - m) - (prim(u1) - prim(m));
        }
        total
    };
    if y <= lo {
        one_sided(lo - y, hi - y)
    } else if y >= hi {
        one_sided(y - hi, y - lo)
    } else {
        one_sided(0.0, hi - y) + one_sided(0.0, y - lo)
    }
}

/// `sup_y ∫₀¹ |R(⌊Nx⌋ − ⌊Ny⌋)/R(N) − |x − y|^ρ| dx`, with the integral
/// exact cell by cell and the supremum over `y = (j + t)/N`,
/// `t ∈ {0, ¼, ½, ¾}`, `j ≤ N/2` (the kernel is symmetric under
/// `x ↦ 1 − x`). This bounds the `L²` operator distance by the Schur test.
pub fn operator_distance_bound(spec: &KernelSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N must be ≥ 1"));
    }
    let rho = spec.rho();
    let denom = spec.r(n as i64);
    let kappa: Vec<f64> = (0..n as i64).map(|h| spec.r(h) / denom).collect();
    let h = 1.0 / n as f64;
    let mut worst: f64 = 0.0;
    for j in 0..=n / 2 {
        for t in [0.0, 0.25, 0.5, 0.75] {
            let y = (j as f64 + t) * h;
            if y > 1.0 {
                continue;
            }
            let jy = j.min(n - 1);
            let total = linalg::compensated_sum((0..n).map(|i| {
                cell_integral(
                    kappa[i.abs_diff(jy)],
                    rho,
                    y,
                    i as f64 * h,
                    (i + 1) as f64 * h,
                )
            }));
            worst = worst.max(total);
        }
    }
    Ok(worst)
}
