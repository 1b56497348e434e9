//! Empirical spectral distributions and top-eigenvalue extraction.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::covariance::{eigenvalues, Matrix, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::lanczos::{lanczos_top, DenseOperator, LanczosOptions};
use crate::linalg::compensated_sum;
use crate::scalar::Scalar;

/// Finitely supported probability measure, stored as `(location, weight)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("a measure needs at least one atom"));
        }
        for &(x, w) in &atoms {
            if !x.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!("bad atom ({x}, {w})")));
            }
        }
        let mass = compensated_sum(atoms.iter().map(|a| a.1));
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {mass}, not 1")));
        }
        Ok(Self { atoms })
    }

    /// Weight `1/len` on each location (repeats are kept as separate atoms).
    pub fn uniform(locations: &[f64]) -> Result<Self> {
        let w = 1.0 / locations.len() as f64;
        Self::new(locations.iter().map(|&x| (x, w)).collect())
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            atoms: alloc::vec![(x, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.1))
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.atoms.iter().map(|&(x, w)| w * f(x)))
    }

    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        compensated_sum(
            self.atoms
                .iter()
                .filter(|a| a.0 >= lo && a.0 < hi)
                .map(|a| a.1),
        )
    }

    pub fn max_location(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_location(&self) -> f64 {
        self.atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min)
    }

    /// Sorts by location and merges neighbours closer than
    /// `rel_tol · max|location|`.
    pub fn merged(&self, rel_tol: f64) -> Self {
        let scale = self
            .atoms
            .iter()
            .map(|a| a.0.abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut sorted = self.atoms.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (x, w) in sorted {
            match out.last_mut() {
                Some(last) if (x - last.0).abs() <= rel_tol * scale => {
                    // weighted mean keeps the first moment exact
                    let total = last.1 + w;
                    if total > 0.0 {
                        last.0 = (last.0 * last.1 + x * w) / total;
                    }
                    last.1 = total;
                }
                _ => out.push((x, w)),
            }
        }
        Self { atoms: out }
    }
}

/// Uniform measure on the eigenvalues.
pub fn esd(dec: &SpectralDecomposition) -> DiscreteMeasure {
    DiscreteMeasure::uniform(&dec.eigenvalues).expect("a decomposition has at least one eigenvalue")
}

/// ESD of the companion `S̲` from the ESD of `S`, with `r_N = N/n`:
/// `(1 − r)δ0 + rμ` when `r ≤ 1`. When `r > 1` the same relation is solved
/// for the zero atom, which needs `μ({0}) ≥ 1 − 1/r`.
pub fn companion_esd(m: &DiscreteMeasure, r: f64) -> Result<DiscreteMeasure> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("ratio must be positive, got {r}")));
    }
    if r == 1.0 {
        return Ok(m.clone());
    }
    let scale = m.atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
    let is_zero = |x: f64| x.abs() <= 1e-10 * scale;
    let zero_mass = compensated_sum(m.atoms.iter().filter(|a| is_zero(a.0)).map(|a| a.1));
    let new_zero = r * zero_mass + (1.0 - r);
    if new_zero < -1e-12 {
        return Err(Error::invalid(format!(
            "zero atom {zero_mass} too light for ratio {r}; need at least {}",
            1.0 - 1.0 / r
        )));
    }
    let mut atoms: Vec<(f64, f64)> = m
        .atoms
        .iter()
        .filter(|a| !is_zero(a.0))
        .map(|&(x, w)| (x, r * w))
        .collect();
    if new_zero > 0.0 {
        atoms.insert(0, (0.0, new_zero));
    }
    Ok(DiscreteMeasure { atoms })
}

/// Two largest eigenvalues from a full (values-only) decomposition.
pub fn top_two(m: &Matrix) -> Result<(f64, f64)> {
    if m.nrows() < 2 {
        return Err(Error::invalid("top_two needs N ≥ 2"));
    }
    let v = eigenvalues(m)?;
    Ok((v[0], v[1]))
}

/// Two largest eigenvalues by Lanczos; `λ2` is found by deflating the
/// `λ1` eigenvector.
pub fn top_two_iterative(m: &Matrix) -> Result<(f64, f64)> {
    if m.nrows() < 2 {
        return Err(Error::invalid("top_two needs N ≥ 2"));
    }
    m.check_hermitian()?;
    match m {
        Matrix::Real(a) => top_two_op(&DenseOperator(a.as_ref())),
        Matrix::Complex(a) => top_two_op(&DenseOperator(a.as_ref())),
    }
}

fn top_two_op<T: Scalar>(op: &DenseOperator<'_, T>) -> Result<(f64, f64)> {
    let opts = LanczosOptions::default();
    let first = lanczos_top(op, 1, &[], opts)?;
    let second = lanczos_top(op, 1, &first.vectors, opts)?;
    Ok((first.values[0], second.values[0]))
}
