//! Population covariance models `Γ_N`: explicit, diagonal, spiked and
//! Toeplitz autocovariance matrices of long-memory processes.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{c64, Scalar};

/// Slowly varying factor `L` of an autocovariance `γ(h) = L(h)/(1+|h|)^{1−2d}`.
///
/// Closed on purpose so experiment files stay serializable. New families are
/// added as variants together with their [`SlowlyVarying::eval`] arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlowlyVarying {
    /// `L ≡ c`, `c > 0`.
    Constant { c: f64 },
    /// `L(h) = log^p(2 + |h|)`.
    LogPower { p: f64 },
}

impl Default for SlowlyVarying {
    fn default() -> Self {
        SlowlyVarying::Constant { c: 1.0 }
    }
}

impl SlowlyVarying {
    pub fn eval(&self, h: u64) -> f64 {
        match *self {
            SlowlyVarying::Constant { c } => c,
            SlowlyVarying::LogPower { p } => (2.0 + h as f64).ln().powf(p),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SlowlyVarying::Constant { c } if !(c > 0.0 && c.is_finite()) => Err(Error::invalid(
                format!("constant slowly varying factor must be > 0, got {c}"),
            )),
            SlowlyVarying::LogPower { p } if !p.is_finite() => {
                Err(Error::invalid("log-power exponent must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Long-memory autocovariance with memory exponent `d ∈ (0, 1/2)` and an
/// optional phase modulation `γ(h)·e^{ihθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocovarianceSpec {
    pub d: f64,
    pub slowly_varying: SlowlyVarying,
    pub theta: f64,
}

impl AutocovarianceSpec {
    pub fn new(d: f64, slowly_varying: SlowlyVarying, theta: f64) -> Result<Self> {
        let spec = Self {
            d,
            slowly_varying,
            theta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `γ(h) = 1/(1+|h|)^{1−2d}`.
    pub fn pure(d: f64) -> Result<Self> {
        Self::new(d, SlowlyVarying::default(), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d < 0.5) {
            return Err(Error::invalid(format!(
                "memory exponent d must lie in (0, 1/2), got {}",
                self.d
            )));
        }
        if !(self.theta > -PI && self.theta <= PI) {
            return Err(Error::invalid(format!(
                "phase θ must lie in (−π, π], got {}",
                self.theta
            )));
        }
        self.slowly_varying.validate()
    }

    /// Regular-variation index `ρ = 2d − 1`.
    pub fn rho(&self) -> f64 {
        2.0 * self.d - 1.0
    }

    /// `|γ(h)|`, i.e. the autocovariance without its phase.
    pub fn magnitude(&self, h: i64) -> f64 {
        let a = h.unsigned_abs();
        self.slowly_varying.eval(a) * (1.0 + a as f64).powf(self.rho())
    }

    pub fn is_real(&self) -> bool {
        self.theta == 0.0 || self.theta == PI
    }
}

/// `γ(h) = L(|h|)/(1+|h|)^{1−2d} · e^{ihθ}`.
pub fn autocovariance(spec: &AutocovarianceSpec, h: i64) -> c64 {
    let m = spec.magnitude(h);
    if spec.theta == 0.0 {
        c64::new(m, 0.0)
    } else {
        let phase = h as f64 * spec.theta;
        c64::new(m * phase.cos(), m * phase.sin())
    }
}

/// Dense matrix stored as real when possible, complex otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Real(m) => m.nrows(),
            Matrix::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Real(m) => m.ncols(),
            Matrix::Complex(m) => m.ncols(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Matrix::Complex(_))
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        match self {
            Matrix::Real(m) => c64::new(m[(i, j)], 0.0),
            Matrix::Complex(m) => m[(i, j)],
        }
    }

    pub fn to_complex(&self) -> Mat<c64> {
        match self {
            Matrix::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0)),
            Matrix::Complex(m) => m.clone(),
        }
    }

    pub fn hermitian_defect(&self) -> f64 {
        match self {
            Matrix::Real(m) => linalg::hermitian_defect(m.as_ref()),
            Matrix::Complex(m) => linalg::hermitian_defect(m.as_ref()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Matrix::Real(m) => linalg::max_abs(m.as_ref()),
            Matrix::Complex(m) => linalg::max_abs(m.as_ref()),
        }
    }

    /// Entrywise max distance; complex comparison when either side is complex.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        let (r, c) = (self.nrows(), self.ncols());
        let mut worst = 0.0f64;
        for j in 0..c {
            for i in 0..r {
                worst = worst.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        worst
    }

    pub fn diagonal(values: &[f64]) -> Matrix {
        let n = values.len();
        Matrix::Real(Mat::from_fn(
            n,
            n,
            |i, j| if i == j { values[i] } else { 0.0 },
        ))
    }

    pub fn check_hermitian(&self) -> Result<()> {
        check_square(self)?;
        let defect = self.hermitian_defect();
        if defect > 1e-12 * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { asymmetry: defect });
        }
        Ok(())
    }
}

fn check_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// A population covariance specification.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationModel {
    Explicit(Matrix),
    Diagonal(Vec<f64>),
    Toeplitz {
        spec: AutocovarianceSpec,
        n: usize,
    },
    Spiked {
        spikes: Vec<f64>,
        bulk: f64,
        n: usize,
    },
}

impl PopulationModel {
    pub fn dim(&self) -> usize {
        match self {
            PopulationModel::Explicit(m) => m.nrows(),
            PopulationModel::Diagonal(v) => v.len(),
            PopulationModel::Toeplitz { n, .. } | PopulationModel::Spiked { n, .. } => *n,
        }
    }

    pub fn is_complex(&self) -> bool {
        match self {
            PopulationModel::Explicit(m) => m.is_complex(),
            PopulationModel::Toeplitz { spec, .. } => spec.theta != 0.0 && spec.theta != PI,
            _ => false,
        }
    }

    /// `Γ` is already diagonal in the canonical basis.
    pub fn is_diagonal(&self) -> bool {
        matches!(
            self,
            PopulationModel::Diagonal(_) | PopulationModel::Spiked { .. }
        )
    }

    /// Diagonal entries for the diagonal kinds.
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        match self {
            PopulationModel::Diagonal(v) => Some(v.clone()),
            PopulationModel::Spiked { spikes, bulk, n } => {
                let mut v = spikes.clone();
                v.resize(*n, *bulk);
                Some(v)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::invalid("population dimension must be positive"));
        }
        match self {
            PopulationModel::Explicit(m) => m.check_hermitian(),
            PopulationModel::Toeplitz { spec, .. } => spec.validate(),
            PopulationModel::Spiked { spikes, n, .. } if spikes.len() > *n => Err(Error::invalid(
                format!("{} spikes do not fit in dimension {n}", spikes.len()),
            )),
            _ => {
                let entries = self.diagonal_entries().unwrap_or_default();
                match entries.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    Some(v) => Err(Error::invalid(format!(
                        "diagonal entries must be finite and ≥ 0, got {v}"
                    ))),
                    None => Ok(()),
                }
            }
        }
    }
}

/// Materializes `Γ_N`; Toeplitz entries are `(i, j) ↦ γ(i − j)`.
pub fn build_population(model: &PopulationModel) -> Result<Matrix> {
    model.validate()?;
    Ok(match model {
        PopulationModel::Explicit(m) => m.clone(),
        PopulationModel::Diagonal(_) | PopulationModel::Spiked { .. } => {
            Matrix::diagonal(&model.diagonal_entries().unwrap_or_default())
        }
        PopulationModel::Toeplitz { spec, n } => {
            let n = *n;
            let column: Vec<c64> = (0..n as i64).map(|h| autocovariance(spec, h)).collect();
            if spec.is_real() {
                Matrix::Real(Mat::from_fn(n, n, |i, j| column[i.abs_diff(j)].re))
            } else {
                Matrix::Complex(Mat::from_fn(n, n, |i, j| {
                    let v = column[i.abs_diff(j)];
                    if i >= j {
                        v
                    } else {
                        v.conj()
                    }
                }))
            }
        }
    })
}

/// Eigenvalues (descending, PSD-clamped) with aligned unitary eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `U diag(f(λ_k)) U*`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        match &self.eigenvectors {
            Matrix::Real(u) => Matrix::Real(weighted_outer(u, &weights)),
            Matrix::Complex(u) => Matrix::Complex(weighted_outer(u, &weights)),
        }
    }

    pub fn reconstruct(&self) -> Matrix {
        self.apply_function(|l| l)
    }

    /// `Γ^{1/2} = U diag(√λ_k) U*`.
    pub fn sqrt(&self) -> Matrix {
        self.apply_function(|l| l.sqrt())
    }

    /// `‖U U* − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let uu = match &self.eigenvectors {
            Matrix::Real(u) => Matrix::Real(linalg::gram(u.as_ref(), 1.0)),
            Matrix::Complex(u) => Matrix::Complex(linalg::gram(u.as_ref(), 1.0)),
        };
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((uu.get(i, j) - c64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

fn weighted_outer<T: Scalar>(u: &Mat<T>, weights: &[f64]) -> Mat<T> {
    let n = u.nrows();
    let scaled = Mat::<T>::from_fn(n, weights.len(), |i, k| u[(i, k)].scale(weights[k]));
    let mut out = Mat::<T>::zeros(n, n);
    faer::linalg::matmul::matmul(
        out.as_mut(),
        faer::Accum::Replace,
        scaled.as_ref(),
        u.as_ref().adjoint(),
        T::from_re(1.0),
        faer::Par::Seq,
    );
    linalg::symmetrize(&mut out);
    out
}

/// Clamps eigenvalues in `(−τ, 0)` to zero, `τ = 1e−9·λ1`; anything more
/// negative is rejected.
fn clamp_psd(values: &mut [f64]) -> Result<()> {
    let top = values.first().copied().unwrap_or(0.0);
    let tau = 1e-9 * top.max(0.0);
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v > -tau || (top <= 0.0 && *v > -1e-300) {
                *v = 0.0;
            } else {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *v });
            }
        }
    }
    Ok(())
}

pub fn decompose(gamma: &Matrix) -> Result<SpectralDecomposition> {
    gamma.check_hermitian()?;
    let (mut eigenvalues, eigenvectors) = match gamma {
        Matrix::Real(m) => {
            let (v, u) = linalg::eigh(m.as_ref())?;
            (v, Matrix::Real(u))
        }
        Matrix::Complex(m) => {
            let (v, u) = linalg::eigh(m.as_ref())?;
            (v, Matrix::Complex(u))
        }
    };
    clamp_psd(&mut eigenvalues)?;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (descending, PSD-clamped).
pub fn eigenvalues(gamma: &Matrix) -> Result<Vec<f64>> {
    gamma.check_hermitian()?;
    let mut values = match gamma {
        Matrix::Real(m) => linalg::eigvalsh(m.as_ref())?,
        Matrix::Complex(m) => linalg::eigvalsh(m.as_ref())?,
    };
    clamp_psd(&mut values)?;
    Ok(values)
}

/// Eigenvalues of a population model without materializing eigenvectors;
/// diagonal kinds are sorted rather than eigensolved.
pub fn population_eigenvalues(model: &PopulationModel) -> Result<Vec<f64>> {
    model.validate()?;
    if let Some(mut v) = model.diagonal_entries() {
        v.sort_by(|a, b| b.total_cmp(a));
        return Ok(v);
    }
    eigenvalues(&build_population(model)?)
}

/// `λ2/λ1`.
pub fn spectral_gap_ratio(dec: &SpectralDecomposition) -> Result<f64> {
    gap_ratio_of(&dec.eigenvalues)
}

pub(crate) fn gap_ratio_of(eigs: &[f64]) -> Result<f64> {
    if eigs.len() < 2 {
        return Err(Error::invalid("spectral gap ratio needs N ≥ 2"));
    }
    if eigs[0] <= 0.0 {
        return Err(Error::invalid("spectral gap ratio needs λ1 > 0"));
    }
    Ok((eigs[1] / eigs[0]).clamp(0.0, 1.0))
}

/// `Σ^θ Γ (Σ^θ)*` with `Σ^θ = diag(e^{ikθ})`.
pub fn phase_conjugate(gamma: &Matrix, theta: f64) -> Matrix {
    let n = gamma.nrows();
    if theta == 0.0 {
        return gamma.clone();
    }
    if theta == PI {
        let sign = |i: usize, j: usize| if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
        return match gamma {
            Matrix::Real(m) => Matrix::Real(Mat::from_fn(n, n, |i, j| sign(i, j) * m[(i, j)])),
            Matrix::Complex(m) => {
                Matrix::Complex(Mat::from_fn(n, n, |i, j| m[(i, j)].scale(sign(i, j))))
            }
        };
    }
    let phase: Vec<c64> = (0..n)
        .map(|k| c64::from_polar(1.0, k as f64 * theta))
        .collect();
    Matrix::Complex(Mat::from_fn(n, n, |i, j| {
        phase[i] * gamma.get(i, j) * phase[j].conj()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pure(d: f64) -> AutocovarianceSpec {
        AutocovarianceSpec::pure(d).unwrap()
    }

    #[test]
    fn autocovariance_values() {
        let s = pure(0.125);
        assert_eq!(autocovariance(&s, 0), c64::new(1.0, 0.0));
        assert_relative_eq!(autocovariance(&s, 1).re, 2f64.powf(-0.75), epsilon = 1e-15);
        assert_relative_eq!(autocovariance(&s, 1).re, 0.594604, epsilon = 1e-6);
        assert_relative_eq!(autocovariance(&s, -2).re, 0.438691, epsilon = 1e-6);
        assert_eq!(autocovariance(&s, -7), autocovariance(&s, 7));
    }

    #[test]
    fn autocovariance_phase_and_log_power() {
        let s = AutocovarianceSpec::new(0.25, SlowlyVarying::LogPower { p: 1.0 }, 0.5).unwrap();
        let g = autocovariance(&s, 3);
        let expected = 5f64.ln() / 2.0;
        assert_relative_eq!(g.norm(), expected, epsilon = 1e-14);
        assert_relative_eq!(g.arg(), 1.5, epsilon = 1e-14);
        assert_eq!(autocovariance(&s, -3), g.conj());
        assert!(autocovariance(&s, 0).re > 0.0);
    }

    #[test]
    fn spec_rejects_bad_parameters() {
        assert!(AutocovarianceSpec::pure(0.5).is_err());
        assert!(AutocovarianceSpec::pure(0.0).is_err());
        assert!(AutocovarianceSpec::new(0.2, SlowlyVarying::Constant { c: 0.0 }, 0.0).is_err());
        assert!(AutocovarianceSpec::new(0.2, SlowlyVarying::default(), -PI).is_err());
        assert!(AutocovarianceSpec::new(0.2, SlowlyVarying::default(), PI).is_ok());
    }

    #[test]
    fn build_toeplitz_two_by_two() {
        let m = build_population(&PopulationModel::Toeplitz {
            spec: pure(0.125),
            n: 2,
        })
        .unwrap();
        let Matrix::Real(m) = m else {
            panic!("expected real")
        };
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 1)], 1.0);
        assert_relative_eq!(m[(0, 1)], 2f64.powf(-0.75), epsilon = 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn build_spiked_and_rejections() {
        let m = build_population(&PopulationModel::Spiked {
            spikes: vec![5.0],
            bulk: 1.0,
            n: 3,
        })
        .unwrap();
        assert_eq!(m, Matrix::diagonal(&[5.0, 1.0, 1.0]));

        let skew = Matrix::Real(Mat::from_fn(2, 2, |i, j| (i + 2 * j) as f64));
        assert!(matches!(
            build_population(&PopulationModel::Explicit(skew)),
            Err(Error::NotHermitian { .. })
        ));
        assert!(build_population(&PopulationModel::Diagonal(vec![1.0, -0.5])).is_err());
    }

    #[test]
    fn decompose_small_cases() {
        let dec = decompose(&Matrix::diagonal(&[5.0, 1.0, 1.0])).unwrap();
        assert_eq!(dec.eigenvalues, vec![5.0, 1.0, 1.0]);
        let Matrix::Real(u) = &dec.eigenvectors else {
            panic!()
        };
        assert_relative_eq!(u[(0, 0)].abs(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(spectral_gap_ratio(&dec).unwrap(), 0.2, epsilon = 1e-15);

        let m = Matrix::Real(Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 }));
        let dec = decompose(&m).unwrap();
        assert_relative_eq!(dec.eigenvalues[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(dec.eigenvalues[1], 1.0, epsilon = 1e-14);
        assert!(dec.unitarity_defect() < 1e-14);
        assert!(dec.reconstruct().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn gap_ratio_edge_cases() {
        let dec = decompose(&Matrix::diagonal(&[2.0, 2.0])).unwrap();
        assert_eq!(spectral_gap_ratio(&dec).unwrap(), 1.0);
        assert!(spectral_gap_ratio(&decompose(&Matrix::diagonal(&[2.0])).unwrap()).is_err());
        assert!(spectral_gap_ratio(&decompose(&Matrix::diagonal(&[0.0, 0.0])).unwrap()).is_err());
    }

    #[test]
    fn psd_clamp_and_rejection() {
        let mut v = vec![1.0, -1e-12, 0.5];
        clamp_psd(&mut v).unwrap();
        assert_eq!(v[1], 0.0);
        let m = Matrix::Real(Mat::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 1.0 }));
        assert!(matches!(
            decompose(&m),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn phase_conjugation() {
        let t = build_population(&PopulationModel::Toeplitz {
            spec: pure(0.125),
            n: 6,
        })
        .unwrap();
        assert_eq!(phase_conjugate(&t, 0.0), t);
        let flipped = phase_conjugate(&t, PI);
        assert!(!flipped.is_complex());
        for i in 0..6 {
            for j in 0..6 {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(flipped.get(i, j).re, sign * t.get(i, j).re);
            }
        }
        let base = decompose(&t).unwrap().eigenvalues;
        for theta in [PI, 0.3, -2.0] {
            let rotated = decompose(&phase_conjugate(&t, theta)).unwrap().eigenvalues;
            for (a, b) in base.iter().zip(&rotated) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn toeplitz_with_phase_equals_conjugated_toeplitz() {
        let theta = 0.7;
        let spec = AutocovarianceSpec::new(0.2, SlowlyVarying::default(), theta).unwrap();
        let direct = build_population(&PopulationModel::Toeplitz { spec, n: 5 }).unwrap();
        let base = build_population(&PopulationModel::Toeplitz {
            spec: pure(0.2),
            n: 5,
        })
        .unwrap();
        assert!(direct.max_abs_diff(&phase_conjugate(&base, theta)) < 1e-14);
    }
}
