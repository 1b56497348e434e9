//! Per-replicate kernels of the Monte-Carlo experiments: a population with
//! its cached square root, `λmax(S_N)` for one draw of `Z`, and the
//! centered fluctuation `F_N`.

use alloc::format;
use alloc::vec::Vec;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::covariance::{decompose, gap_ratio_of, population_eigenvalues, Matrix, PopulationModel};
use crate::error::{Error, Result};
use crate::lanczos::{lanczos_top, HermitianOperator, LanczosOptions};
use crate::linalg;
use crate::mp::beta_n;
use crate::sampling::{draw_complex, draw_real, sample_covariance, EntryLaw, SampleConfig};
use crate::scalar::{c64, Scalar};

/// One replicate of the fluctuation experiment. `f_n` is reproducible as
/// `√n (lambda_max/lambda_max_gamma − 1 − beta_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRecord {
    pub seed: u64,
    pub replicate_index: u64,
    pub n: usize,
    pub lambda_max: f64,
    pub lambda_max_gamma: f64,
    pub beta_n: f64,
    /// `1 + β_N`, the centering on the spectrum normalized to `λ1 = 1`.
    pub theta_n: f64,
    pub f_n: f64,
}

impl FluctuationRecord {
    pub fn recompute_f_n(&self) -> f64 {
        (self.n as f64).sqrt() * (self.lambda_max / self.lambda_max_gamma - 1.0 - self.beta_n)
    }
}

/// `F_N = √n (λmax(S)/λmax(Γ) − 1 − β_N)` from the population eigenvalues.
pub fn compute_f_n(
    lambda_max_s: f64,
    population_eigenvalues: &[f64],
    n: usize,
) -> Result<FluctuationRecord> {
    if !lambda_max_s.is_finite() {
        return Err(Error::invalid(format!(
            "λmax(S) = {lambda_max_s} is not finite"
        )));
    }
    let beta = beta_n(population_eigenvalues, n)?;
    let lambda_max_gamma = population_eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut record = FluctuationRecord {
        seed: 0,
        replicate_index: 0,
        n,
        lambda_max: lambda_max_s,
        lambda_max_gamma,
        beta_n: beta,
        theta_n: 1.0 + beta,
        f_n: 0.0,
    };
    record.f_n = record.recompute_f_n();
    Ok(record)
}

#[derive(Debug, Clone)]
enum Root {
    /// `Γ` diagonal in the canonical basis: `√Γ_ii` in model order.
    Diagonal(Vec<f64>),
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// A population covariance with everything replicates need precomputed:
/// its eigenvalues (descending) and `Γ^{1/2}`.
#[derive(Debug, Clone)]
pub struct PreparedPopulation {
    eigenvalues: Vec<f64>,
    root: Root,
}

impl PreparedPopulation {
    /// With `diagonalize`, a non-diagonal `Γ` is replaced by
    /// `diag(λ1 ≥ … ≥ λN)`.
    pub fn new(model: &PopulationModel, diagonalize: bool) -> Result<Self> {
        model.validate()?;
        if let Some(entries) = model.diagonal_entries() {
            let mut eigenvalues = entries.clone();
            eigenvalues.sort_by(|a, b| b.total_cmp(a));
            return Ok(Self {
                eigenvalues,
                root: Root::Diagonal(entries.iter().map(|v| v.sqrt()).collect()),
            });
        }
        if diagonalize {
            return Self::from_eigenvalues(population_eigenvalues(model)?);
        }
        let dec = decompose(&crate::covariance::build_population(model)?)?;
        let root = match dec.sqrt() {
            Matrix::Real(m) => Root::Real(m),
            Matrix::Complex(m) => Root::Complex(m),
        };
        Ok(Self {
            eigenvalues: dec.eigenvalues,
            root,
        })
    }

    /// `Γ = diag(eigenvalues)` in the given order.
    pub fn from_eigenvalues(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("population dimension must be positive"));
        }
        if let Some(v) = eigenvalues.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "eigenvalues must be finite and ≥ 0, got {v}"
            )));
        }
        let root = Root::Diagonal(eigenvalues.iter().map(|v| v.sqrt()).collect());
        let mut sorted = eigenvalues;
        sorted.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            eigenvalues: sorted,
            root,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.root, Root::Diagonal(_))
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.root, Root::Complex(_))
    }

    /// `λ2/λ1`.
    pub fn gap_ratio(&self) -> Result<f64> {
        gap_ratio_of(&self.eigenvalues)
    }

    pub fn beta_n(&self, n: usize) -> Result<f64> {
        beta_n(&self.eigenvalues, n)
    }

    /// `Γ^{1/2}` as a dense matrix.
    pub fn half(&self) -> Matrix {
        match &self.root {
            Root::Diagonal(d) => Matrix::Real(Mat::from_fn(d.len(), d.len(), |i, j| {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            })),
            Root::Real(m) => Matrix::Real(m.clone()),
            Root::Complex(m) => Matrix::Complex(m.clone()),
        }
    }

    fn check(&self, cfg: &SampleConfig) -> Result<()> {
        if cfg.rows != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "population has dimension {} but N = {}",
                self.dim(),
                cfg.rows
            )));
        }
        Ok(())
    }

    /// `λmax(S_N)` for the draw `(law, cfg)`, without forming `S_N`.
    pub fn lambda_max_sample(&self, law: EntryLaw, cfg: &SampleConfig) -> Result<f64> {
        self.check(cfg)?;
        let opts = LanczosOptions::default();
        let top = if law.is_complex() || self.is_complex() {
            let z = draw_complex(law, cfg);
            let promoted;
            let root = match &self.root {
                Root::Diagonal(d) => RootRef::Diagonal(d),
                Root::Complex(m) => RootRef::Dense(m.as_ref()),
                Root::Real(m) => {
                    promoted =
                        Mat::<c64>::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0));
                    RootRef::Dense(promoted.as_ref())
                }
            };
            lanczos_top(&SampleOperator::new(root, z.as_ref()), 1, &[], opts)?.values
        } else {
            let z = draw_real(law, cfg);
            let root = match &self.root {
                Root::Diagonal(d) => RootRef::Diagonal(d),
                Root::Real(m) => RootRef::Dense(m.as_ref()),
                Root::Complex(_) => unreachable!(),
            };
            lanczos_top(&SampleOperator::new(root, z.as_ref()), 1, &[], opts)?.values
        };
        Ok(top[0].max(0.0))
    }

    /// `F_N` for the draw `(law, cfg)`.
    pub fn fluctuation(&self, law: EntryLaw, cfg: &SampleConfig) -> Result<FluctuationRecord> {
        let lambda = self.lambda_max_sample(law, cfg)?;
        let mut record = compute_f_n(lambda, &self.eigenvalues, cfg.cols)?;
        record.seed = cfg.seed;
        record.replicate_index = cfg.replicate_index;
        Ok(record)
    }

    /// `(Z, S_N)` materialized, for debugging dumps.
    pub fn sample_matrices(&self, law: EntryLaw, cfg: &SampleConfig) -> Result<(Matrix, Matrix)> {
        self.check(cfg)?;
        let z = if law.is_complex() || self.is_complex() {
            Matrix::Complex(draw_complex(law, cfg))
        } else {
            Matrix::Real(draw_real(law, cfg))
        };
        let s = sample_covariance(&self.half(), &z)?;
        Ok((z, s))
    }
}

#[derive(Clone, Copy)]
enum RootRef<'a, T> {
    Diagonal(&'a [f64]),
    Dense(MatRef<'a, T>),
}

impl<T: Scalar> RootRef<'_, T> {
    fn apply(&self, x: &[T], y: &mut [T]) {
        match self {
            RootRef::Diagonal(d) => {
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(d.iter()) {
                    *yi = xi.scale(*di);
                }
            }
            RootRef::Dense(m) => linalg::matvec(*m, x, y),
        }
    }
}

/// `v ↦ (1/n) H Z Z* H v` on the smaller of the two sides (the companion
/// `(1/n) Z* H² Z` when `N > n`), `H = Γ^{1/2}`.
struct SampleOperator<'a, T> {
    root: RootRef<'a, T>,
    z: MatRef<'a, T>,
    inv_n: f64,
    companion: bool,
}

impl<'a, T: Scalar> SampleOperator<'a, T> {
    fn new(root: RootRef<'a, T>, z: MatRef<'a, T>) -> Self {
        Self {
            root,
            z,
            inv_n: 1.0 / z.ncols() as f64,
            companion: z.nrows() > z.ncols(),
        }
    }
}

impl<T: Scalar> HermitianOperator<T> for SampleOperator<'_, T> {
    fn dim(&self) -> usize {
        if self.companion {
            self.z.ncols()
        } else {
            self.z.nrows()
        }
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let (rows, cols) = (self.z.nrows(), self.z.ncols());
        if self.companion {
            let mut u = alloc::vec![T::default(); rows];
            let mut w = alloc::vec![T::default(); rows];
            linalg::matvec(self.z, x, &mut u);
            self.root.apply(&u, &mut w);
            self.root.apply(&w, &mut u);
            linalg::adjoint_matvec(self.z, &u, y);
        } else {
            let mut u = alloc::vec![T::default(); rows];
            let mut v = alloc::vec![T::default(); cols];
            self.root.apply(x, &mut u);
            linalg::adjoint_matvec(self.z, &u, &mut v);
            linalg::matvec(self.z, &v, &mut u);
            self.root.apply(&u, y);
        }
        for yi in y.iter_mut() {
            *yi = yi.scale(self.inv_n);
        }
    }
}
