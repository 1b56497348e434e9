//! Random ingredients: entry matrices `Z`, sample covariance matrices and
//! their companions, and Gaussian process samples `X = T^{1/2} Z`.
//!
//! Every column `j` of `Z` is drawn from its own ChaCha stream keyed by
//! `(seed, replicate_index)` with stream id `j`, so a smaller matrix is
//! always the top-left block of a larger one drawn with the same key and
//! replicates never depend on scheduling.

use alloc::format;

use faer::Mat;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::covariance::{Matrix, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::c64;

/// Bumped whenever the mapping from `(seed, replicate, column)` to random
/// words changes.
pub const STREAM_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryLaw {
    /// `N(0, 1)`.
    RealGaussian,
    /// `(U + iV)` with `U, V ~ N(0, 1/2)`.
    ComplexGaussian,
    /// `E(1) − 1`.
    StdExponential,
    /// Uniform on `{−1, +1}`.
    SymmetricBernoulli,
}

impl EntryLaw {
    pub const ALL: [EntryLaw; 4] = [
        EntryLaw::RealGaussian,
        EntryLaw::ComplexGaussian,
        EntryLaw::StdExponential,
        EntryLaw::SymmetricBernoulli,
    ];

    /// `E|Z|⁴`.
    pub fn fourth_moment(self) -> f64 {
        match self {
            EntryLaw::RealGaussian => 3.0,
            EntryLaw::ComplexGaussian => 2.0,
            EntryLaw::StdExponential => 9.0,
            EntryLaw::SymmetricBernoulli => 1.0,
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, EntryLaw::ComplexGaussian)
    }

    pub fn is_gaussian(self) -> bool {
        matches!(self, EntryLaw::RealGaussian | EntryLaw::ComplexGaussian)
    }

    pub fn name(self) -> &'static str {
        match self {
            EntryLaw::RealGaussian => "real_gaussian",
            EntryLaw::ComplexGaussian => "complex_gaussian",
            EntryLaw::StdExponential => "std_exponential",
            EntryLaw::SymmetricBernoulli => "symmetric_bernoulli",
        }
    }

    fn draw_real<R: RngCore>(self, rng: &mut R) -> f64 {
        match self {
            EntryLaw::RealGaussian => rng.sample(StandardNormal),
            EntryLaw::StdExponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            EntryLaw::SymmetricBernoulli => {
                if rng.next_u32() & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::ComplexGaussian => unreachable!("complex law drawn as real"),
        }
    }

    fn draw_complex<R: RngCore>(self, rng: &mut R) -> c64 {
        match self {
            EntryLaw::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c64::new(re, im).scale(core::f64::consts::FRAC_1_SQRT_2)
            }
            other => c64::new(other.draw_real(rng), 0.0),
        }
    }
}

/// How `n` follows from `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioRule {
    Explicit(usize),
    /// `n = ⌊N/r⌋`.
    TargetRatio(f64),
}

impl RatioRule {
    pub fn columns(self, rows: usize) -> Result<usize> {
        let n = match self {
            RatioRule::Explicit(n) => n,
            RatioRule::TargetRatio(r) if r > 0.0 && r.is_finite() => {
                (rows as f64 / r).floor() as usize
            }
            RatioRule::TargetRatio(r) => {
                return Err(Error::invalid(format!(
                    "target ratio must be positive, got {r}"
                )))
            }
        };
        if n == 0 {
            return Err(Error::invalid("the number of samples n must be ≥ 1"));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub replicate_index: u64,
}

impl SampleConfig {
    pub fn new(rows: usize, rule: RatioRule, seed: u64, replicate_index: u64) -> Result<Self> {
        if rows == 0 {
            return Err(Error::invalid("N must be ≥ 1"));
        }
        Ok(Self {
            rows,
            cols: rule.columns(rows)?,
            seed,
            replicate_index,
        })
    }

    /// `r_N = N/n`.
    pub fn ratio(&self) -> f64 {
        self.rows as f64 / self.cols as f64
    }

    fn column_rng(&self, column: usize) -> ChaCha8Rng {
        let mut state = SplitMix64(STREAM_VERSION ^ 0xA076_1D64_78BD_642F);
        state.absorb(self.seed);
        state.absorb(self.replicate_index);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&state.next().to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(column as u64);
        rng
    }
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn absorb(&mut self, word: u64) {
        let mixed = self.next();
        self.0 ^= word.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ mixed;
    }
}

/// Real `N × n` draw; `law` must be real.
pub fn draw_real(law: EntryLaw, cfg: &SampleConfig) -> Mat<f64> {
    assert!(!law.is_complex());
    let mut z = Mat::<f64>::zeros(cfg.rows, cfg.cols);
    for j in 0..cfg.cols {
        let mut rng = cfg.column_rng(j);
        for v in z.col_as_slice_mut(j) {
            *v = law.draw_real(&mut rng);
        }
    }
    z
}

/// Complex `N × n` draw; real laws give real-valued complex entries.
pub fn draw_complex(law: EntryLaw, cfg: &SampleConfig) -> Mat<c64> {
    let mut z = Mat::<c64>::zeros(cfg.rows, cfg.cols);
    for j in 0..cfg.cols {
        let mut rng = cfg.column_rng(j);
        for v in z.col_as_slice_mut(j) {
            *v = law.draw_complex(&mut rng);
        }
    }
    z
}

/// `N × n` matrix of i.i.d. entries following `law`.
pub fn draw_entries(law: EntryLaw, cfg: &SampleConfig) -> Matrix {
    if law.is_complex() {
        Matrix::Complex(draw_complex(law, cfg))
    } else {
        Matrix::Real(draw_real(law, cfg))
    }
}

fn check_product(root: &Matrix, z: &Matrix) -> Result<()> {
    if root.nrows() != root.ncols() || root.ncols() != z.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "population factor is {}x{} but Z is {}x{}",
            root.nrows(),
            root.ncols(),
            z.nrows(),
            z.ncols()
        )));
    }
    Ok(())
}

/// `S = (1/n) Γ^{1/2} Z Z* Γ^{1/2}`, symmetrized.
pub fn sample_covariance(gamma_half: &Matrix, z: &Matrix) -> Result<Matrix> {
    check_product(gamma_half, z)?;
    let scale = 1.0 / z.ncols() as f64;
    Ok(match (gamma_half, z) {
        (Matrix::Real(g), Matrix::Real(z)) => {
            let x = linalg::product(g.as_ref(), z.as_ref(), 1.0);
            Matrix::Real(linalg::gram(x.as_ref(), scale))
        }
        _ => {
            let x = linalg::product(
                gamma_half.to_complex().as_ref(),
                z.to_complex().as_ref(),
                1.0,
            );
            Matrix::Complex(linalg::gram(x.as_ref(), scale))
        }
    })
}

/// Companion `S̲ = (1/n) Z* Γ Z` (`n × n`), symmetrized.
pub fn companion(gamma: &Matrix, z: &Matrix) -> Result<Matrix> {
    check_product(gamma, z)?;
    let scale = 1.0 / z.ncols() as f64;
    Ok(match (gamma, z) {
        (Matrix::Real(g), Matrix::Real(z)) => {
            Matrix::Real(linalg::congruence(z.as_ref(), g.as_ref(), scale))
        }
        _ => Matrix::Complex(linalg::congruence(
            z.to_complex().as_ref(),
            gamma.to_complex().as_ref(),
            scale,
        )),
    })
}

/// `N × n` matrix whose columns are i.i.d. centered Gaussian vectors with
/// covariance `T`, built as `T^{1/2} Z` (exact also for singular `T`).
pub fn gaussian_process_matrix(
    t: &SpectralDecomposition,
    law: EntryLaw,
    cfg: &SampleConfig,
) -> Result<Matrix> {
    if !law.is_gaussian() {
        return Err(Error::invalid(format!(
            "process samples need a Gaussian law, got {}",
            law.name()
        )));
    }
    if cfg.rows != t.dim() {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {0}x{0} but {1} rows were requested",
            t.dim(),
            cfg.rows
        )));
    }
    let root = t.sqrt();
    let z = draw_entries(law, cfg);
    Ok(match (&root, &z) {
        (Matrix::Real(r), Matrix::Real(z)) => {
            Matrix::Real(linalg::product(r.as_ref(), z.as_ref(), 1.0))
        }
        _ => Matrix::Complex(linalg::product(
            root.to_complex().as_ref(),
            z.to_complex().as_ref(),
            1.0,
        )),
    })
}
