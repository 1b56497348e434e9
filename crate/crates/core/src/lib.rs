//! Numerics for the largest eigenvalue of sample covariance matrices
//! `S = (1/n) Γ^{1/2} Z Z* Γ^{1/2}` whose population norm `‖Γ‖` diverges.
//!
//! The crate is `no_std` (it needs `alloc`). It holds the deterministic
//! machinery (population models, the Silverstein fixed point, support
//! boundaries, centering constants, the Toeplitz/integral-operator limits)
//! and the per-replicate sampling kernels. File formats, configuration and
//! the parallel Monte-Carlo runner live in the `topeig` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod covariance;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod lanczos;
pub mod linalg;
pub mod mp;
pub mod sampling;
pub mod scalar;
pub mod spectral;
pub mod stats;

pub use covariance::{
    autocovariance, build_population, decompose, phase_conjugate, population_eigenvalues,
    spectral_gap_ratio, AutocovarianceSpec, Matrix, PopulationModel, SlowlyVarying,
    SpectralDecomposition,
};
pub use error::{Error, Result};
pub use experiment::{compute_f_n, FluctuationRecord, PreparedPopulation};
pub use faer;
pub use kernel::{
    gap_ratio_estimate, gap_ratio_estimate_on, nystrom_limit_eigenpairs, nystrom_limit_eigs,
    operator_distance_bound, widom_shampine_eigs, CertificationStatus, KernelEigenEstimate,
    KernelSpec,
};
pub use mp::{
    beta_n, mp_atom, mp_companion_stieltjes, mp_density, sigma_squared, solve_fixed_point,
    support_complement, support_edge, theta_n, x_of_y, FixedPointSolution, MpParams, SupportQuery,
    SupportScanner,
};
pub use sampling::{
    companion, draw_entries, gaussian_process_matrix, sample_covariance, EntryLaw, RatioRule,
    SampleConfig,
};
pub use scalar::{c64, Scalar};
pub use spectral::{companion_esd, esd, top_two, top_two_iterative, DiscreteMeasure};
pub use stats::{ks_to_normal, normal_cdf, HistogramSummary};
