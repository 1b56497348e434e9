use proptest::prelude::*;
use topeig_core::covariance::eigenvalues;
use topeig_core::{
    build_population, decompose, draw_entries, gaussian_process_matrix, AutocovarianceSpec,
    EntryLaw, Matrix, PopulationModel, SampleConfig,
};

fn cfg(rows: usize, cols: usize, seed: u64) -> SampleConfig {
    SampleConfig {
        rows,
        cols,
        seed,
        replicate_index: 0,
    }
}

#[test]
fn entry_moments_over_a_million_draws() {
    for law in EntryLaw::ALL {
        let z = draw_entries(law, &cfg(1000, 1000, 11));
        let n = 1e6;
        let (mut m1, mut m2, mut m4) = (topeig_core::c64::new(0.0, 0.0), 0.0, 0.0);
        for j in 0..1000 {
            for i in 0..1000 {
                let v = z.get(i, j);
                m1 += v;
                m2 += v.norm_sqr();
                m4 += v.norm_sqr() * v.norm_sqr();
            }
        }
        let (m1, m2, m4) = (m1 / n, m2 / n, m4 / n);
        // standard errors: 1e-3 for the mean, √(E|Z|⁴−1)/1e3 for the second moment
        assert!(m1.norm() < 5e-3, "{law:?} mean {m1}");
        assert!(
            (m2 - 1.0).abs() < 5.0 * (law.fourth_moment() - 1.0).max(1e-6).sqrt() / 1e3 + 1e-12,
            "{law:?} {m2}"
        );
        let rel = (m4 - law.fourth_moment()).abs() / law.fourth_moment();
        let tol = if law == EntryLaw::StdExponential {
            0.05
        } else {
            0.01
        };
        assert!(rel < tol, "{law:?} fourth moment {m4}");
    }
}

#[test]
fn process_samples_have_the_toeplitz_covariance() {
    let spec = AutocovarianceSpec::pure(0.125).unwrap();
    let rows = 6;
    let gamma = build_population(&PopulationModel::Toeplitz { spec, n: rows }).unwrap();
    let dec = decompose(&gamma).unwrap();
    let cols = 200_000;
    let x = gaussian_process_matrix(&dec, EntryLaw::RealGaussian, &cfg(rows, cols, 5)).unwrap();
    for (a, b) in [(0, 0), (0, 1), (2, 3), (1, 4)] {
        let emp: f64 = (0..cols)
            .map(|j| (x.get(a, j) * x.get(b, j)).re)
            .sum::<f64>()
            / cols as f64;
        let truth = gamma.get(a, b).re;
        assert!(
            (emp - truth).abs() < 0.02,
            "cov({a},{b}) = {emp}, expected {truth}"
        );
    }
    // lag-1 autocovariance γ(1) = 2^{2d−1}
    let lag1 = 2f64.powf(2.0 * 0.125 - 1.0);
    let emp: f64 = (0..cols)
        .map(|j| x.get(3, j).re * x.get(4, j).re)
        .sum::<f64>()
        / cols as f64;
    assert!((emp - lag1).abs() < 0.02);
}

#[test]
fn rejects_non_gaussian_process_laws() {
    let dec = decompose(&Matrix::diagonal(&[1.0, 2.0])).unwrap();
    assert!(gaussian_process_matrix(&dec, EntryLaw::SymmetricBernoulli, &cfg(2, 3, 1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn toeplitz_populations_are_psd(d in 0.01f64..0.49, n in 2usize..80, theta in -3.0f64..3.0) {
        let spec = AutocovarianceSpec::new(d, Default::default(), theta).unwrap();
        let gamma = build_population(&PopulationModel::Toeplitz { spec, n }).unwrap();
        let eigs = eigenvalues(&gamma).unwrap();
        prop_assert!(eigs.iter().all(|&l| l >= 0.0));
        prop_assert!(eigs.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn replicates_never_share_streams(seed in any::<u64>(), rep in 0u64..1000) {
        let a = draw_entries(EntryLaw::RealGaussian, &SampleConfig { replicate_index: rep, ..cfg(4, 4, seed) });
        let b = draw_entries(EntryLaw::RealGaussian, &SampleConfig { replicate_index: rep + 1, ..cfg(4, 4, seed) });
        prop_assert_ne!(a, b);
    }
}
