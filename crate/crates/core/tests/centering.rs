use proptest::prelude::*;
use topeig_core::stats::{mean, variance};
use topeig_core::{
    beta_n, operator_distance_bound, population_eigenvalues, sigma_squared, theta_n,
    widom_shampine_eigs, AutocovarianceSpec, EntryLaw, KernelSpec, PopulationModel,
    PreparedPopulation, RatioRule, SampleConfig,
};

/// Double-double accumulation of `Σ λ_k/(λ1 − λ_k)`; independent of the
/// compensated sum used by the crate.
fn beta_oracle(eigs: &[f64], n: usize) -> f64 {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }
    let l1 = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top = eigs.iter().position(|&l| l == l1).unwrap();
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for (k, &l) in eigs.iter().enumerate() {
        if k == top {
            continue;
        }
        // q = l/(l1 − l) to double-double accuracy via one Newton step
        let den = l1 - l;
        let q = l / den;
        let r = q.mul_add(-den, l) / den;
        let (s, e) = two_sum(hi, q);
        hi = s;
        lo += e + r;
    }
    (hi + lo) / n as f64
}

fn toeplitz_eigs(d: f64, n: usize) -> Vec<f64> {
    population_eigenvalues(&PopulationModel::Toeplitz {
        spec: AutocovarianceSpec::pure(d).unwrap(),
        n,
    })
    .unwrap()
}

#[test]
fn beta_agrees_with_double_double_oracle() {
    for d in [0.125, 0.25, 0.375] {
        let eigs = toeplitz_eigs(d, 400);
        let (a, b) = (beta_n(&eigs, 500).unwrap(), beta_oracle(&eigs, 500));
        assert!((a - b).abs() <= 1e-14 * b, "d = {d}: {a} vs {b}");
        let mut shuffled = eigs.clone();
        shuffled.reverse();
        assert!((beta_n(&shuffled, 500).unwrap() - b).abs() <= 1e-14 * b);
    }
}

#[test]
fn theta_tends_to_one_along_the_ladder() {
    let thetas: Vec<f64> = [250, 500, 1000, 2000]
        .into_iter()
        .map(|n_rows| {
            let eigs = toeplitz_eigs(0.125, n_rows);
            let normalized: Vec<f64> = eigs.iter().map(|l| l / eigs[0]).collect();
            theta_n(&normalized, n_rows * 5 / 4).unwrap()
        })
        .collect();
    assert!(thetas.iter().all(|&t| t > 1.0));
    assert!(thetas.windows(2).all(|w| w[1] < w[0]), "{thetas:?}");
}

#[test]
fn rescaled_toeplitz_within_operator_distance_of_the_limit() {
    for rho in [-0.75, -0.5, -0.25] {
        let spec = KernelSpec::pure(rho).unwrap();
        let a = topeig_core::gap_ratio_estimate(rho).unwrap().a;
        for n in [500, 1000, 2000] {
            let t = widom_shampine_eigs(&spec, n, 2).unwrap();
            let bound = operator_distance_bound(&spec, n).unwrap();
            for k in 0..2 {
                assert!(
                    (t[k] - a[k]).abs() <= bound,
                    "rho {rho}, N {n}, k {k}: {} vs {} (bound {bound})",
                    t[k],
                    a[k]
                );
            }
        }
    }
}

fn f_samples(
    population: &PreparedPopulation,
    law: EntryLaw,
    n: usize,
    seed: u64,
    reps: u64,
) -> Vec<f64> {
    (0..reps)
        .map(|rep| {
            let cfg =
                SampleConfig::new(population.dim(), RatioRule::Explicit(n), seed, rep).unwrap();
            population.fluctuation(law, &cfg).unwrap().f_n
        })
        .collect()
}

fn spiked(rows: usize, spike: f64) -> PreparedPopulation {
    let mut eigs = vec![1.0; rows];
    eigs[0] = spike;
    PreparedPopulation::from_eigenvalues(eigs).unwrap()
}

#[test]
fn centered_statistic_has_mean_zero_for_growing_spike() {
    let (rows, n) = (200, 250);
    let population = spiked(rows, 4.0 * (n as f64).sqrt());
    let f = f_samples(&population, EntryLaw::RealGaussian, n, 77, 900);
    let bound = 4.0 * sigma_squared(EntryLaw::RealGaussian).sqrt() / 30.0;
    assert!(mean(&f).abs() < bound, "mean {} vs {bound}", mean(&f));
}

#[test]
fn fluctuation_variance_follows_fourth_moment() {
    let (rows, n) = (200, 250);
    let population = spiked(rows, 4.0 * (n as f64).sqrt());
    let var = |law| {
        let f = f_samples(&population, law, n, 91, 900);
        let v = variance(&f);
        // standard error of a sample variance, from the sample fourth moment
        let m = mean(&f);
        let m4 = f.iter().map(|x| (x - m).powi(4)).sum::<f64>() / f.len() as f64;
        (v, ((m4 - v * v) / f.len() as f64).sqrt())
    };
    let (ve, se) = var(EntryLaw::StdExponential);
    let (vg, sg) = var(EntryLaw::RealGaussian);
    let (vb, sb) = var(EntryLaw::SymmetricBernoulli);
    assert!(ve - vg > 3.0 * (se * se + sg * sg).sqrt(), "{ve} vs {vg}");
    assert!(vg - vb > 3.0 * (sg * sg + sb * sb).sqrt(), "{vg} vs {vb}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spiked_beta_closed_form(spike in 1.5f64..1e4, rows in 2usize..500, n in 1usize..800) {
        let mut eigs = vec![1.0; rows];
        eigs[0] = spike;
        let closed = (rows - 1) as f64 / n as f64 / (spike - 1.0);
        prop_assert!((beta_n(&eigs, n).unwrap() - closed).abs() <= 1e-12 * closed);
    }

    #[test]
    fn beta_is_permutation_invariant(mut eigs in prop::collection::vec(0.0f64..10.0, 2..40), n in 1usize..100) {
        eigs[0] = 20.0;
        let a = beta_n(&eigs, n).unwrap();
        eigs.rotate_left(1);
        prop_assert!((beta_n(&eigs, n).unwrap() - a).abs() <= 1e-14 * a.max(1e-300));
    }
}
