//! Pilot run that freezes the data-derived acceptance thresholds.
//!
//! Uses seeds disjoint from the acceptance seeds and writes
//! `crates/topeig/acceptance.json`:
//!
//! * `ks_threshold_900`: 99th percentile of the KS distance between 900
//!   draws from the crate's own normal sampler and N(0, 1), over 2000 seeds.
//! * `ratio_band_n3000`: the candidate band [0.9, 1.15] is kept only if every
//!   pilot ratio at N = 3000 (20 replicates) falls inside it.
//! * `bernoulli_variance_bound`: the candidate bound 0.2 is kept only if the
//!   pilot variance of F_N is below half of it.
//!
//! Run with `cargo run --release -p topeig --example pilot`.

use std::path::Path;

use serde_json::json;
use topeig::{config::Config, runner};
use topeig_core::stats::{quantile_sorted, variance};
use topeig_core::{draw_entries, ks_to_normal, EntryLaw, RatioRule, SampleConfig};

const PILOT_SEED: u64 = 0x9110_7000;
const KS_SEEDS: u64 = 2000;
const KS_SAMPLES: usize = 900;
const RATIO_BAND: [f64; 2] = [0.9, 1.15];
const BERNOULLI_BOUND: f64 = 0.2;

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str, overrides: &[&str]) -> Config {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let mut cfg = Config::load(Some(&configs().join(name)), &o).expect("pilot config");
    cfg.seed = PILOT_SEED;
    cfg
}

fn main() {
    let mut ks: Vec<f64> = (0..KS_SEEDS)
        .map(|rep| {
            let sc =
                SampleConfig::new(KS_SAMPLES, RatioRule::Explicit(1), PILOT_SEED, rep).unwrap();
            let z = draw_entries(EntryLaw::RealGaussian, &sc);
            let v: Vec<f64> = (0..KS_SAMPLES).map(|i| z.get(i, 0).re).collect();
            ks_to_normal(&v, 1.0).unwrap()
        })
        .collect();
    ks.sort_by(f64::total_cmp);
    let ks99 = quantile_sorted(&ks, 0.99);
    eprintln!("KS 99th percentile at {KS_SAMPLES} samples: {ks99:.5}");

    let conv = load("convergence.toml", &["experiment.n_ladder=[3000]"]);
    let rows = runner::run_convergence(&conv, 1, |l| eprintln!("{l}")).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let (rmin, rmax) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    eprintln!("pilot ratios at N = 3000: [{rmin:.5}, {rmax:.5}]");
    assert!(
        rmin >= RATIO_BAND[0] && rmax <= RATIO_BAND[1],
        "pilot ratios leave the candidate band"
    );

    let mut observed = serde_json::Map::new();
    for (name, file, law) in [
        ("real_gaussian", "fluctuations.toml", "real_gaussian"),
        ("std_exponential", "fluctuations.toml", "std_exponential"),
        (
            "symmetric_bernoulli",
            "bernoulli.toml",
            "symmetric_bernoulli",
        ),
    ] {
        let law_set = format!("law={law:?}");
        let cfg = load(file, &[&law_set]);
        let run = runner::run_fluctuations(&cfg, 1).unwrap();
        let f: Vec<f64> = run.records.iter().map(|r| r.f_n).collect();
        eprintln!(
            "{name}: mean {:.4}, variance {:.4}, KS {:?}",
            run.summary.mean, run.summary.variance, run.summary.ks_to_normal
        );
        observed.insert(
            name.into(),
            json!({ "mean": run.summary.mean, "variance": variance(&f), "ks": run.summary.ks_to_normal }),
        );
    }
    let bern_var = observed["symmetric_bernoulli"]["variance"]
        .as_f64()
        .unwrap();
    assert!(
        bern_var < BERNOULLI_BOUND / 2.0,
        "pilot Bernoulli variance too close to the bound"
    );

    let frozen = json!({
        "pilot_seed": PILOT_SEED,
        "ks_threshold_900": (ks99 * 1e4).ceil() / 1e4,
        "ratio_band_n3000": RATIO_BAND,
        "bernoulli_variance_bound": BERNOULLI_BOUND,
        "pilot": {
            "ks_seeds": KS_SEEDS,
            "ks_99th_percentile": ks99,
            "ratio_min_n3000": rmin,
            "ratio_max_n3000": rmax,
            "fluctuations": observed,
        },
    });
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("acceptance.json");
    std::fs::write(&path, serde_json::to_string_pretty(&frozen).unwrap() + "\n").unwrap();
    eprintln!("wrote {}", path.display());
}
