use std::path::Path;
use std::process::{Command, Output};

use topeig::io::read_splm;

fn topeig(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topeig"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "law = \"real_gaussian\"\nreplicatse = 3\n").unwrap();
    let out = topeig(
        &["simulate-fluctuations", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicatse"));

    let out = topeig(
        &[
            "simulate-fluctuations",
            "--config",
            &config("fluctuations.toml"),
            "--set",
            "experiment.bogus=1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn missing_population_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = topeig(
        &["simulate-convergence", "--set", "law=real_gaussian"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // config was valid, so the failure is still recorded
    assert!(summary(dir.path())["error"]
        .as_str()
        .unwrap()
        .contains("population"));
}

#[test]
fn support_scan_flips_at_the_mp_edge() {
    let dir = tempfile::tempdir().unwrap();
    let out = topeig(
        &["support-scan", "--config", &config("mp_support.toml")],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut r = csv::Reader::from_path(dir.path().join("support.csv")).unwrap();
    let rows: Vec<(f64, bool)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[1].parse().unwrap())
        })
        .collect();
    let flips: Vec<f64> = rows
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| w[1].0)
        .collect();
    assert_eq!(flips.len(), 1, "{flips:?}");
    assert!((flips[0] - 4.0).abs() <= 0.05 + 1e-12);

    let edge = summary(dir.path())["results"]["right_edge"]
        .as_f64()
        .unwrap();
    assert!((edge - 4.0).abs() < 1e-8);

    let mut r = csv::Reader::from_path(dir.path().join("stieltjes.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["re_z", "im_z", "re_m", "im_m", "residual", "iterations"]
    );
    for rec in r.records() {
        let rec = rec.unwrap();
        let im_m: f64 = rec[3].parse().unwrap();
        assert!(im_m < 0.0);
    }
    let r = csv::Reader::from_path(dir.path().join("x_of_y.csv")).unwrap();
    assert!(r.into_records().count() > 100);
}

#[test]
fn kernel_limit_certifies_and_flags_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = topeig(
        &["kernel-limit", "--set", "kernel.compare_n=[200]"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("kernel_limit.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["status"], "certified");
    assert_eq!(v["rho"], -0.75);
    assert!(v["gap_ratio"].as_f64().unwrap() < 1.0);
    for key in ["grids", "a", "error_estimate"] {
        assert!(!v[key].is_null(), "{key}");
    }

    let dir = tempfile::tempdir().unwrap();
    let out = topeig(
        &[
            "kernel-limit",
            "--set",
            "kernel.grids=[16]",
            "--set",
            "kernel.compare_n=[]",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(dir.path().join("kernel_limit.json").exists());
    assert!(dir.path().join("summary.json").exists());
}

const SMALL: [&str; 6] = [
    "--set",
    "population.N=120",
    "--set",
    "experiment.replicates=30",
    "--set",
    "population.d=0.25",
];

#[test]
fn fluctuations_replay_byte_identically() {
    let cfg = config("fluctuations.toml");
    let first = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate-fluctuations", "--config", &cfg];
    args.extend(SMALL);
    let out = topeig(&args, first.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(first.path().join("fluctuations.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
    assert_eq!(
        csv.lines().next().unwrap(),
        "replicate,lambda_max_S,beta_N,F_N"
    );

    let replay = tempfile::tempdir().unwrap();
    let summary_path = first.path().join("summary.json");
    let out = topeig(
        &[
            "simulate-fluctuations",
            "--config",
            summary_path.to_str().unwrap(),
            "--workers",
            "3",
        ],
        replay.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    for file in ["fluctuations.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(first.path().join(file)).unwrap(),
            std::fs::read(replay.path().join(file)).unwrap(),
            "{file}"
        );
    }

    let reseeded = tempfile::tempdir().unwrap();
    let mut args = vec![
        "simulate-fluctuations",
        "--config",
        &cfg,
        "--seed",
        "18446744073709551615",
    ];
    args.extend(SMALL);
    topeig(&args, reseeded.path());
    assert_ne!(
        csv,
        std::fs::read_to_string(reseeded.path().join("fluctuations.csv")).unwrap()
    );
    assert_eq!(summary(reseeded.path())["seed"].as_u64(), Some(u64::MAX));
}

#[test]
fn non_diagonal_bernoulli_run_warns_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "simulate-fluctuations".to_string(),
        "--config".into(),
        config("bernoulli.toml"),
        "--set".into(),
        "experiment.diagonalize_population=false".into(),
    ];
    args.extend(SMALL.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = topeig(&args, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let warnings = summary(dir.path())["results"]["warnings"].clone();
    assert_eq!(warnings.as_array().unwrap().len(), 1, "{warnings}");
}

#[test]
fn convergence_table_and_matrix_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = topeig(
        &[
            "simulate-convergence",
            "--config",
            &config("convergence.toml"),
            "--set",
            "experiment.n_ladder=[20, 40]",
            "--set",
            "experiment.replicates=3",
            "--dump-matrices",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,n,replicate,lambda_max_S,lambda_max_gamma,ratio"
    );
    assert_eq!(lines.count(), 6);
    let s = read_splm(&dir.path().join("matrices/N40_s_rep0.splm")).unwrap();
    assert_eq!((s.nrows(), s.ncols()), (40, 40));
    let z = read_splm(&dir.path().join("matrices/N40_z_rep0.splm")).unwrap();
    assert_eq!((z.nrows(), z.ncols()), (40, 50));
}

#[test]
fn identity_population_is_the_mp_control_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = topeig(
        &[
            "simulate-convergence",
            "--set",
            "law=real_gaussian",
            "--set",
            "population.kind=identity",
            "--set",
            "experiment.n_ladder=[400]",
            "--set",
            "experiment.sample_ratio=[1, 1]",
            "--set",
            "experiment.replicates=4",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let median = summary(dir.path())["results"]["ladder"][0]["median_ratio"]
        .as_f64()
        .unwrap();
    assert!((median - 4.0).abs() < 0.3, "{median}");
}

#[test]
fn toeplitz_spectrum_writes_spectrum_and_esd() {
    let dir = tempfile::tempdir().unwrap();
    let out = topeig(
        &[
            "toeplitz-spectrum",
            "--config",
            &config("fluctuations.toml"),
            "--set",
            "population.N=64",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let esd = std::fs::read_to_string(dir.path().join("esd.csv")).unwrap();
    assert_eq!(esd.lines().next().unwrap(), "location,weight");
    assert_eq!(esd.lines().count(), 65);
    let s = summary(dir.path());
    assert!(s["results"]["gap_ratio"].as_f64().unwrap() < 1.0);
}
