//! The five CLI commands. Each writes its data files plus `summary.json`
//! into the output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use topeig_core::{
    decompose, esd, gap_ratio_estimate_on, operator_distance_bound, population_eigenvalues,
    solve_fixed_point, spectral::DiscreteMeasure, widom_shampine_eigs, AutocovarianceSpec,
    CertificationStatus, KernelEigenEstimate, KernelSpec, Matrix, SupportScanner,
};

use crate::config::Config;
use crate::error::{AppError, Result};
use crate::io::{fmt_f64, write_json, write_measure, write_splm, CsvTable};
use crate::runner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SimulateConvergence,
    SimulateFluctuations,
    ToeplitzSpectrum,
    KernelLimit,
    SupportScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateConvergence => "simulate-convergence",
            Command::SimulateFluctuations => "simulate-fluctuations",
            Command::ToeplitzSpectrum => "toeplitz-spectrum",
            Command::KernelLimit => "kernel-limit",
            Command::SupportScan => "support-scan",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub workers: usize,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub dump_matrices: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    /// Relative to the output directory.
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    version: &'static str,
    stream_version: u64,
    seed: u64,
    config: &'a Config,
    files: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    results: Value,
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Output<'_> {
    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
        }
        self.files.push(name.to_string());
        Ok(p)
    }
}

pub fn load_config(inv: &Invocation) -> Result<Config> {
    let mut cfg = Config::load(inv.config_path.as_deref(), &inv.overrides)?;
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Loads the config and runs the command. Once the config is valid,
/// `summary.json` is written even if the command fails.
pub fn run(inv: &Invocation, log: &mut dyn FnMut(&str)) -> Result<Outcome> {
    let cfg = load_config(inv)?;
    runner::pool(inv.workers)?;
    std::fs::create_dir_all(&inv.out).map_err(|e| AppError::io(&inv.out, e))?;
    let mut out = Output {
        dir: &inv.out,
        files: Vec::new(),
    };
    let result = match inv.command {
        Command::SimulateConvergence => simulate_convergence(&cfg, inv, &mut out, log),
        Command::SimulateFluctuations => simulate_fluctuations(&cfg, inv, &mut out),
        Command::ToeplitzSpectrum => toeplitz_spectrum(&cfg, inv, &mut out),
        Command::KernelLimit => kernel_limit(&cfg, &mut out),
        Command::SupportScan => support_scan(&cfg, &mut out),
    };
    let mut files = out.files.clone();
    files.push("summary.json".into());
    let (results, error) = match &result {
        Ok((v, _)) => (v.clone(), None),
        Err(e) => (Value::Null, Some(e.to_string())),
    };
    let summary = Summary {
        command: inv.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        stream_version: topeig_core::sampling::STREAM_VERSION,
        seed: cfg.seed,
        config: &cfg,
        files: &files,
        error,
        results,
    };
    write_json(&inv.out.join("summary.json"), &summary)?;
    let (_, exit_code) = result?;
    Ok(Outcome { exit_code, files })
}

fn population_order(cfg: &Config) -> Option<&'static str> {
    cfg.experiment
        .diagonalize_population
        .then_some("descending")
}

fn dump(cfg: &Config, out: &mut Output<'_>, rows: usize) -> Result<()> {
    let population = runner::prepare(cfg, rows)?;
    let sc = runner::sample_config(cfg, rows, 0)?;
    let (z, s) = population.sample_matrices(cfg.law()?, &sc)?;
    let gamma = population.half();
    let gamma = match &gamma {
        Matrix::Real(h) => Matrix::Real(topeig_core::linalg::product(h.as_ref(), h.as_ref(), 1.0)),
        Matrix::Complex(h) => {
            Matrix::Complex(topeig_core::linalg::product(h.as_ref(), h.as_ref(), 1.0))
        }
    };
    write_splm(&out.path(&format!("matrices/N{rows}_gamma.splm"))?, &gamma)?;
    write_splm(&out.path(&format!("matrices/N{rows}_z_rep0.splm"))?, &z)?;
    write_splm(&out.path(&format!("matrices/N{rows}_s_rep0.splm"))?, &s)?;
    Ok(())
}

fn simulate_convergence(
    cfg: &Config,
    inv: &Invocation,
    out: &mut Output<'_>,
    log: &mut dyn FnMut(&str),
) -> Result<(Value, i32)> {
    let rows = runner::run_convergence(cfg, inv.workers, |l| log(l))?;
    let mut t = CsvTable::create(
        &out.path("convergence.csv")?,
        &[
            "N",
            "n",
            "replicate",
            "lambda_max_S",
            "lambda_max_gamma",
            "ratio",
        ],
    )?;
    for r in &rows {
        t.row([
            r.rows.to_string(),
            r.cols.to_string(),
            r.replicate.to_string(),
            fmt_f64(r.lambda_max_s),
            fmt_f64(r.lambda_max_gamma),
            fmt_f64(r.ratio),
        ])?;
    }
    t.finish()?;
    if inv.dump_matrices {
        for n in cfg.ladder()? {
            dump(cfg, out, n)?;
        }
    }
    let steps: Vec<Value> = cfg
        .ladder()?
        .into_iter()
        .map(|n| {
            let ratios: Vec<f64> = rows
                .iter()
                .filter(|r| r.rows == n)
                .map(|r| r.ratio)
                .collect();
            json!({
                "N": n,
                "n": rows.iter().find(|r| r.rows == n).map(|r| r.cols),
                "lambda_max_gamma": rows.iter().find(|r| r.rows == n).map(|r| r.lambda_max_gamma),
                "median_ratio": topeig_core::stats::median(&ratios),
                "mean_ratio": topeig_core::stats::mean(&ratios),
            })
        })
        .collect();
    Ok((
        json!({ "population_order": population_order(cfg), "ladder": steps }),
        0,
    ))
}

fn simulate_fluctuations(
    cfg: &Config,
    inv: &Invocation,
    out: &mut Output<'_>,
) -> Result<(Value, i32)> {
    let run = runner::run_fluctuations(cfg, inv.workers)?;
    let mut t = CsvTable::create(
        &out.path("fluctuations.csv")?,
        &["replicate", "lambda_max_S", "beta_N", "F_N"],
    )?;
    for r in &run.records {
        t.row([
            r.replicate_index.to_string(),
            fmt_f64(r.lambda_max),
            fmt_f64(r.beta_n),
            fmt_f64(r.f_n),
        ])?;
    }
    t.finish()?;
    if inv.dump_matrices {
        dump(cfg, out, run.rows)?;
    }
    let mut v = serde_json::to_value(&run)?;
    v["population_order"] = json!(population_order(cfg));
    v["lambda_max_gamma"] = json!(run.records.first().map(|r| r.lambda_max_gamma));
    Ok((v, 0))
}

fn toeplitz_spectrum(cfg: &Config, inv: &Invocation, out: &mut Output<'_>) -> Result<(Value, i32)> {
    let pop = cfg.population()?;
    let rows = pop.dim()?;
    let model = pop.model(rows)?;
    let gamma = topeig_core::build_population(&model)?;
    let dec = decompose(&gamma)?;
    let eigs = &dec.eigenvalues;
    let scale = match pop.autocovariance() {
        Some(spec) => Some(rows as f64 * KernelSpec::new(spec)?.r(rows as i64)),
        None => None,
    };
    let mut header = vec!["index", "eigenvalue", "over_lambda_1"];
    if scale.is_some() {
        header.push("over_N_R_N");
    }
    let mut t = CsvTable::create(&out.path("spectrum.csv")?, &header)?;
    for (k, &l) in eigs.iter().enumerate() {
        let mut row = vec![(k + 1).to_string(), fmt_f64(l), fmt_f64(l / eigs[0])];
        if let Some(s) = scale {
            row.push(fmt_f64(l / s));
        }
        t.row(row)?;
    }
    t.finish()?;
    let mut mu = esd(&dec);
    if cfg.spectrum.merge_tolerance > 0.0 {
        mu = mu.merged(cfg.spectrum.merge_tolerance);
    }
    write_measure(&out.path("esd.csv")?, &mu)?;
    if inv.dump_matrices {
        write_splm(&out.path(&format!("matrices/N{rows}_gamma.splm"))?, &gamma)?;
    }
    let cols = cfg.columns(rows)?;
    let gap = topeig_core::spectral_gap_ratio(&dec).ok();
    let beta = topeig_core::beta_n(eigs, cols).ok();
    Ok((
        json!({
            "N": rows,
            "n": cols,
            "lambda_1": eigs[0],
            "lambda_2": eigs.get(1),
            "gap_ratio": gap,
            "beta_N": beta,
            "N_R_N": scale,
            "rho": pop.autocovariance().map(|s| s.rho()),
        }),
        0,
    ))
}

#[derive(Serialize)]
struct ToeplitzComparison {
    #[serde(rename = "N")]
    rows: usize,
    scaled: Vec<f64>,
    relative_difference: Vec<f64>,
    distance_bound: f64,
}

#[derive(Serialize)]
struct KernelReport {
    #[serde(flatten)]
    estimate: KernelEigenEstimate,
    toeplitz: Vec<ToeplitzComparison>,
}

fn kernel_limit(cfg: &Config, out: &mut Output<'_>) -> Result<(Value, i32)> {
    let k = &cfg.kernel;
    let estimate = gap_ratio_estimate_on(k.rho, &k.grids)?;
    let d = (k.rho + 1.0) / 2.0;
    let spec = KernelSpec::new(AutocovarianceSpec::new(d, k.slowly_varying, 0.0)?)?;
    let toeplitz = k
        .compare_n
        .iter()
        .map(|&n| {
            let scaled = widom_shampine_eigs(&spec, n, estimate.a.len())?;
            let relative_difference = scaled
                .iter()
                .zip(&estimate.a)
                .map(|(s, a)| (s - a).abs() / a.abs())
                .collect();
            Ok(ToeplitzComparison {
                rows: n,
                scaled,
                relative_difference,
                distance_bound: operator_distance_bound(&spec, n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = KernelReport { estimate, toeplitz };
    write_json(&out.path("kernel_limit.json")?, &report)?;
    let code = match report.estimate.status {
        CertificationStatus::Certified => 0,
        CertificationStatus::Inconclusive => 4,
    };
    Ok((serde_json::to_value(&report)?, code))
}

fn support_scan(cfg: &Config, out: &mut Output<'_>) -> Result<(Value, i32)> {
    let pop = cfg.population()?;
    let rows = pop.dim()?;
    let eigs = population_eigenvalues(&pop.model(rows)?)?;
    let s = &cfg.support;
    let scanner = SupportScanner::new(&eigs, s.ratio)?;
    let edge = scanner.right_edge()?;
    let lmax = eigs.iter().copied().fold(0.0, f64::max);

    let mut t = CsvTable::create(&out.path("x_of_y.csv")?, &["y", "x", "x_prime"])?;
    for q in scanner.sample_curve() {
        t.row([fmt_f64(q.y), fmt_f64(q.x), fmt_f64(q.x_prime)])?;
    }
    t.finish()?;

    let lo = s.x_min.unwrap_or(0.0);
    let hi = s
        .x_max
        .unwrap_or(1.25 * lmax * (1.0 + s.ratio.sqrt()).powi(2));
    if !(hi > lo) {
        return Err(AppError::config(format!(
            "support x range [{lo}, {hi}] is empty"
        )));
    }
    let grid: Vec<f64> = (0..s.x_count)
        .map(|i| lo + (hi - lo) * i as f64 / (s.x_count - 1) as f64)
        .collect();
    let mut t = CsvTable::create(
        &out.path("support.csv")?,
        &["x", "in_support", "y", "x_prime"],
    )?;
    for &x in &grid {
        match scanner.query(x) {
            Some(q) => t.row([fmt_f64(x), "false".into(), fmt_f64(q.y), fmt_f64(q.x_prime)])?,
            None => t.row([fmt_f64(x), "true".into(), String::new(), String::new()])?,
        }
    }
    t.finish()?;

    if !s.stieltjes_heights.is_empty() {
        let nu = DiscreteMeasure::uniform(&eigs)?;
        let mut t = CsvTable::create(
            &out.path("stieltjes.csv")?,
            &["re_z", "im_z", "re_m", "im_m", "residual", "iterations"],
        )?;
        for &eta in &s.stieltjes_heights {
            for &x in &grid {
                let sol = solve_fixed_point(&nu, s.ratio, topeig_core::c64::new(x, eta))?;
                t.row([
                    fmt_f64(sol.z.re),
                    fmt_f64(sol.z.im),
                    fmt_f64(sol.m.re),
                    fmt_f64(sol.m.im),
                    fmt_f64(sol.residual),
                    sol.iterations.to_string(),
                ])?;
            }
        }
        t.finish()?;
    }
    let branches: Vec<[f64; 2]> = scanner
        .decreasing_branches()
        .into_iter()
        .map(|(a, b)| [a, b])
        .collect();
    Ok((
        json!({
            "N": rows,
            "r": s.ratio,
            "right_edge": edge,
            "decreasing_branches": branches,
            "measure": "companion: (1 - r) delta_0 + r mu",
        }),
        0,
    ))
}
