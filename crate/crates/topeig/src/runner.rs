//! Replicate-parallel Monte-Carlo runs. Every replicate draws from its own
//! stream keyed by `(seed, replicate)`, and results are gathered in replicate
//! order, so the output does not depend on the worker count.

use rayon::prelude::*;
use serde::Serialize;
use topeig_core::{
    sigma_squared, EntryLaw, FluctuationRecord, HistogramSummary, PreparedPopulation, RatioRule,
    SampleConfig,
};

use crate::config::Config;
use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub rows: usize,
    #[serde(rename = "n")]
    pub cols: usize,
    pub replicate: u64,
    pub lambda_max_s: f64,
    pub lambda_max_gamma: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationRun {
    #[serde(rename = "N")]
    pub rows: usize,
    #[serde(rename = "n")]
    pub cols: usize,
    pub sigma2: f64,
    pub gap_ratio: f64,
    pub beta_n: f64,
    pub summary: HistogramSummary,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub records: Vec<FluctuationRecord>,
}

pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(AppError::config("--workers must be ≥ 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AppError::config(format!("cannot start {workers} workers: {e}")))
}

pub fn prepare(cfg: &Config, rows: usize) -> Result<PreparedPopulation> {
    let model = cfg.population()?.model(rows)?;
    Ok(PreparedPopulation::new(
        &model,
        cfg.experiment.diagonalize_population,
    )?)
}

pub fn sample_config(cfg: &Config, rows: usize, replicate: u64) -> Result<SampleConfig> {
    let cols = cfg.columns(rows)?;
    Ok(SampleConfig::new(
        rows,
        RatioRule::Explicit(cols),
        cfg.seed,
        replicate,
    )?)
}

/// One row per `(N, replicate)`; `log` gets a line per ladder step.
pub fn run_convergence(
    cfg: &Config,
    workers: usize,
    mut log: impl FnMut(&str),
) -> Result<Vec<ConvergenceRow>> {
    let law = cfg.law()?;
    let pool = pool(workers)?;
    let mut rows = Vec::new();
    for n_rows in cfg.ladder()? {
        let population = prepare(cfg, n_rows)?;
        let cols = cfg.columns(n_rows)?;
        let gamma = population.lambda_max();
        let step: Vec<Result<ConvergenceRow>> = pool.install(|| {
            (0..cfg.experiment.replicates as u64)
                .into_par_iter()
                .map(|rep| {
                    let sc = sample_config(cfg, n_rows, rep)?;
                    let lambda = population.lambda_max_sample(law, &sc)?;
                    Ok(ConvergenceRow {
                        rows: n_rows,
                        cols,
                        replicate: rep,
                        lambda_max_s: lambda,
                        lambda_max_gamma: gamma,
                        ratio: lambda / gamma,
                    })
                })
                .collect()
        });
        let step = step.into_iter().collect::<Result<Vec<_>>>()?;
        let median = topeig_core::stats::median(&step.iter().map(|r| r.ratio).collect::<Vec<_>>());
        log(&format!(
            "N = {n_rows}, n = {cols}: {} replicates, median ratio {median:.6}",
            step.len()
        ));
        rows.extend(step);
    }
    Ok(rows)
}

/// Assumption checks that produce warnings rather than errors.
pub fn fluctuation_warnings(
    population: &PreparedPopulation,
    law: EntryLaw,
    margin: f64,
) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    let gap = population.gap_ratio()?;
    if gap >= 1.0 - margin {
        warnings.push(format!(
            "spectral gap too small: lambda_2/lambda_1 = {gap:.6} ≥ 1 − {margin}"
        ));
    }
    let covered = population.is_diagonal()
        || law == EntryLaw::ComplexGaussian
        || (law == EntryLaw::RealGaussian && !population.is_complex());
    if !covered {
        warnings.push(format!(
            "population is not diagonal and law {} is outside the Gaussian cases; the normal limit is not guaranteed",
            law.name()
        ));
    }
    Ok(warnings)
}

/// `F_N` over the replicates at the single `N` of the ladder.
pub fn run_fluctuations(cfg: &Config, workers: usize) -> Result<FluctuationRun> {
    let law = cfg.law()?;
    let ladder = cfg.ladder()?;
    let [n_rows] = ladder[..] else {
        return Err(AppError::config(format!(
            "simulate-fluctuations takes a single N, got experiment.n_ladder = {ladder:?}"
        )));
    };
    let population = prepare(cfg, n_rows)?;
    let cols = cfg.columns(n_rows)?;
    let warnings = fluctuation_warnings(&population, law, cfg.experiment.gap_margin)?;
    let pool = pool(workers)?;
    let records: Vec<Result<FluctuationRecord>> = pool.install(|| {
        (0..cfg.experiment.replicates as u64)
            .into_par_iter()
            .map(|rep| Ok(population.fluctuation(law, &sample_config(cfg, n_rows, rep)?)?))
            .collect()
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let f: Vec<f64> = records.iter().map(|r| r.f_n).collect();
    let sigma2 = sigma_squared(law);
    let summary = HistogramSummary::new(&f, sigma2, cfg.experiment.histogram_bins)?;
    Ok(FluctuationRun {
        rows: n_rows,
        cols,
        sigma2,
        gap_ratio: population.gap_ratio()?,
        beta_n: population.beta_n(cols)?,
        summary,
        warnings,
        records,
    })
}
