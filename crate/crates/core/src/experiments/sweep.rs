//! Parameter sweeps over sample sizes and replications.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::scenario::{cell_seed, Population, Scenario};
use crate::error::{Error, Result};
use crate::simplex::{sparsity_mass, symmetric_kl};
use crate::solver::{SolveResult, SolverOptions};

/// One row of a sweep. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub n: usize,
    pub n_atoms: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub replication: usize,
    /// `E(f_λ̂)`.
    pub excess_risk_hat: f64,
    /// `E(f_λ)` for the population solution `λ = λ^ε`.
    pub excess_risk_pop: f64,
    /// `‖f_λ̂ − f_λ‖²`.
    pub l2_dist_sq: f64,
    /// `K(λ̂, λ)`.
    pub symmetric_kl: f64,
    /// `Σ_{j∉J*} λ̂_j`.
    pub sparsity_hat: f64,
    /// `Σ_{j∉J*} λ_j`.
    pub sparsity_pop: f64,
    /// `α_N(λ*)`.
    pub alpha_n: f64,
    pub gap_hat: f64,
    pub gap_pop: f64,
    /// Seconds; zero unless timing is enabled.
    pub wall_time: f64,
    /// `ok`, `max_iters`, `taylor_violation` or `error: …`.
    pub status: String,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Outcome of a solve where hitting the iteration cap still yields an iterate.
fn settle(result: Result<SolveResult>) -> Result<(SolveResult, &'static str), String> {
    match result {
        Ok(r) => Ok((r, "ok")),
        Err(Error::MaxItersExceeded(r)) => Ok((*r, "max_iters")),
        Err(e) => Err(e.to_string()),
    }
}

struct Cell {
    n: usize,
    replication: usize,
}

/// A solved population problem with its status, or the error text.
type PopulationFit = std::result::Result<(Population, SolveResult, &'static str), String>;

/// Runs every `(n, replication, ε)` cell of the scenario. Cells run in
/// parallel on the current rayon pool; rows come back sorted by `n`, then
/// replication, then the order of the ε values. Failures are recorded in
/// the status column.
pub fn run_sweep(config: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    let scenario = Scenario::new(config)?;
    let opts = SolverOptions { tol: config.tol, ..SolverOptions::default() };
    let alpha = scenario.alpha_n().map(|a| a.value).unwrap_or(f64::NAN);

    let mut sizes = config.n.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let mut levels: Vec<f64> = sizes.iter().flat_map(|&n| config.epsilons(n)).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let solved: Vec<(u64, PopulationFit)> = levels
        .par_iter()
        .map(|&eps| {
            let run = || -> PopulationFit {
                let pop = scenario.population().with_epsilon(eps).map_err(|e| e.to_string())?;
                let (r, status) = settle(pop.problem().solve(&opts))?;
                Ok((pop, r, status))
            };
            (eps.to_bits(), run())
        })
        .collect();
    let population: BTreeMap<u64, _> = solved.into_iter().collect();

    let cells: Vec<Cell> =
        sizes.iter().flat_map(|&n| (0..config.replications).map(move |replication| Cell { n, replication })).collect();
    let rows: Vec<Vec<RunRecord>> = cells
        .par_iter()
        .map(|cell| run_cell(&scenario, cell, &opts, alpha, &population))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

type PopulationCache = BTreeMap<u64, Result<(Population, SolveResult, &'static str), String>>;

fn run_cell(scenario: &Scenario, cell: &Cell, opts: &SolverOptions, alpha: f64, cache: &PopulationCache) -> Vec<RunRecord> {
    let config = scenario.config();
    let support = config.support();
    let blank = |eps: f64, status: String| RunRecord {
        scenario: config.id.clone(),
        n: cell.n,
        n_atoms: config.dictionary.n_atoms,
        epsilon: eps,
        seed: cell_seed(config.seed, cell.n, cell.replication),
        replication: cell.replication,
        excess_risk_hat: f64::NAN,
        excess_risk_pop: f64::NAN,
        l2_dist_sq: f64::NAN,
        symmetric_kl: f64::NAN,
        sparsity_hat: f64::NAN,
        sparsity_pop: f64::NAN,
        alpha_n: alpha,
        gap_hat: f64::NAN,
        gap_pop: f64::NAN,
        wall_time: 0.0,
        status,
    };
    let levels = config.epsilons(cell.n);
    let base = match scenario.sample(cell.n, cell.replication) {
        Ok(p) => p,
        Err(e) => return levels.iter().map(|&eps| blank(eps, format!("error: {e}"))).collect(),
    };
    levels
        .iter()
        .map(|&eps| {
            let start = Instant::now();
            let (pop, pop_fit, pop_status) = match &cache[&eps.to_bits()] {
                Ok(entry) => entry,
                Err(e) => return blank(eps, format!("error: {e}")),
            };
            let fit = base.with_epsilon(eps).map_err(|e| e.to_string()).and_then(|p| settle(p.solve(opts)));
            let (fit, status) = match fit {
                Ok(f) => f,
                Err(e) => return blank(eps, format!("error: {e}")),
            };
            let compute = || -> Result<RunRecord> {
                let (hat, lam) = (&fit.lambda_hat, &pop_fit.lambda_hat);
                let (rem, bound) = pop.taylor_remainder(hat, lam)?;
                let status = if status != "ok" || *pop_status != "ok" {
                    "max_iters"
                } else if rem.abs() > bound * (1.0 + 1e-9) + 1e-12 {
                    "taylor_violation"
                } else {
                    "ok"
                };
                Ok(RunRecord {
                    excess_risk_hat: pop.excess_risk(hat)?,
                    excess_risk_pop: pop.excess_risk(lam)?,
                    l2_dist_sq: pop.l2_sq(hat, lam)?,
                    symmetric_kl: symmetric_kl(hat, lam)?,
                    sparsity_hat: sparsity_mass(hat, &support)?,
                    sparsity_pop: sparsity_mass(lam, &support)?,
                    gap_hat: fit.fw_gap,
                    gap_pop: pop_fit.fw_gap,
                    wall_time: if config.timing { start.elapsed().as_secs_f64() } else { 0.0 },
                    ..blank(eps, status.into())
                })
            };
            compute().unwrap_or_else(|e| blank(eps, format!("error: {e}")))
        })
        .collect()
}

pub fn write_records_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let records = r.deserialize().collect::<Result<Vec<RunRecord>, _>>()?;
    Ok(records)
}

/// The column names of a sweep CSV, in order.
pub fn record_columns() -> Vec<String> {
    let mut buf = Vec::new();
    let mut w = csv::Writer::from_writer(&mut buf);
    w.serialize(RunRecord {
        scenario: String::new(),
        n: 0,
        n_atoms: 0,
        epsilon: 0.0,
        seed: 0,
        replication: 0,
        excess_risk_hat: 0.0,
        excess_risk_pop: 0.0,
        l2_dist_sq: 0.0,
        symmetric_kl: 0.0,
        sparsity_hat: 0.0,
        sparsity_pop: 0.0,
        alpha_n: 0.0,
        gap_hat: 0.0,
        gap_pop: 0.0,
        wall_time: 0.0,
        status: String::new(),
    })
    .expect("header serializes");
    drop(w);
    let text = String::from_utf8(buf).expect("utf-8");
    text.lines().next().unwrap_or_default().split(',').map(str::to_owned).collect()
}
