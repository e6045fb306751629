//! Empirical rate checks on sweep output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::rate;
use super::sweep::RunRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Random error against `(d + A log N)/n` with `d = card(J)`.
    Oracle,
    /// Random error against the subspace bound built from `dim L`, `U(L)`
    /// and the residual `max_{j∈J} ‖P_{L⊥} h_j‖`.
    Subspace,
    /// Approximation-error ratio across an ε-grid.
    Approximation,
    /// Density version of `Oracle`.
    Density,
}

/// Geometry of a subspace `L` approximating the relevant atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceTerms {
    pub dim: usize,
    pub u_of_l: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    /// `card(J)`.
    pub d: usize,
    /// Confidence parameter `A ≥ 1`.
    pub a: f64,
    pub subspace: Option<SubspaceTerms>,
    /// `E(f_{λ*})`, zero when the model is well specified.
    pub target_excess: f64,
}

impl RateParams {
    pub fn new(d: usize, a: f64) -> Self {
        Self { d, a, subspace: None, target_excess: 0.0 }
    }
}

/// Medians at one sample size (or one ε in `Approximation` mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub epsilon: f64,
    /// The rate or bound the error is compared with.
    pub rate: f64,
    /// Median of `‖f_λ̂ − f_λ‖² + ε K(λ̂, λ)`; `E(f_λ)` in `Approximation` mode.
    pub error: f64,
    /// `error / rate` (`Oracle`, `Density`), `rate / error` (`Subspace`) or the
    /// approximation ratio (`Approximation`).
    pub ratio: f64,
    /// `median Σ_{j∉J} λ̂_j / (median Σ_{j∉J} λ_j + √rate)`.
    pub sparsity_ratio: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub mode: RateMode,
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `log error` against `log rate`.
    pub slope: Option<f64>,
    pub max_ratio: f64,
    pub max_sparsity_ratio: f64,
    /// `Approximation`: `E(f_{λ^ε})` is nondecreasing in ε within the tolerance.
    pub monotone: Option<bool>,
    /// Rows skipped because their status was not `ok`.
    pub skipped: usize,
}

/// Median of a nonempty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `log y` on `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("a slope needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("log-log fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

pub fn verify_rates(records: &[RunRecord], mode: RateMode, params: &RateParams) -> Result<RateReport> {
    if params.a.is_nan() || params.a < 1.0 {
        return Err(Error::InvalidArgument("A must be at least 1".into()));
    }
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let skipped = records.len() - ok.len();
    if ok.is_empty() {
        return Err(Error::InsufficientData("no rows with status ok".into()));
    }
    match mode {
        RateMode::Approximation => verify_approximation(&ok, params, skipped),
        _ => verify_random_error(&ok, mode, params, skipped),
    }
}

fn verify_random_error(rows: &[&RunRecord], mode: RateMode, params: &RateParams, skipped: usize) -> Result<RateReport> {
    let subspace = match (mode, params.subspace) {
        (RateMode::Subspace, None) => {
            return Err(Error::InvalidArgument("Subspace mode needs subspace terms".into()));
        }
        (RateMode::Subspace, s) => s,
        _ => None,
    };
    let mut groups: BTreeMap<usize, Vec<&RunRecord>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.n).or_default().push(r);
    }
    let sizes: Vec<usize> = groups.keys().copied().collect();
    if sizes.len() < 3 || (*sizes.last().unwrap() as f64) < 10.0 * sizes[0] as f64 {
        return Err(Error::InsufficientData("need at least 3 sample sizes spanning a decade".into()));
    }
    let mut points = Vec::new();
    for (&n, group) in &groups {
        let n_atoms = group[0].n_atoms;
        let log_n = (n_atoms as f64).ln();
        let err = median(&group.iter().map(|r| r.l2_dist_sq + r.epsilon * r.symmetric_kl).collect::<Vec<_>>());
        let hat = median(&group.iter().map(|r| r.sparsity_hat).collect::<Vec<_>>());
        let pop = median(&group.iter().map(|r| r.sparsity_pop).collect::<Vec<_>>());
        let eps = median(&group.iter().map(|r| r.epsilon).collect::<Vec<_>>());
        let (rate_value, ratio, sparsity_ratio) = match subspace {
            None => {
                let x = rate(params.d, params.a, n_atoms, n);
                (x, err / x, hat / (pop + x.sqrt()))
            }
            Some(s) => {
                let root = (params.a * log_n / n as f64).sqrt();
                let bound = rate(s.dim, params.a, n_atoms, n)
                    .max(pop * root)
                    .max(s.residual * root)
                    .max(s.u_of_l * log_n / n as f64);
                let slack = (s.dim as f64 + params.a * log_n) / (n as f64 * eps)
                    + s.residual
                    + s.u_of_l * log_n / (n as f64 * eps);
                (bound, bound / err, hat / (pop + slack))
            }
        };
        points.push(RatePoint { n, epsilon: eps, rate: rate_value, error: err, ratio, sparsity_ratio, rows: group.len() });
    }
    let x: Vec<f64> = points.iter().map(|p| p.rate).collect();
    let y: Vec<f64> = points.iter().map(|p| p.error).collect();
    let slope = log_log_slope(&x, &y).ok();
    let max_ratio = points.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
    let max_sparsity_ratio = points.iter().map(|p| p.sparsity_ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(RateReport { mode, points, slope, max_ratio, max_sparsity_ratio, monotone: None, skipped })
}

fn verify_approximation(rows: &[&RunRecord], params: &RateParams, skipped: usize) -> Result<RateReport> {
    let mut groups: BTreeMap<u64, Vec<&RunRecord>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.epsilon.to_bits()).or_default().push(r);
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientData("Approximation mode needs at least two values of epsilon".into()));
    }
    let mut points: Vec<RatePoint> = groups
        .values()
        .map(|group| {
            let eps = group[0].epsilon;
            let n_atoms = group[0].n_atoms as f64;
            let alpha = group[0].alpha_n;
            let excess = median(&group.iter().map(|r| r.excess_risk_pop).collect::<Vec<_>>());
            let off = median(&group.iter().map(|r| r.sparsity_pop).collect::<Vec<_>>());
            let denom = eps * eps * alpha * alpha + eps / n_atoms;
            let num = (excess + 2.0 * eps * off - 3.0 * params.target_excess).max(0.0);
            RatePoint {
                n: group[0].n,
                epsilon: eps,
                rate: denom,
                error: excess,
                ratio: num / denom,
                sparsity_ratio: f64::NAN,
                rows: group.len(),
            }
        })
        .collect();
    points.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let monotone = points.windows(2).all(|w| w[0].error <= w[1].error + 1e-9 * w[1].error.abs().max(1e-6));
    let max_ratio = points.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(RateReport { mode: RateMode::Approximation, points, slope: None, max_ratio, max_sparsity_ratio: f64::NAN, monotone: Some(monotone), skipped })
}

/// Rows whose random error is exactly `c/n`, for checking the fitter.
pub fn planted_records(c: f64, sizes: &[usize], replications: usize, n_atoms: usize) -> Vec<RunRecord> {
    let mut rows = Vec::new();
    for &n in sizes {
        for replication in 0..replications {
            rows.push(RunRecord {
                scenario: "planted".into(),
                n,
                n_atoms,
                epsilon: 1.0 / (n as f64).sqrt(),
                seed: 0,
                replication,
                excess_risk_hat: c / n as f64,
                excess_risk_pop: 0.0,
                l2_dist_sq: c / n as f64,
                symmetric_kl: 0.0,
                sparsity_hat: 0.0,
                sparsity_pop: 0.0,
                alpha_n: 0.0,
                gap_hat: 0.0,
                gap_pop: 0.0,
                wall_time: 0.0,
                status: "ok".into(),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn planted_scaling_recovers_unit_slope() {
        let rows = planted_records(3.7, &[100, 400, 1600, 6400], 5, 40);
        let report = verify_rates(&rows, RateMode::Oracle, &RateParams::new(4, 1.0)).unwrap();
        assert_abs_diff_eq!(report.slope.unwrap(), 1.0, epsilon = 1e-12);
        let expect = 3.7 / (4.0 + 40f64.ln());
        assert_abs_diff_eq!(report.max_ratio, expect, epsilon = 1e-12);
    }

    #[test]
    fn constant_errors_have_zero_slope() {
        let mut rows = planted_records(1.0, &[100, 1000, 10000], 3, 10);
        for r in &mut rows {
            r.l2_dist_sq = 0.25;
        }
        let report = verify_rates(&rows, RateMode::Density, &RateParams::new(2, 1.0)).unwrap();
        assert_abs_diff_eq!(report.slope.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn median_is_robust_to_one_outlier() {
        let mut rows = planted_records(1.0, &[100, 1000, 10000], 5, 10);
        rows[0].l2_dist_sq = 1e6;
        let report = verify_rates(&rows, RateMode::Oracle, &RateParams::new(2, 1.0)).unwrap();
        assert_abs_diff_eq!(report.slope.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn insufficient_designs_are_rejected() {
        let two = planted_records(1.0, &[100, 1000], 2, 10);
        assert!(matches!(verify_rates(&two, RateMode::Oracle, &RateParams::new(1, 1.0)), Err(Error::InsufficientData(_))));
        let narrow = planted_records(1.0, &[100, 200, 400], 2, 10);
        assert!(verify_rates(&narrow, RateMode::Oracle, &RateParams::new(1, 1.0)).is_err());
        let mut failed = planted_records(1.0, &[100, 1000, 10000], 1, 10);
        failed.iter_mut().for_each(|r| r.status = "max_iters".into());
        assert!(verify_rates(&failed, RateMode::Oracle, &RateParams::new(1, 1.0)).is_err());
        let rows = planted_records(1.0, &[100, 1000, 10000], 1, 10);
        assert!(verify_rates(&rows, RateMode::Subspace, &RateParams::new(1, 1.0)).is_err());
    }

    #[test]
    fn subspace_bound_uses_the_largest_term() {
        let rows = planted_records(1.0, &[100, 1000, 10000], 1, 10);
        let params = RateParams {
            subspace: Some(SubspaceTerms { dim: 2, u_of_l: 3.0, residual: 0.0 }),
            ..RateParams::new(5, 1.0)
        };
        let report = verify_rates(&rows, RateMode::Subspace, &params).unwrap();
        let p = &report.points[0];
        let expect = ((2.0 + 10f64.ln()) / 100.0).max(3.0 * 10f64.ln() / 100.0);
        assert_abs_diff_eq!(p.rate, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(p.ratio, expect / 0.01, epsilon = 1e-12);
    }

    #[test]
    fn approximation_ratio_and_monotonicity() {
        let mut rows = Vec::new();
        for (k, eps) in [0.01, 0.1, 1.0].into_iter().enumerate() {
            let mut r = planted_records(1.0, &[100], 1, 10).remove(0);
            r.epsilon = eps;
            r.alpha_n = 2.0;
            r.excess_risk_pop = 0.1 * k as f64;
            r.sparsity_pop = 0.5;
            rows.push(r);
        }
        let report = verify_rates(&rows, RateMode::Approximation, &RateParams::new(1, 1.0)).unwrap();
        assert_eq!(report.monotone, Some(true));
        let p = &report.points[2];
        assert_abs_diff_eq!(p.ratio, (0.2 + 1.0) / (4.0 + 0.1), epsilon = 1e-12);
        rows[2].excess_risk_pop = 0.0;
        let report = verify_rates(&rows, RateMode::Approximation, &RateParams::new(1, 1.0)).unwrap();
        assert_eq!(report.monotone, Some(false));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
