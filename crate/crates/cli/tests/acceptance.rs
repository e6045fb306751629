//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits with a failure status if any of them failed.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use hullsparse::density::DensityProblem;
use hullsparse::dictionary::{DesignMatrix, GramMatrix, MeasureRep};
use hullsparse::experiments::{
    generate, log_log_slope, median, planted_records, rate, run_sweep, verify_rates, write_records_csv, RateMode,
    RateParams, RunRecord, Scenario, ScenarioConfig, TaskProblem,
};
use hullsparse::geometry::{
    alignment_coefficient, rho, sparsity_alignment_bound, w_h_norm, AlignmentMethod, TangentConeSpec,
};
use hullsparse::{
    gradient, loss_risk, objective, population_problem, solve, sparsity_mass, symmetric_kl, ErmProblem, LabelModel,
    LossModel, SimplexWeights, SolverOptions, SupportSet,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

const GAP_TOL: f64 = 1e-8;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("solver matches grid oracle", criterion_1),
        ("optimality certificates", criterion_2),
        ("deterministic inequalities", criterion_3),
        ("sparsity transfer and rate", criterion_4),
        ("subspace refinement", criterion_5),
        ("approximation ratio", criterion_6),
        ("geometry cross-validation", criterion_7),
        ("density estimation", criterion_8),
        ("determinism and CLI", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ScenarioConfig {
    let text = std::fs::read_to_string(configs_dir().join(name)).expect("config file");
    ScenarioConfig::from_toml(&text).expect("valid config")
}

fn random_erm(rng: &mut ChaCha8Rng, n: usize, atoms: usize, loss: LossModel, eps: f64) -> ErmProblem {
    let measure = MeasureRep::empirical((0..n).map(|i| vec![i as f64]).collect()).unwrap();
    let values = DMatrix::from_fn(n, atoms, |_, _| rng.random_range(-1.0..1.0));
    let design = DesignMatrix::new(values, measure).unwrap();
    let labels = if loss.kind() == hullsparse::LossKind::Quadratic {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    } else {
        (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
    };
    ErmProblem::new(design, labels, loss, eps).unwrap()
}

fn grid_min(problem: &ErmProblem, m: usize) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..=m {
        for b in 0..=m - a {
            let w = [a as f64 / m as f64, b as f64 / m as f64, (m - a - b) as f64 / m as f64];
            best = best.min(objective(problem, &SimplexWeights::from_weights(&w).unwrap()).unwrap());
        }
    }
    best
}

fn records_ok(rows: &[RunRecord]) -> Result<(), String> {
    if let Some(bad) = rows.iter().find(|r| !r.is_ok()) {
        return Err(format!("row n={} rep={} has status {}", bad.n, bad.replication, bad.status));
    }
    let worst = rows.iter().map(|r| r.gap_hat.max(r.gap_pop)).fold(0.0, f64::max);
    ensure!(worst <= GAP_TOL, "Frank-Wolfe gap {worst:.2e} above {GAP_TOL:.0e}");
    Ok(())
}

fn by_n(rows: &[RunRecord], f: impl Fn(&RunRecord) -> f64) -> BTreeMap<usize, f64> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.n).or_default().push(f(r));
    }
    groups.into_iter().map(|(n, v)| (n, median(&v))).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_abs = 0.0f64;
    let mut worst_above = f64::NEG_INFINITY;
    for i in 0..20 {
        let loss = if i % 2 == 0 { LossModel::quadratic(-1.0, 1.0) } else { LossModel::logit() };
        let eps = if (i / 2) % 2 == 0 { 0.05 } else { 0.5 };
        let p = random_erm(&mut rng, 50, 3, loss, eps);
        let fit = solve(&p, &SolverOptions::default()).map_err(|e| e.to_string())?;
        ensure!(fit.fw_gap <= GAP_TOL, "instance {i}: gap {:.2e}", fit.fw_gap);
        let grid = grid_min(&p, 400);
        worst_abs = worst_abs.max((fit.objective - grid).abs());
        worst_above = worst_above.max(fit.objective - grid);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst_abs <= 1e-3, "max |objective - grid| = {worst_abs:.2e}");
    ensure!(worst_above <= 1e-6, "solver beaten by the grid by {worst_above:.2e}");
    ensure!(secs <= 30.0, "took {secs:.1}s");
    Ok(format!("max |obj - grid| {worst_abs:.2e}, max obj - grid {worst_above:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_rel = 0.0f64;
    let mut worst_gap = 0.0f64;
    for k in 0..100 {
        let atoms = rng.random_range(2..9);
        let n = rng.random_range(10..60);
        let eps = 10f64.powf(rng.random_range(-2.0..0.0));
        let loss = match k % 3 {
            0 => LossModel::quadratic(-1.0, 1.0),
            1 => LossModel::logit(),
            _ => LossModel::exponential(1.0),
        };
        let p = random_erm(&mut rng, n, atoms, loss, eps);
        let w: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.05..1.0)).collect();
        let lam = SimplexWeights::from_weights(&w).unwrap();
        let g = gradient(&p, &lam).map_err(|e| e.to_string())?;
        // The objective extended to the positive orthant.
        let f = |v: &[f64]| {
            let pred = p.design().combine(v).unwrap();
            let risk: f64 = (0..n).map(|i| p.loss().eval(p.labels()[i], pred[i])).sum::<f64>() / n as f64;
            risk + eps * v.iter().map(|x| x * x.ln()).sum::<f64>()
        };
        let lw = lam.weights();
        for j in 0..atoms {
            let h = 1e-6;
            let mut a = lw.clone();
            let mut b = lw.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            worst_rel = worst_rel.max((fd - g[j]).abs() / g[j].abs().max(1.0));
        }
        let fit = solve(&p, &SolverOptions::default()).map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(fit.fw_gap);
    }
    ensure!(worst_rel <= 1e-6, "finite-difference relative error {worst_rel:.2e}");
    ensure!(worst_gap <= GAP_TOL, "gap {worst_gap:.2e}");
    Ok(format!("100 pairs, max FD relative error {worst_rel:.2e}, max gap {worst_gap:.2e}"))
}

fn random_log_weights(rng: &mut ChaCha8Rng, n: usize) -> SimplexWeights {
    let spread = rng.random_range(0.0..12.0);
    let lw: Vec<f64> = (0..n).map(|_| spread * rng.random::<f64>() - spread).collect();
    SimplexWeights::from_log_weights(lw).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let ln2 = 2f64.ln();
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(2..20);
        let lam = random_log_weights(&mut rng, n);
        let nu = random_log_weights(&mut rng, n);
        let j = SupportSet::new((0..n).filter(|_| rng.random_bool(0.5)), n).unwrap();
        let k = symmetric_kl(&lam, &nu).unwrap();
        let (l, v) = (lam.weights(), nu.weights());
        let dominant: f64 = (0..n).filter(|&i| l[i] >= 2.0 * v[i]).map(|i| l[i]).sum::<f64>()
            + (0..n).filter(|&i| v[i] >= 2.0 * l[i]).map(|i| v[i]).sum::<f64>();
        let off_l = sparsity_mass(&lam, &j).unwrap();
        let off_v = sparsity_mass(&nu, &j).unwrap();
        let slack = 1e-12;
        if ln2 / 2.0 * dominant > k + slack {
            violations += 1;
        }
        if off_l > 2.0 * off_v + 2.0 / ln2 * k + slack {
            violations += 1;
        }
        if off_v > 2.0 * off_l + 2.0 / ln2 * k + slack {
            violations += 1;
        }
    }
    ensure!(violations == 0, "{violations} violations of the entropy inequalities");

    let mut worst = f64::INFINITY;
    for k in 0..1000 {
        let m = rng.random_range(5..60);
        let atoms = rng.random_range(2..8);
        let pts: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64 / m as f64]).collect();
        let wts: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let measure = MeasureRep::known_grid(pts, wts).unwrap();
        let values = DMatrix::from_fn(m, atoms, |_, _| rng.random_range(-1.0..1.0));
        let design = DesignMatrix::new(values, measure).unwrap();
        let (loss, f_star, labels) = if k % 2 == 0 {
            let f: Vec<f64> = (0..m).map(|_| rng.random_range(-1.5..1.5)).collect();
            (LossModel::quadratic(-1.5, 1.5), f.clone(), LabelModel::Exact(f))
        } else {
            let f: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p: Vec<f64> = f.iter().map(|u| 1.0 / (1.0 + (-u).exp())).collect();
            (LossModel::logit(), f, LabelModel::binary(&p).unwrap())
        };
        let prob = population_problem(&design, &labels, &loss, 0.1).map_err(|e| e.to_string())?;
        let lam = random_log_weights(&mut rng, atoms);
        let w = prob.design().measure().weights();
        let star: Vec<f64> = (0..prob.design().n_points())
            .map(|r| {
                let x = prob.design().measure().points()[r][0];
                f_star[(x * m as f64).round() as usize]
            })
            .collect();
        let excess = prob.risk(&lam).unwrap() - loss_risk(&loss, &star, prob.labels(), w).unwrap();
        let f_lam = design.combine(&lam.weights()).unwrap();
        let dist: f64 = design.measure().weights().iter().enumerate().map(|(i, wi)| wi * (f_lam[i] - f_star[i]).powi(2)).sum();
        let radius = f_star.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let tau = 0.5 * loss.tau(radius).unwrap();
        worst = worst.min(excess - tau * dist);
    }
    ensure!(worst >= -1e-12, "excess risk below the curvature bound by {:.2e}", -worst);
    Ok(format!("3x10^4 entropy checks, 10^3 curvature checks (min slack {worst:.2e})"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let config = load("sparsity_transfer.toml");
    let rows = run_sweep(&config).map_err(|e| e.to_string())?;
    records_ok(&rows)?;
    let d = config.target.support.len();
    let report = verify_rates(&rows, RateMode::Oracle, &RateParams::new(d, config.confidence())).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let slope = report.slope.unwrap_or(f64::NAN);
    ensure!(report.max_sparsity_ratio <= 5.0, "sparsity ratio {:.3}", report.max_sparsity_ratio);
    ensure!((0.7..=1.3).contains(&slope), "slope {slope:.3}");
    ensure!(secs <= 600.0, "took {secs:.1}s");
    Ok(format!("slope {slope:.3}, max sparsity ratio {:.3}", report.max_sparsity_ratio))
}

fn criterion_5() -> Outcome {
    let redundant = load("redundant.toml");
    let independent = load("sparsity_transfer.toml");
    let rows_r = run_sweep(&redundant).map_err(|e| e.to_string())?;
    let rows_i = run_sweep(&independent).map_err(|e| e.to_string())?;
    records_ok(&rows_r)?;
    records_ok(&rows_i)?;
    let scenario = Scenario::new(&redundant).map_err(|e| e.to_string())?;
    let terms = scenario.population().subspace_terms(&redundant.support()).map_err(|e| e.to_string())?;
    ensure!(terms.dim == 2, "span of the active atoms has dimension {}", terms.dim);
    let mut params = RateParams::new(redundant.target.support.len(), redundant.confidence());
    params.subspace = Some(terms);
    let report = verify_rates(&rows_r, RateMode::Subspace, &params).map_err(|e| e.to_string())?;
    let min_ratio = report.points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    ensure!(min_ratio >= 1.0, "bound/error ratio {min_ratio:.3} below 1");
    let err = |r: &RunRecord| r.l2_dist_sq + r.epsilon * r.symmetric_kl;
    let med_r = by_n(&rows_r, err);
    let med_i = by_n(&rows_i, err);
    for (n, e) in &med_r {
        ensure!(*e <= med_i[n], "n={n}: redundant {e:.3e} > independent {:.3e}", med_i[n]);
    }
    let pairs: Vec<String> = med_r.iter().map(|(n, e)| format!("n={n} {e:.2e}/{:.2e}", med_i[n])).collect();
    Ok(format!("dim L = 2, min bound/error {min_ratio:.2}, redundant/independent {}", pairs.join(", ")))
}

fn criterion_6() -> Outcome {
    let config = load("approximation.toml");
    let scenario = Scenario::new(&config).map_err(|e| e.to_string())?;
    let alpha = scenario.alpha_n().map_err(|e| e.to_string())?;
    ensure!(alpha.exact, "alignment coefficient computed by a heuristic");
    let pop = scenario.population();
    let target = scenario.target();
    let support = config.support();
    let target_excess = pop.excess_risk(target).map_err(|e| e.to_string())?;
    let n_atoms = config.dictionary.n_atoms as f64;
    let mut eps = config.epsilons(config.n[0]);
    eps.sort_by(f64::total_cmp);
    ensure!(eps.len() == 10, "expected 10 values of epsilon");
    let mut excess = Vec::new();
    let mut max_ratio = 0.0f64;
    for &e in &eps {
        let p = pop.with_epsilon(e).map_err(|e| e.to_string())?;
        let fit = p.problem().solve(&SolverOptions::default()).map_err(|e| e.to_string())?;
        ensure!(fit.fw_gap <= GAP_TOL, "gap {:.2e} at epsilon {e}", fit.fw_gap);
        let ex = pop.excess_risk(&fit.lambda_hat).map_err(|e| e.to_string())?;
        let off = sparsity_mass(&fit.lambda_hat, &support).unwrap();
        let ratio = (ex + 2.0 * e * off - 3.0 * target_excess).max(0.0) / (e * e * alpha.value * alpha.value + e / n_atoms);
        ensure!(ratio.is_finite(), "ratio not finite at epsilon {e}");
        max_ratio = max_ratio.max(ratio);
        excess.push(ex);
    }
    ensure!(max_ratio <= 100.0, "max ratio {max_ratio:.2}");
    let monotone = excess.windows(2).all(|w| w[0] <= w[1] + GAP_TOL);
    ensure!(monotone, "excess risk not monotone in epsilon: {excess:?}");
    let (first, last) = (excess[0], excess[excess.len() - 1]);
    ensure!(first - target_excess <= 1e-2 * (last - target_excess), "excess risk does not approach the minimum: {first:.2e}");
    Ok(format!("alpha {:.3} ({:?}), max ratio {max_ratio:.2}, excess {first:.2e} at eps {:.0e} up to {last:.2e}", alpha.value, alpha.method, eps[0]))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = a.qr().q();
    let eig = DVector::from_fn(n, |_, _| 10f64.powf(rng.random_range(-2.0..1.0)));
    let m = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Largest sampled `⟨w, u⟩ / √(uᵀHu)` over directions `u` summing to zero.
/// Directions are drawn isotropically in the coordinates where the
/// restricted quadratic form is the identity.
fn sampled_interior_alignment(h: &DMatrix<f64>, w: &[f64], samples: usize, seed: u64) -> f64 {
    let n = h.nrows();
    let basis = DMatrix::from_fn(n, n - 1, |i, j| if i == j { 1.0 } else if i == n - 1 { -1.0 } else { 0.0 });
    let m = basis.transpose() * h * &basis;
    let l = m.cholesky().expect("positive definite").l();
    let l_inv_t = l.transpose().try_inverse().expect("invertible");
    let t = &basis * l_inv_t;
    let w = DVector::from_column_slice(w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let z = DVector::from_fn(n - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = &t * z;
        let q = u.dot(&(h * &u));
        best = best.max(w.dot(&u) / q.sqrt());
    }
    best
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let rel = 1e-8;
    struct Instance {
        h: DMatrix<f64>,
        w: Vec<f64>,
        closed: f64,
        seed: u64,
    }
    let mut oracle = Vec::new();
    let mut rho_range_ok = true;
    for i in 0..200 {
        let n = rng.random_range(2..9);
        let hm = random_spd(&mut rng, n);
        let h = GramMatrix::new(hm.clone()).unwrap();
        let mut lam: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        for j in 0..n {
            if n > 2 && rng.random_bool(0.3) {
                lam[j] = 0.0;
            }
        }
        if lam.iter().all(|v| *v == 0.0) {
            lam[0] = 1.0;
        }
        let s: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|v| *v /= s);
        let spec = TangentConeSpec::new(lam).unwrap();
        let w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-2.0..2.0) }).collect();
        let a = alignment_coefficient(&h, &spec, &w).map_err(|e| e.to_string())?;
        let norm = w_h_norm(&h, &w).unwrap();
        let b = sparsity_alignment_bound(&h, &w).unwrap();
        ensure!(a.value <= norm * (1.0 + rel), "instance {i}: alignment {} > |w|_H {norm}", a.value);
        ensure!(norm <= b.l2 * (1.0 + rel), "instance {i}: |w|_H {norm} > l2 bound {}", b.l2);
        ensure!(b.l2 <= b.linf * (1.0 + rel), "instance {i}: l2 bound {} > linf bound {}", b.l2, b.linf);

        let interior = SimplexWeights::from_weights(&(0..n).map(|_| rng.random_range(0.05..1.0)).collect::<Vec<_>>()).unwrap();
        let wi: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ai = alignment_coefficient(&h, &TangentConeSpec::interior(&interior), &wi).map_err(|e| e.to_string())?;
        ensure!(ai.method == AlignmentMethod::ClosedForm, "instance {i}: interior route {:?}", ai.method);
        oracle.push(Instance { h: hm, w: wi, closed: ai.value, seed: 7000 + i as u64 });

        let j = SupportSet::new((0..n - 1).filter(|_| rng.random_bool(0.5)).chain([n - 1]), n).unwrap();
        if j.len() < n {
            let r = rho(&h, &j).unwrap();
            rho_range_ok &= (0.0..=1.0).contains(&r);
        }
    }
    ensure!(rho_range_ok, "rho outside [0, 1]");

    let worst = oracle
        .par_iter()
        .map(|inst| {
            let sampled = sampled_interior_alignment(&inst.h, &inst.w, 1_000_000, inst.seed);
            (sampled, inst.closed)
        })
        .collect::<Vec<_>>();
    let mut min_frac = f64::INFINITY;
    for (k, (sampled, closed)) in worst.iter().enumerate() {
        ensure!(*sampled <= closed * (1.0 + rel), "instance {k}: sampled {sampled} above closed form {closed}");
        min_frac = min_frac.min(sampled / closed);
    }
    ensure!(min_frac >= 0.98, "sampling oracle reaches only {:.2}% of the closed form", 100.0 * min_frac);

    let mut max_block = 0.0f64;
    let mut min_dup = 1.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..9);
        let split = rng.random_range(1..n);
        let mut hm = random_spd(&mut rng, n);
        for a in 0..split {
            for b in split..n {
                hm[(a, b)] = 0.0;
                hm[(b, a)] = 0.0;
            }
        }
        let top = DMatrix::from_fn(split, split, |a, b| hm[(a, b)]);
        let bottom = DMatrix::from_fn(n - split, n - split, |a, b| hm[(split + a, split + b)]);
        let mut block = DMatrix::zeros(n, n);
        block.view_mut((0, 0), (split, split)).copy_from(&(&top * top.transpose()));
        block.view_mut((split, split), (n - split, n - split)).copy_from(&(&bottom * bottom.transpose()));
        let j = SupportSet::new(0..split, n).unwrap();
        max_block = max_block.max(rho(&GramMatrix::new(block).unwrap(), &j).unwrap());

        let m = 40;
        let mut x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let src = rng.random_range(0..split);
        let dst = rng.random_range(split..n);
        let col = x.column(src).into_owned();
        x.set_column(dst, &col);
        let g = x.transpose() * &x / m as f64;
        min_dup = min_dup.min(rho(&GramMatrix::new((&g + g.transpose()) * 0.5).unwrap(), &j).unwrap());
    }
    ensure!(max_block <= 1e-10, "block-diagonal rho {max_block:.2e}");
    ensure!(min_dup >= 1.0 - 1e-10, "duplicated-column rho {min_dup}");
    Ok(format!("200 chains hold, sampling oracle within {:.2}% of closed form, rho block {max_block:.1e} dup {min_dup}", 100.0 * (1.0 - min_frac)))
}

fn criterion_8() -> Outcome {
    let config = load("density.toml");
    let rows = run_sweep(&config).map_err(|e| e.to_string())?;
    records_ok(&rows)?;
    let mut worst_mass = 0.0f64;
    for &n in &config.n {
        for rep in 0..config.replications {
            let (problem, _) = generate(&config, n, rep).map_err(|e| e.to_string())?;
            let TaskProblem::Density(p) = &problem else { return Err("expected a density problem".into()) };
            let fit = problem.solve(&SolverOptions { tol: config.tol, ..Default::default() }).map_err(|e| e.to_string())?;
            worst_mass = worst_mass.max(mixture_mass_error(p, &fit.lambda_hat));
        }
    }
    ensure!(worst_mass <= 1e-8, "mixture integrates to 1 only within {worst_mass:.2e}");

    let d = config.target.support.len();
    let a = config.confidence();
    let n_atoms = config.dictionary.n_atoms;
    let l2 = by_n(&rows, |r| r.l2_dist_sq);
    let rates: Vec<f64> = l2.keys().map(|&n| rate(d, a, n_atoms, n)).collect();
    let slope = log_log_slope(&rates, &l2.values().copied().collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    ensure!((0.7..=1.3).contains(&slope), "slope {slope:.3}");

    let scenario = Scenario::new(&config).map_err(|e| e.to_string())?;
    let pop = scenario.population();
    let approx = pop.excess_risk(scenario.target()).map_err(|e| e.to_string())?;
    let terms = pop.subspace_terms(&config.support()).map_err(|e| e.to_string())?;
    let sup = pop.bayes_sup();
    let alpha = rows[0].alpha_n;
    let log_n = (n_atoms as f64).ln();
    let ratios = by_n(&rows, |r| {
        let rt = rate(d, a, n_atoms, r.n);
        let terms = sup * sup * rt
            + terms.residual * (a * log_n / r.n as f64).sqrt()
            + terms.u_of_l * log_n / r.n as f64
            + r.epsilon * r.epsilon * alpha * alpha
            + r.epsilon / n_atoms as f64;
        r.excess_risk_hat / (4.0 * approx + terms)
    });
    let max_ratio = ratios.values().copied().fold(0.0, f64::max);
    ensure!(max_ratio <= 25.0, "oracle ratio {max_ratio:.2}");
    Ok(format!("mass error {worst_mass:.1e}, slope {slope:.3}, max oracle ratio {max_ratio:.3}"))
}

fn mixture_mass_error(p: &DensityProblem, lambda: &SimplexWeights) -> f64 {
    let f = p.mixture(lambda).unwrap();
    (p.quadrature().integrate(&f) - 1.0).abs()
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hullsparse")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("hullsparse {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = configs_dir().join("smoke.toml");
    let config = config.to_str().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    run_cli(&["--out", first.to_str().unwrap(), "sweep", "--config", config])?;
    run_cli(&["--threads", "3", "--out", second.to_str().unwrap(), "sweep", "--config", config])?;
    let a = std::fs::read(&first).map_err(|e| e.to_string())?;
    let b = std::fs::read(&second).map_err(|e| e.to_string())?;
    ensure!(!a.is_empty() && a == b, "sweep output differs between runs");

    let planted = dir.path().join("planted.csv");
    let records = planted_records(2.5, &[100, 1000, 10_000], 5, 20);
    write_records_csv(std::fs::File::create(&planted).map_err(|e| e.to_string())?, &records).map_err(|e| e.to_string())?;
    let stdout = run_cli(&["verify", "--csv", planted.to_str().unwrap(), "--mode", "oracle", "--d", "2"])?;
    let report: serde_json::Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let slope = report["slope"].as_f64().ok_or("report has no slope")?;
    ensure!((slope - 1.0).abs() <= 0.01, "planted slope {slope}");
    Ok(format!("{} identical bytes, planted slope {slope:.4}", a.len()))
}
