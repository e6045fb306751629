//! Entropic proximal mirror descent for `min_{λ ∈ Λ} f(λ) + ε Σ λ_j log λ_j`.
//!
//! Each step solves
//! `min_λ ⟨∇f(λ_t), λ⟩ + ε Σ λ log λ + (1/η) K(λ|λ_t)`
//! in closed form:
//! `log λ_{t+1,j} = (log λ_{t,j}/η − ∂_j f(λ_t)) / (ε + 1/η)` followed by
//! normalization. The penalty is handled inside the prox, so iterates never
//! leave the interior of the simplex.

use nalgebra::{DMatrix, DVector};

use super::{SolveResult, SolverOptions, TracePoint};
use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::simplex::{SimplexWeights, LOG_WEIGHT_FLOOR};

/// The smooth, convex data term `f(λ)`.
pub(crate) trait DataTerm {
    fn n_atoms(&self) -> usize;
    /// Writes `∇f(λ)` into `grad` and returns `f(λ)`.
    fn value_grad(&self, weights: &[f64], grad: &mut [f64]) -> f64;
    fn value(&self, weights: &[f64]) -> f64;
    /// `f(from + delta) − f(from) − ⟨∇f(from), delta⟩`, evaluated without
    /// subtracting nearly equal function values.
    fn remainder(&self, from: &[f64], delta: &[f64]) -> f64;
    /// Smoothness constant with respect to `‖·‖₁`.
    fn smoothness(&self) -> f64;
}

// Five-point Gauss–Legendre rule on [0, 1].
const GAUSS_NODES: [f64; 5] = [
    0.046_910_077_030_668,
    0.230_765_344_947_158_5,
    0.5,
    0.769_234_655_052_841_5,
    0.953_089_922_969_332,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_5,
    0.239_314_335_249_683_2,
    0.284_444_444_444_444_4,
    0.239_314_335_249_683_2,
    0.118_463_442_528_094_5,
];

/// `Σ_i w_i ℓ(y_i, (Hλ)_i)` over a weighted design.
pub(crate) struct LossData<'a> {
    pub values: &'a DMatrix<f64>,
    pub point_weights: &'a [f64],
    pub labels: &'a [f64],
    pub loss: &'a LossModel,
}

impl LossData<'_> {
    fn predictions(&self, weights: &[f64]) -> DVector<f64> {
        self.values * DVector::from_column_slice(weights)
    }
}

impl DataTerm for LossData<'_> {
    fn n_atoms(&self) -> usize {
        self.values.ncols()
    }

    fn value_grad(&self, weights: &[f64], grad: &mut [f64]) -> f64 {
        let f = self.predictions(weights);
        let mut value = 0.0;
        let mut r = DVector::zeros(f.len());
        for i in 0..f.len() {
            let (w, y, u) = (self.point_weights[i], self.labels[i], f[i]);
            value += w * self.loss.eval(y, u);
            r[i] = w * self.loss.d1(y, u);
        }
        let g = self.values.tr_mul(&r);
        grad.copy_from_slice(g.as_slice());
        value
    }

    fn value(&self, weights: &[f64]) -> f64 {
        let f = self.predictions(weights);
        (0..f.len()).map(|i| self.point_weights[i] * self.loss.eval(self.labels[i], f[i])).sum()
    }

    fn remainder(&self, from: &[f64], delta: &[f64]) -> f64 {
        let u = self.predictions(from);
        let du = self.predictions(delta);
        let mut total = 0.0;
        for i in 0..u.len() {
            let d = du[i];
            let integral: f64 = GAUSS_NODES
                .iter()
                .zip(GAUSS_WEIGHTS)
                .map(|(s, c)| c * (1.0 - s) * self.loss.d2(self.labels[i], u[i] + s * d))
                .sum();
            total += self.point_weights[i] * d * d * integral;
        }
        total
    }

    fn smoothness(&self) -> f64 {
        let hmax = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.loss.curvature_bound() * hmax * hmax
    }
}

/// `λᵀGλ − 2bᵀλ + c`.
#[derive(Debug, Clone)]
pub(crate) struct QuadraticData {
    pub g: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl DataTerm for QuadraticData {
    fn n_atoms(&self) -> usize {
        self.b.len()
    }

    fn value_grad(&self, weights: &[f64], grad: &mut [f64]) -> f64 {
        let l = DVector::from_column_slice(weights);
        let gl = &self.g * &l;
        for j in 0..grad.len() {
            grad[j] = 2.0 * (gl[j] - self.b[j]);
        }
        l.dot(&gl) - 2.0 * l.dot(&self.b) + self.c
    }

    fn value(&self, weights: &[f64]) -> f64 {
        let l = DVector::from_column_slice(weights);
        l.dot(&(&self.g * &l)) - 2.0 * l.dot(&self.b) + self.c
    }

    fn remainder(&self, _from: &[f64], delta: &[f64]) -> f64 {
        let delta = DVector::from_column_slice(delta);
        delta.dot(&(&self.g * &delta))
    }

    fn smoothness(&self) -> f64 {
        2.0 * self.g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Partial derivatives of the penalized objective and the Frank–Wolfe gap.
pub(crate) fn gap_from_grad(log_weights: &[f64], data_grad: &[f64], epsilon: f64) -> f64 {
    let mut mean = 0.0;
    let mut min = f64::INFINITY;
    for (lw, g) in log_weights.iter().zip(data_grad) {
        let d = g + epsilon * (lw + 1.0);
        mean += lw.exp() * d;
        min = min.min(d);
    }
    (mean - min).max(0.0)
}

fn penalty(log_weights: &[f64], epsilon: f64) -> f64 {
    epsilon
        * log_weights
            .iter()
            .filter(|&&lw| lw > LOG_WEIGHT_FLOOR)
            .map(|&lw| lw.exp() * lw)
            .sum::<f64>()
}

/// One prox step with inverse step size `a`. Writes the new log-weights,
/// weights and the weight change `λ⁺ − λ`, and returns `K(λ⁺|λ)`.
///
/// The step is carried as centred shifts `e_j = log λ⁺_j − log λ_j + c` so
/// that `K` and `λ⁺ − λ` keep relative precision when the step is tiny.
#[allow(clippy::too_many_arguments)]
fn prox_step(
    lw: &[f64],
    weights: &[f64],
    grad: &[f64],
    epsilon: f64,
    a: f64,
    shift: &mut [f64],
    cand: &mut [f64],
    cand_w: &mut [f64],
    delta: &mut [f64],
) -> f64 {
    let n = lw.len();
    for j in 0..n {
        shift[j] = -(epsilon * lw[j] + grad[j]) / (epsilon + a);
    }
    let mean: f64 = (0..n).map(|j| weights[j] * shift[j]).sum();
    let (mut s1, mut z, mut t) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let e = shift[j] - mean;
        shift[j] = e;
        let em1 = e.exp_m1();
        s1 += weights[j] * e;
        z += weights[j] * (em1 - e);
        t += weights[j] * e * em1;
    }
    let zp = s1 + z;
    let c = zp.ln_1p();
    for j in 0..n {
        cand[j] = (lw[j] + shift[j] - c).max(LOG_WEIGHT_FLOOR);
        cand_w[j] = cand[j].exp();
        delta[j] = weights[j] * (shift[j] - c).exp_m1();
    }
    ((s1 + t) / (1.0 + zp) - c).max(0.0)
}

const CHECK_EVERY: usize = 10;
const GROWTH: f64 = 1.5;
const MAX_BACKTRACKS: usize = 80;

pub(crate) fn minimize<D: DataTerm>(data: &D, epsilon: f64, opts: &SolverOptions) -> Result<SolveResult> {
    opts.validate()?;
    let n = data.n_atoms();
    let mut lw = SimplexWeights::uniform(n)?.log_weights().to_vec();
    let mut weights: Vec<f64> = lw.iter().map(|v| v.exp()).collect();
    let mut grad = vec![0.0; n];
    let f = data.value_grad(&weights, &mut grad);
    let mut objective = f + penalty(&lw, epsilon);
    if !objective.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    // Inverse step size 1/η, starting from the smoothness bound.
    let mut inv_step = data.smoothness().max(1e-12);
    let mut trace = Vec::new();
    let mut gap;
    let mut iterations = 0;
    let mut stalled = false;

    let finish = |lw: Vec<f64>, objective, gap, iterations, trace| -> Result<SolveResult> {
        let result = SolveResult {
            lambda_hat: SimplexWeights::from_log_weights(lw)?,
            objective,
            fw_gap: gap,
            iterations,
            trace,
        };
        Ok(result)
    };

    let mut cand = vec![0.0; n];
    let mut cand_w = vec![0.0; n];
    let mut cand_grad = vec![0.0; n];
    let mut shift = vec![0.0; n];
    let mut delta = vec![0.0; n];
    loop {
        if iterations % CHECK_EVERY == 0 || stalled {
            gap = gap_from_grad(&lw, &grad, epsilon);
            if opts.trace {
                trace.push(TracePoint { iteration: iterations, objective, gap: Some(gap) });
            }
            if gap <= opts.tol || n == 1 {
                return finish(lw, objective, gap, iterations, trace);
            }
            if stalled || iterations >= opts.max_iters {
                let result = finish(lw, objective, gap, iterations, trace)?;
                return Err(Error::MaxItersExceeded(Box::new(result)));
            }
        } else if opts.trace {
            trace.push(TracePoint { iteration: iterations, objective, gap: None });
        }

        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let kl = prox_step(&lw, &weights, &grad, epsilon, inv_step, &mut shift, &mut cand, &mut cand_w, &mut delta);
            let f_new = data.value_grad(&cand_w, &mut cand_grad);
            let obj_new = f_new + penalty(&cand, epsilon);
            if !obj_new.is_finite() {
                return Err(Error::NonFiniteObjective);
            }
            // Bregman sufficient decrease plus a monotone safeguard.
            let slack = 1e-14 * objective.abs().max(1.0);
            if data.remainder(&weights, &delta) <= inv_step * kl && obj_new <= objective + slack {
                std::mem::swap(&mut lw, &mut cand);
                std::mem::swap(&mut weights, &mut cand_w);
                std::mem::swap(&mut grad, &mut cand_grad);
                objective = obj_new;
                inv_step /= GROWTH;
                accepted = true;
                break;
            }
            inv_step *= 2.0;
        }
        iterations += 1;
        if !accepted {
            stalled = true;
        }
    }
}

