//! Entropy-penalized risk minimization over the simplex:
//! `min_{λ ∈ Λ} Σ_i w_i ℓ(y_i, f_λ(x_i)) + ε Σ_j λ_j log λ_j`.
//!
//! With empirical weights this is the data-driven estimator `λ̂^ε`; with the
//! weights of a known design distribution (and label quadrature) it is the
//! population comparator `λ^ε`.

pub(crate) mod engine;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dictionary::{DesignMatrix, MeasureKind, MeasureRep};
use crate::error::{check_dim, Error, Result};
use crate::loss::{LossKind, LossModel};
use crate::simplex::SimplexWeights;
use engine::{DataTerm, LossData, QuadraticData};

/// A penalized risk minimization problem on a weighted design.
#[derive(Debug, Clone)]
pub struct ErmProblem {
    design: DesignMatrix,
    labels: Vec<f64>,
    loss: LossModel,
    epsilon: f64,
}

impl ErmProblem {
    pub fn new(design: DesignMatrix, labels: Vec<f64>, loss: LossModel, epsilon: f64) -> Result<Self> {
        check_dim(design.n_points(), labels.len())?;
        check_epsilon(epsilon)?;
        if labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidArgument("labels must be finite".into()));
        }
        Ok(Self { design, labels, loss, epsilon })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn loss(&self) -> &LossModel {
        &self.loss
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_atoms(&self) -> usize {
        self.design.n_atoms()
    }

    /// The same data with a different regularization parameter.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon, ..self.clone() })
    }

    /// `Σ_i w_i ℓ(y_i, f_λ(x_i))` without the penalty.
    pub fn risk(&self, lambda: &SimplexWeights) -> Result<f64> {
        check_dim(self.n_atoms(), lambda.n_atoms())?;
        Ok(self.loss_data().value(&lambda.weights()))
    }

    fn loss_data(&self) -> LossData<'_> {
        LossData {
            values: self.design.values(),
            point_weights: self.design.measure().weights(),
            labels: &self.labels,
            loss: &self.loss,
        }
    }

    /// Sufficient statistics `(HᵀWH, HᵀWy, Σ w y²)` for quadratic loss.
    fn quadratic_data(&self) -> QuadraticData {
        let h = self.design.values();
        let w = self.design.measure().weights();
        let wh = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| w[i] * h[(i, j)]);
        let mut g = h.tr_mul(&wh);
        g = (&g + g.transpose()) * 0.5;
        let b = wh.tr_mul(&DVector::from_column_slice(&self.labels));
        let c = self.labels.iter().zip(w).map(|(y, wi)| wi * y * y).sum();
        QuadraticData { g, b, c }
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Target Frank–Wolfe gap.
    pub tol: f64,
    pub max_iters: usize,
    /// Record the objective at every iteration.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 200_000, trace: false }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.tol > 0.0 && self.tol.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)))
        }
    }
}

/// Objective value at one iteration; the gap is present on iterations where
/// it was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub lambda_hat: SimplexWeights,
    pub objective: f64,
    pub fw_gap: f64,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
}

/// Serialized form of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub fw_gap: f64,
    pub iterations: usize,
}

impl SolveResult {
    pub fn record(&self) -> SolveRecord {
        SolveRecord {
            lambda: self.lambda_hat.weights(),
            objective: self.objective,
            fw_gap: self.fw_gap,
            iterations: self.iterations,
        }
    }
}

/// `P(ℓ∘f_λ) + ε Σ λ_j log λ_j` over the problem's measure.
pub fn objective(problem: &ErmProblem, lambda: &SimplexWeights) -> Result<f64> {
    Ok(problem.risk(lambda)? + problem.epsilon * lambda.neg_entropy())
}

/// `∂_j F(λ) = Σ_i w_i ℓ'(y_i, f_λ(x_i)) h_j(x_i) + ε(log λ_j + 1)`.
pub fn gradient(problem: &ErmProblem, lambda: &SimplexWeights) -> Result<Vec<f64>> {
    check_dim(problem.n_atoms(), lambda.n_atoms())?;
    let mut g = vec![0.0; problem.n_atoms()];
    problem.loss_data().value_grad(&lambda.weights(), &mut g);
    for (gj, lw) in g.iter_mut().zip(lambda.log_weights()) {
        *gj += problem.epsilon * (lw + 1.0);
    }
    Ok(g)
}

/// `⟨∇F(λ), λ⟩ − min_j ∂_j F(λ)`, an upper bound on `F(λ) − min F`.
pub fn fw_gap(problem: &ErmProblem, lambda: &SimplexWeights) -> Result<f64> {
    let g = gradient(problem, lambda)?;
    let mean: f64 = g.iter().zip(lambda.log_weights()).map(|(gj, lw)| gj * lw.exp()).sum();
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((mean - min).max(0.0))
}

/// Minimizes the penalized risk. Quadratic losses run on precomputed
/// sufficient statistics; other losses evaluate the design at every step.
pub fn solve(problem: &ErmProblem, opts: &SolverOptions) -> Result<SolveResult> {
    let mut result = match problem.loss.kind() {
        LossKind::Quadratic => engine::minimize(&problem.quadratic_data(), problem.epsilon, opts),
        _ => engine::minimize(&problem.loss_data(), problem.epsilon, opts),
    }?;
    result.objective = objective(problem, &result.lambda_hat)?;
    Ok(result)
}

/// Conditional label law at each point of a known design.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelModel {
    /// One label per point. For quadratic loss with centred additive noise,
    /// passing the regression function gives the same minimizer as the noisy
    /// law; the risks differ by the noise variance.
    Exact(Vec<f64>),
    /// Quadrature nodes `(label, probability)` per point.
    Quadrature(Vec<Vec<(f64, f64)>>),
}

impl LabelModel {
    /// Binary labels with `P(Y = +1 | x_i) = p_i`.
    pub fn binary(prob_positive: &[f64]) -> Result<Self> {
        if prob_positive.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        Ok(LabelModel::Quadrature(prob_positive.iter().map(|&p| vec![(1.0, p), (-1.0, 1.0 - p)]).collect()))
    }

    fn n_points(&self) -> usize {
        match self {
            LabelModel::Exact(v) => v.len(),
            LabelModel::Quadrature(v) => v.len(),
        }
    }
}

/// Expands a known design and a label law into one weighted problem over the
/// joint `(x, y)` grid. Nodes with zero probability are dropped.
pub fn population_problem(design: &DesignMatrix, labels: &LabelModel, loss: &LossModel, epsilon: f64) -> Result<ErmProblem> {
    if design.measure().kind() != MeasureKind::KnownGrid {
        return Err(Error::InvalidArgument("population problems need a known-grid measure".into()));
    }
    check_dim(design.n_points(), labels.n_points())?;
    match labels {
        LabelModel::Exact(y) => ErmProblem::new(design.clone(), y.clone(), loss.clone(), epsilon),
        LabelModel::Quadrature(nodes) => {
            let w = design.measure().weights();
            let mut rows = Vec::new();
            let mut points = Vec::new();
            let mut weights = Vec::new();
            let mut ys = Vec::new();
            for (i, node) in nodes.iter().enumerate() {
                let total: f64 = node.iter().map(|(_, p)| p).sum();
                if node.iter().any(|(_, p)| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("label law at point {i} is not a probability")));
                }
                for &(y, p) in node.iter().filter(|(_, p)| *p > 0.0) {
                    rows.push(i);
                    points.push(design.measure().points()[i].clone());
                    weights.push(w[i] * p);
                    ys.push(y);
                }
            }
            let h = design.values();
            let values = DMatrix::from_fn(rows.len(), h.ncols(), |r, j| h[(rows[r], j)]);
            let measure = MeasureRep::weighted(points, weights, MeasureKind::KnownGrid)?;
            let joint = DesignMatrix::with_range(values, measure, design.range())?;
            ErmProblem::new(joint, ys, loss.clone(), epsilon)
        }
    }
}

/// Solves the population problem `argmin_λ P(ℓ∘f_λ) + ε Σ λ log λ`.
pub fn solve_population(
    design: &DesignMatrix,
    labels: &LabelModel,
    loss: &LossModel,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    solve(&population_problem(design, labels, loss, epsilon)?, opts)
}
