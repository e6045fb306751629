//! Sparse mixture density estimation with quadratic loss:
//! `min_{λ ∈ Λ} ‖f_λ‖²_{L₂(μ)} − 2 P_n f_λ + ε Σ λ_j log λ_j`.

mod families;
mod sampling;

pub use families::{DensityDictionary, DensityFamily, DEFAULT_GRID};
pub use sampling::sample_from_grid;

use nalgebra::DMatrix;

use crate::dictionary::{DesignMatrix, GramMatrix, MeasureKind, MeasureRep};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::simplex::SimplexWeights;
use crate::solver::engine::{self, QuadraticData};
use crate::solver::{check_epsilon, SolveResult, SolverOptions};

const MASS_TOL: f64 = 1e-8;

/// `λᵀGλ − 2 h̄ᵀλ + ε Σ λ log λ` with `G` the `L₂(μ)` Gram matrix of the
/// dictionary and `h̄` the vector of (empirical or population) atom means.
#[derive(Debug, Clone)]
pub struct DensityProblem {
    gram: GramMatrix,
    means: Vec<f64>,
    epsilon: f64,
    quadrature: MeasureRep,
    grid_values: DMatrix<f64>,
}

impl DensityProblem {
    /// Checks that the columns of `grid_values` are nonnegative, integrate
    /// to 1 under `quadrature`, and that `gram` has matching size.
    pub fn new(
        gram: GramMatrix,
        means: Vec<f64>,
        epsilon: f64,
        quadrature: MeasureRep,
        grid_values: DMatrix<f64>,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        let n = gram.n_atoms();
        check_dim(n, means.len())?;
        check_dim(n, grid_values.ncols())?;
        check_dim(quadrature.len(), grid_values.nrows())?;
        if quadrature.kind() != MeasureKind::KnownGrid {
            return Err(Error::InvalidArgument("the base measure must be a known grid".into()));
        }
        if grid_values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument("density atoms must be nonnegative".into()));
        }
        for j in 0..n {
            let col: Vec<f64> = grid_values.column(j).iter().copied().collect();
            let mass = quadrature.integrate(&col);
            if (mass - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidArgument(format!("atom {j} integrates to {mass}, not 1")));
            }
        }
        Ok(Self { gram, means, epsilon, quadrature, grid_values })
    }

    /// The empirical problem for i.i.d. samples `X_1, …, X_n`.
    pub fn from_samples(dict: &DensityDictionary, samples: &[f64], epsilon: f64) -> Result<Self> {
        let means = dict.empirical_means(samples)?;
        Self::new(dict.gram(), means, epsilon, dict.quadrature().clone(), dict.design().values().clone())
    }

    /// The population problem for a density `f*` given on the quadrature
    /// grid: `h̄_j = ⟨f*, h_j⟩_{L₂(μ)}`.
    pub fn population(dict: &DensityDictionary, f_star: &[f64], epsilon: f64) -> Result<Self> {
        let q = dict.quadrature();
        check_dim(q.len(), f_star.len())?;
        let w = q.weights();
        let h = dict.design().values();
        let means = (0..dict.n_atoms()).map(|j| (0..q.len()).map(|i| w[i] * f_star[i] * h[(i, j)]).sum()).collect();
        Self::new(dict.gram(), means, epsilon, q.clone(), h.clone())
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn quadrature(&self) -> &MeasureRep {
        &self.quadrature
    }

    pub fn grid_values(&self) -> &DMatrix<f64> {
        &self.grid_values
    }

    pub fn n_atoms(&self) -> usize {
        self.means.len()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon, ..self.clone() })
    }

    /// `f_λ` on the quadrature grid.
    pub fn mixture(&self, lambda: &SimplexWeights) -> Result<Vec<f64>> {
        check_dim(self.n_atoms(), lambda.n_atoms())?;
        Ok((&self.grid_values * linalg::to_dvector(&lambda.weights())).iter().copied().collect())
    }

    fn quadratic_data(&self) -> QuadraticData {
        QuadraticData { g: self.gram.matrix().clone(), b: linalg::to_dvector(&self.means), c: 0.0 }
    }
}

pub fn density_objective(problem: &DensityProblem, lambda: &SimplexWeights) -> Result<f64> {
    check_dim(problem.n_atoms(), lambda.n_atoms())?;
    let w = lambda.weights();
    let quad = problem.gram.inner(&w, &w)?;
    Ok(quad - 2.0 * linalg::dot(&problem.means, &w) + problem.epsilon * lambda.neg_entropy())
}

/// `2Gλ − 2h̄ + ε(log λ + 1)`.
pub fn density_gradient(problem: &DensityProblem, lambda: &SimplexWeights) -> Result<Vec<f64>> {
    check_dim(problem.n_atoms(), lambda.n_atoms())?;
    let gl = problem.gram.matrix() * linalg::to_dvector(&lambda.weights());
    Ok((0..problem.n_atoms())
        .map(|j| 2.0 * (gl[j] - problem.means[j]) + problem.epsilon * (lambda.log_weights()[j] + 1.0))
        .collect())
}

pub fn density_fw_gap(problem: &DensityProblem, lambda: &SimplexWeights) -> Result<f64> {
    let g = density_gradient(problem, lambda)?;
    let mean: f64 = g.iter().zip(lambda.log_weights()).map(|(gj, lw)| gj * lw.exp()).sum();
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((mean - min).max(0.0))
}

pub fn solve_density(problem: &DensityProblem, opts: &SolverOptions) -> Result<SolveResult> {
    let mut result = engine::minimize(&problem.quadratic_data(), problem.epsilon, opts)?;
    result.objective = density_objective(problem, &result.lambda_hat)?;
    Ok(result)
}

/// Minimizes `‖f_λ − f*‖²_{L₂(μ)} − ε H(λ)`; the reported objective omits
/// the constant `‖f*‖²`.
pub fn solve_density_population(
    f_star: &[f64],
    dict: &DensityDictionary,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    solve_density(&DensityProblem::population(dict, f_star, epsilon)?, opts)
}

/// `‖f_λ − f*‖²_{L₂(μ)}` by quadrature, with `design` holding the atoms on
/// the quadrature grid.
pub fn l2_mu_error(design: &DesignMatrix, lambda: &SimplexWeights, f_star: &[f64]) -> Result<f64> {
    check_dim(design.n_points(), f_star.len())?;
    check_dim(design.n_atoms(), lambda.n_atoms())?;
    let f = design.combine(&lambda.weights())?;
    let diff2: Vec<f64> = f.iter().zip(f_star).map(|(a, b)| (a - b) * (a - b)).collect();
    Ok(design.measure().integrate(&diff2))
}
