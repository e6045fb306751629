//! Entropy-penalized aggregation over the convex hull of a function
//! dictionary.
//!
//! The crate solves
//!
//! ```text
//! minimize_λ∈Λ   Σ_i w_i ℓ(y_i, f_λ(x_i)) + ε Σ_j λ_j log λ_j,    f_λ = Σ_j λ_j h_j
//! ```
//!
//! over the probability simplex `Λ`, for empirical and known design
//! measures, plus the density-estimation analogue, and provides the geometric
//! quantities (alignment coefficients, restricted eigenvalues, canonical
//! correlations) that govern how sparse the solutions are.
//!
//! ```
//! use hullsparse::{solve, ErmProblem, LossModel, SolverOptions};
//! use hullsparse::dictionary::{MeasureRep, PredictionDictionary, PredictionFamily};
//!
//! let measure = MeasureRep::uniform_grid(64).unwrap();
//! let dict = PredictionDictionary::new(PredictionFamily::Trig, 5).unwrap();
//! let design = dict.design(measure).unwrap();
//! let labels = design.column(1);
//! let problem = ErmProblem::new(design, labels, LossModel::quadratic(-1.0, 1.0), 0.01).unwrap();
//! let fit = solve(&problem, &SolverOptions::default()).unwrap();
//! assert!(fit.fw_gap <= 1e-8);
//! assert!(fit.lambda_hat.weight(1) > 0.5);
//! ```

pub mod density;
pub mod dictionary;
pub mod error;
pub mod experiments;
pub mod geometry;
pub(crate) mod linalg;
pub mod loss;
pub mod simplex;
pub mod solver;

pub use error::{Error, Result};
pub use loss::{loss_risk, LabelDomain, LossKind, LossModel};
pub use simplex::{entropy, kl, sparsity_mass, symmetric_kl, SimplexWeights, SupportSet};
pub use solver::{
    fw_gap, gradient, objective, population_problem, solve, solve_population, ErmProblem, LabelModel, SolveRecord,
    SolveResult, SolverOptions, TracePoint,
};
