//! Synthetic data-generating laws with an exactly known population.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, Task};
use crate::density::{
    density_fw_gap, sample_from_grid, solve_density, DensityDictionary, DensityProblem,
};
use super::verify::SubspaceTerms;
use crate::dictionary::{
    gram, residual_norms, u_of_l, DesignMatrix, GramMatrix, MeasureRep, PredictionDictionary, SubspaceBasis, ValueRange,
};
use crate::error::{Error, Result};
use crate::geometry::{alpha_n, Alignment, TangentConeSpec};
use crate::loss::{loss_risk, LossModel};
use crate::simplex::{SimplexWeights, SupportSet};

const SPAN_TOL: f64 = 1e-8;
use crate::solver::{fw_gap, population_problem, solve, ErmProblem, LabelModel, SolveResult, SolverOptions};

/// A prediction or density problem with a common solver interface.
#[derive(Debug, Clone)]
pub enum TaskProblem {
    Erm(ErmProblem),
    Density(DensityProblem),
}

impl TaskProblem {
    pub fn n_atoms(&self) -> usize {
        match self {
            TaskProblem::Erm(p) => p.n_atoms(),
            TaskProblem::Density(p) => p.n_atoms(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            TaskProblem::Erm(p) => p.epsilon(),
            TaskProblem::Density(p) => p.epsilon(),
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Ok(match self {
            TaskProblem::Erm(p) => TaskProblem::Erm(p.with_epsilon(epsilon)?),
            TaskProblem::Density(p) => TaskProblem::Density(p.with_epsilon(epsilon)?),
        })
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<SolveResult> {
        match self {
            TaskProblem::Erm(p) => solve(p, opts),
            TaskProblem::Density(p) => solve_density(p, opts),
        }
    }

    pub fn fw_gap(&self, lambda: &SimplexWeights) -> Result<f64> {
        match self {
            TaskProblem::Erm(p) => fw_gap(p, lambda),
            TaskProblem::Density(p) => density_fw_gap(p, lambda),
        }
    }
}

/// The population problem together with the Bayes predictor `f*` on its
/// points, which makes excess risks computable exactly.
#[derive(Debug, Clone)]
pub struct Population {
    problem: TaskProblem,
    bayes: Vec<f64>,
    gram: GramMatrix,
}

impl Population {
    pub fn problem(&self) -> &TaskProblem {
        &self.problem
    }

    /// `f*` at each point of the population measure.
    pub fn bayes(&self) -> &[f64] {
        &self.bayes
    }

    /// Gram matrix in `L₂(Π)` (prediction) or `L₂(μ)` (density).
    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Ok(Self { problem: self.problem.with_epsilon(epsilon)?, bayes: self.bayes.clone(), gram: self.gram.clone() })
    }

    /// Dictionary values on the points of the population measure.
    pub fn design(&self) -> Result<DesignMatrix> {
        match &self.problem {
            TaskProblem::Erm(p) => Ok(p.design().clone()),
            TaskProblem::Density(p) => {
                let values = p.grid_values();
                let bound = values.iter().fold(0.0f64, |m, v| m.max(*v));
                DesignMatrix::with_range(values.clone(), p.quadrature().clone(), ValueRange::Nonnegative(bound))
            }
        }
    }

    /// `‖f*‖_∞` over the population points.
    pub fn bayes_sup(&self) -> f64 {
        self.bayes.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Terms of the subspace bound for `L = span{h_j : j ∈ J}`: its
    /// dimension, `U(L)` and the residual `max_{j∈J} ‖P_{L⊥} h_j‖` (zero
    /// up to rounding for this choice of `L`).
    pub fn subspace_terms(&self, support: &SupportSet) -> Result<SubspaceTerms> {
        let design = self.design()?;
        let mut kept: Vec<usize> = Vec::new();
        for &j in support.indices() {
            let single = SupportSet::new([j], design.n_atoms())?;
            let independent = if kept.is_empty() {
                true
            } else {
                let r = residual_norms(&design, &SubspaceBasis::Columns(kept.clone()), &single)?;
                let scale = design.measure().integrate(&design.column(j).iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
                r.max > SPAN_TOL * scale.max(f64::MIN_POSITIVE)
            };
            if independent {
                kept.push(j);
            }
        }
        let basis = SubspaceBasis::Columns(kept);
        let u = u_of_l(&design, &basis)?;
        let residual = residual_norms(&design, &basis, support)?.max;
        Ok(SubspaceTerms { dim: u.dim, u_of_l: u.point_sup, residual })
    }

    /// `P(ℓ∘f_λ) − P(ℓ∘f*)`; for density estimation `‖f_λ − f*‖²_{L₂(μ)}`.
    pub fn excess_risk(&self, lambda: &SimplexWeights) -> Result<f64> {
        match &self.problem {
            TaskProblem::Erm(p) => {
                let w = p.design().measure().weights();
                Ok(p.risk(lambda)? - loss_risk(p.loss(), &self.bayes, p.labels(), w)?)
            }
            TaskProblem::Density(p) => {
                let f = p.mixture(lambda)?;
                let diff2: Vec<f64> = f.iter().zip(&self.bayes).map(|(a, b)| (a - b) * (a - b)).collect();
                Ok(p.quadrature().integrate(&diff2))
            }
        }
    }

    /// `‖f_λ − f_ν‖²` in the population norm.
    pub fn l2_sq(&self, lambda: &SimplexWeights, nu: &SimplexWeights) -> Result<f64> {
        let d: Vec<f64> = lambda.weights().iter().zip(nu.weights()).map(|(a, b)| a - b).collect();
        Ok(self.gram.inner(&d, &d)?.max(0.0))
    }

    /// Second-order Taylor remainder of the population risk between `ν` and
    /// `λ`, `P(ℓ∘f_λ) − P(ℓ∘f_ν) − P(ℓ'∘f_ν · (f_λ − f_ν))`, and its bound
    /// `½ sup ℓ'' · ‖f_λ − f_ν‖²`.
    pub fn taylor_remainder(&self, lambda: &SimplexWeights, nu: &SimplexWeights) -> Result<(f64, f64)> {
        match &self.problem {
            TaskProblem::Erm(p) => {
                let design = p.design();
                let fl = design.combine(&lambda.weights())?;
                let fn_ = design.combine(&nu.weights())?;
                let loss = p.loss();
                let mut rem = 0.0;
                let mut dist = 0.0;
                for (i, w) in design.measure().weights().iter().enumerate() {
                    let (y, a, b) = (p.labels()[i], fl[i], fn_[i]);
                    rem += w * (loss.eval(y, a) - loss.eval(y, b) - loss.d1(y, b) * (a - b));
                    dist += w * (a - b) * (a - b);
                }
                Ok((rem, 0.5 * loss.curvature_bound() * dist))
            }
            TaskProblem::Density(_) => {
                let d = self.l2_sq(lambda, nu)?;
                Ok((d, d))
            }
        }
    }
}

/// A scenario with its dictionary, population law and target prepared once.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    target: SimplexWeights,
    dictionary: Dictionary,
    population: Population,
}

#[derive(Debug, Clone)]
enum Dictionary {
    Prediction(PredictionDictionary),
    Density(DensityDictionary),
}

impl Scenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let target = config.target_weights()?;
        let n_atoms = config.dictionary.n_atoms;
        let family = &config.dictionary.family;
        let eps0 = config.epsilons(config.n[0])[0];
        let (dictionary, population) = match config.task {
            Task::Density => {
                let dict = DensityDictionary::new(family.density().expect("validated"), n_atoms, config.density_grid)?;
                let f_star = dict.mixture(&target)?;
                let problem = DensityProblem::population(&dict, &f_star, eps0)?;
                let gram = problem.gram().clone();
                let population = Population { problem: TaskProblem::Density(problem), bayes: f_star, gram };
                (Dictionary::Density(dict), population)
            }
            task => {
                let dict = PredictionDictionary::new(family.prediction().expect("validated"), n_atoms)?;
                let design = dict.design(MeasureRep::uniform_grid(config.population_grid)?)?;
                let f_star = design.combine(&target.weights())?;
                let (labels, loss) = match task {
                    Task::Regression => (LabelModel::Exact(f_star), regression_loss(config)),
                    _ => (LabelModel::binary(&f_star.iter().map(|&f| sigmoid(f)).collect::<Vec<_>>())?, LossModel::logit()),
                };
                let problem = population_problem(&design, &labels, &loss, eps0)?;
                let bayes = problem.design().combine(&target.weights())?;
                let gram = gram(problem.design());
                (Dictionary::Prediction(dict), Population { problem: TaskProblem::Erm(problem), bayes, gram })
            }
        };
        Ok(Self { config: config.clone(), target, dictionary, population })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// `λ*`.
    pub fn target(&self) -> &SimplexWeights {
        &self.target
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    /// `α_N(λ*)` under the population Gram matrix.
    pub fn alpha_n(&self) -> Result<Alignment> {
        alpha_n(self.population.gram(), &TangentConeSpec::new(self.config.target_vector()?)?)
    }

    /// The empirical problem for `n` samples of replication `replication`,
    /// at the first regularization level of the scenario.
    pub fn sample(&self, n: usize, replication: usize) -> Result<TaskProblem> {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(self.config.seed, n, replication));
        let eps = self.config.epsilons(n)[0];
        match &self.dictionary {
            Dictionary::Density(dict) => {
                let TaskProblem::Density(pop) = &self.population.problem else { unreachable!() };
                let samples = sample_from_grid(&self.population.bayes, pop.quadrature(), n, &mut rng)?;
                Ok(TaskProblem::Density(DensityProblem::from_samples(dict, &samples, eps)?))
            }
            Dictionary::Prediction(dict) => {
                let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
                let design: DesignMatrix = dict.design(MeasureRep::empirical(points)?)?;
                let f_star = design.combine(&self.target.weights())?;
                let (labels, loss) = match self.config.task {
                    Task::Regression => {
                        let h = self.config.noise.half_width;
                        let y = f_star.iter().map(|f| f + if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 }).collect();
                        (y, regression_loss(&self.config))
                    }
                    _ => {
                        let y = f_star.iter().map(|&f| if rng.random_bool(sigmoid(f)) { 1.0 } else { -1.0 }).collect();
                        (y, LossModel::logit())
                    }
                };
                Ok(TaskProblem::Erm(ErmProblem::new(design, labels, loss, eps)?))
            }
        }
    }
}

/// The empirical problem for `(n, replication)` and the population
/// counterpart of a scenario.
pub fn generate(config: &ScenarioConfig, n: usize, replication: usize) -> Result<(TaskProblem, Population)> {
    let scenario = Scenario::new(config)?;
    if n < 10 {
        return Err(Error::InvalidArgument(format!("sample size must be at least 10, got {n}")));
    }
    Ok((scenario.sample(n, replication)?, scenario.population))
}

fn regression_loss(config: &ScenarioConfig) -> LossModel {
    let bound = 1.0 + config.noise.half_width;
    LossModel::quadratic(-bound, bound)
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one `(n, replication)` cell, independent of execution order.
pub fn cell_seed(seed: u64, n: usize, replication: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ n as u64) ^ replication as u64)
}
