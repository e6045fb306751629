//! Points of the probability simplex and the information functionals on it.
//!
//! Weights are stored as log-probabilities. The entropy penalty keeps every
//! optimum strictly inside the simplex, but weights far below machine range
//! still occur for well-separated atoms, so log weights are clamped at
//! [`LOG_WEIGHT_FLOOR`] after normalization. The smallest representable
//! weight is therefore `exp(-700) ≈ 9.9e-305`.

use crate::error::{check_dim, Error, Result};

/// Lower clamp applied to normalized log weights.
pub const LOG_WEIGHT_FLOOR: f64 = -700.0;

/// A probability vector over `n_atoms` atoms, kept in the log domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    log_weights: Vec<f64>,
}

impl SimplexWeights {
    pub fn uniform(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidArgument("simplex needs at least one atom".into()));
        }
        let lw = -(n_atoms as f64).ln();
        Ok(Self { log_weights: vec![lw; n_atoms] })
    }

    /// Normalizes nonnegative weights. Zeros are mapped to the floor.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("simplex needs at least one atom".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let logs = weights
            .iter()
            .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
            .collect();
        Self::from_log_weights(logs)
    }

    /// Normalizes arbitrary log weights with log-sum-exp. `-inf` entries are allowed.
    pub fn from_log_weights(mut log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::InvalidArgument("simplex needs at least one atom".into()));
        }
        if log_weights.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidArgument("log weights must not be NaN or +inf".into()));
        }
        let lse = log_sum_exp(&log_weights);
        if !lse.is_finite() {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        for v in &mut log_weights {
            *v = (*v - lse).max(LOG_WEIGHT_FLOOR);
        }
        Ok(Self { log_weights })
    }

    pub fn n_atoms(&self) -> usize {
        self.log_weights.len()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.log_weights[j].exp()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|v| v.exp()).collect()
    }

    pub fn min_weight(&self) -> f64 {
        self.log_weights.iter().copied().fold(f64::INFINITY, f64::min).exp()
    }

    /// Reorders atoms so that atom `j` of the result is atom `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { log_weights: perm.iter().map(|&p| self.log_weights[p]).collect() }
    }

    /// `Σ λ_j log λ_j`, the penalty term of the estimators.
    pub fn neg_entropy(&self) -> f64 {
        -entropy(self)
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Shannon entropy `-Σ λ_j log λ_j`, with floored atoms contributing zero.
pub fn entropy(lambda: &SimplexWeights) -> f64 {
    let h: f64 = lambda
        .log_weights
        .iter()
        .filter(|&&lw| lw > LOG_WEIGHT_FLOOR)
        .map(|&lw| -lw.exp() * lw)
        .sum();
    h.clamp(0.0, (lambda.n_atoms() as f64).ln())
}

/// Kullback–Leibler divergence `K(λ|ν)`.
pub fn kl(lambda: &SimplexWeights, nu: &SimplexWeights) -> Result<f64> {
    check_dim(lambda.n_atoms(), nu.n_atoms())?;
    let k: f64 = lambda
        .log_weights
        .iter()
        .zip(&nu.log_weights)
        .filter(|(&a, _)| a > LOG_WEIGHT_FLOOR)
        .map(|(&a, &b)| a.exp() * (a - b))
        .sum();
    Ok(k.max(0.0))
}

/// `K(λ|ν) + K(ν|λ) = Σ (λ_j - ν_j)(log λ_j - log ν_j)`.
pub fn symmetric_kl(lambda: &SimplexWeights, nu: &SimplexWeights) -> Result<f64> {
    check_dim(lambda.n_atoms(), nu.n_atoms())?;
    // The difference form is symmetric term by term, so the result is
    // exactly symmetric in floating point.
    let k: f64 = lambda
        .log_weights
        .iter()
        .zip(&nu.log_weights)
        .map(|(&a, &b)| (a.exp() - b.exp()) * (a - b))
        .sum();
    Ok(k.max(0.0))
}

/// Mass that `λ` places outside `support`.
pub fn sparsity_mass(lambda: &SimplexWeights, support: &SupportSet) -> Result<f64> {
    check_dim(lambda.n_atoms(), support.n_atoms())?;
    let mut inside = support.indices.iter().peekable();
    let mut mass = 0.0;
    for (j, lw) in lambda.log_weights.iter().enumerate() {
        if inside.peek() == Some(&&j) {
            inside.next();
        } else {
            mass += lw.exp();
        }
    }
    Ok(mass.clamp(0.0, 1.0))
}

/// A sorted set of distinct atom indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
    n_atoms: usize,
}

impl SupportSet {
    pub fn new(indices: impl IntoIterator<Item = usize>, n_atoms: usize) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        if let Some(&bad) = indices.iter().find(|&&j| j >= n_atoms) {
            return Err(Error::InvalidArgument(format!(
                "index {bad} out of range for {n_atoms} atoms"
            )));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self { indices, n_atoms })
    }

    pub fn full(n_atoms: usize) -> Self {
        Self { indices: (0..n_atoms).collect(), n_atoms }
    }

    pub fn empty(n_atoms: usize) -> Self {
        Self { indices: Vec::new(), n_atoms }
    }

    /// Indices of the strictly positive entries of `weights`.
    pub fn support_of(weights: &[f64]) -> Self {
        Self {
            indices: (0..weights.len()).filter(|&j| weights[j] != 0.0).collect(),
            n_atoms: weights.len(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn complement(&self) -> Self {
        Self {
            indices: (0..self.n_atoms).filter(|&j| !self.contains(j)).collect(),
            n_atoms: self.n_atoms,
        }
    }
}
