//! Scenario files for synthetic sweeps.

use serde::{Deserialize, Serialize};

use crate::density::DensityFamily;
use crate::dictionary::PredictionFamily;
use crate::error::{Error, Result};
use crate::simplex::{SimplexWeights, SupportSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Quadratic loss, `y = f*(x) + noise` with bounded noise.
    Regression,
    /// Logit loss, `P(Y = 1 | x) = σ(f*(x))`.
    Classification,
    /// Quadratic density loss with samples from `f*`.
    Density,
}

/// Dictionary family; trigonometric variants serve regression and
/// classification, bump and beta densities serve density estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DictionaryFamily {
    Trig,
    Correlated { mix: f64 },
    Redundant { positions: Vec<usize>, frequency: usize },
    Bumps { width: f64 },
    Beta,
}

impl DictionaryFamily {
    pub fn prediction(&self) -> Option<PredictionFamily> {
        match self {
            DictionaryFamily::Trig => Some(PredictionFamily::Trig),
            DictionaryFamily::Correlated { mix } => Some(PredictionFamily::Correlated { mix: *mix }),
            DictionaryFamily::Redundant { positions, frequency } => {
                Some(PredictionFamily::Redundant { positions: positions.clone(), frequency: *frequency })
            }
            _ => None,
        }
    }

    pub fn density(&self) -> Option<DensityFamily> {
        match self {
            DictionaryFamily::Bumps { width } => Some(DensityFamily::Bumps { width: *width }),
            DictionaryFamily::Beta => Some(DensityFamily::Beta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryConfig {
    pub n_atoms: usize,
    #[serde(flatten)]
    pub family: DictionaryFamily,
}

/// The target `λ*`: uniform on `support` unless `weights` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    pub support: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Additive regression noise, uniform on `[−half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub half_width: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { half_width: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EpsilonRule {
    Fixed { value: f64 },
    /// `ε = D √((d + A log N)/n)` with `d = card(J*)`.
    Rate {
        #[serde(rename = "d")]
        d_const: f64,
        #[serde(default = "one")]
        a: f64,
    },
    /// Every value, for each `(n, replication)` cell.
    Grid { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

fn default_population_grid() -> usize {
    4096
}

fn default_density_grid() -> usize {
    crate::density::DEFAULT_GRID
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub task: Task,
    pub seed: u64,
    pub replications: usize,
    pub n: Vec<usize>,
    pub dictionary: DictionaryConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub epsilon: EpsilonRule,
    /// Points of the known grid standing in for `Π`.
    #[serde(default = "default_population_grid")]
    pub population_grid: usize,
    /// Quadrature points for density dictionaries.
    #[serde(default = "default_density_grid")]
    pub density_grid: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Record wall-clock time per row; off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let n_atoms = self.dictionary.n_atoms;
        if n_atoms < 2 {
            return bad(format!("dictionary needs N >= 2, got {n_atoms}"));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 10) {
            return bad("every sample size must be at least 10".into());
        }
        let density_task = self.task == Task::Density;
        if density_task != self.dictionary.family.density().is_some() {
            return bad("density tasks need a density dictionary and vice versa".into());
        }
        self.target_weights()?;
        if !(self.noise.half_width >= 0.0 && self.noise.half_width.is_finite()) {
            return bad("noise half_width must be nonnegative".into());
        }
        match &self.epsilon {
            EpsilonRule::Fixed { value } if !(*value > 0.0 && value.is_finite()) => {
                return bad(format!("epsilon must be positive, got {value}"));
            }
            EpsilonRule::Rate { d_const, a } if !(*d_const > 0.0 && *a >= 1.0) => {
                return bad("rate rule needs D > 0 and A >= 1".into());
            }
            EpsilonRule::Grid { values } if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) => {
                return bad("epsilon grid needs positive values".into());
            }
            _ => {}
        }
        if self.population_grid < 2 || self.density_grid < 2 {
            return bad("quadrature grids need at least two points".into());
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tol must be positive".into());
        }
        Ok(())
    }

    /// `λ*` as simplex weights.
    pub fn target_weights(&self) -> Result<SimplexWeights> {
        SimplexWeights::from_weights(&self.target_vector()?)
    }

    /// `λ*` with exact zeros off its support; rejects supports that are out of range.
    pub fn target_vector(&self) -> Result<Vec<f64>> {
        let n = self.dictionary.n_atoms;
        let support = SupportSet::new(self.target.support.iter().copied(), n)?;
        if support.is_empty() {
            return Err(Error::InvalidArgument("target support is empty".into()));
        }
        let mut w = vec![0.0; n];
        match &self.target.weights {
            None => {
                for &j in support.indices() {
                    w[j] = 1.0 / support.len() as f64;
                }
            }
            Some(given) => {
                if given.len() != self.target.support.len() {
                    return Err(Error::InvalidArgument("target weights and support differ in length".into()));
                }
                let total: f64 = given.iter().sum();
                if given.iter().any(|v| v.is_nan() || *v <= 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument("target weights must be positive and sum to 1".into()));
                }
                for (&j, &v) in self.target.support.iter().zip(given) {
                    w[j] = v;
                }
            }
        }
        Ok(w)
    }

    pub fn support(&self) -> SupportSet {
        SupportSet::new(self.target.support.iter().copied(), self.dictionary.n_atoms).expect("validated support")
    }

    /// `A` of the rate rule, 1 otherwise.
    pub fn confidence(&self) -> f64 {
        match self.epsilon {
            EpsilonRule::Rate { a, .. } => a,
            _ => 1.0,
        }
    }

    /// The regularization levels used at sample size `n`.
    pub fn epsilons(&self, n: usize) -> Vec<f64> {
        match &self.epsilon {
            EpsilonRule::Fixed { value } => vec![*value],
            EpsilonRule::Rate { d_const, a } => {
                vec![d_const * rate(self.support().len(), *a, self.dictionary.n_atoms, n).sqrt()]
            }
            EpsilonRule::Grid { values } => values.clone(),
        }
    }
}

/// `(d + A log N)/n`.
pub fn rate(d: usize, a: f64, n_atoms: usize, n: usize) -> f64 {
    (d as f64 + a * (n_atoms as f64).ln()) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
id = "demo"
task = "regression"
seed = 7
replications = 3
n = [100, 400]

[dictionary]
family = "trig"
n_atoms = 20

[target]
support = [1, 2, 5]

[epsilon]
rule = "rate"
d = 1.0
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let c = ScenarioConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(c.population_grid, 4096);
        assert_eq!(c.noise.half_width, 0.3);
        assert_eq!(c.tol, 1e-8);
        assert_eq!(c.confidence(), 1.0);
        let lam = c.target_weights().unwrap();
        assert!((lam.weight(5) - 1.0 / 3.0).abs() < 1e-15);
        let eps = c.epsilons(100)[0];
        assert!((eps - ((3.0 + 20f64.ln()) / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ScenarioConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_invalid_fields() {
        for (from, to) in [
            ("replications = 3", "replications = 0"),
            ("n = [100, 400]", "n = [5, 400]"),
            ("n_atoms = 20", "n_atoms = 1"),
            ("support = [1, 2, 5]", "support = [1, 2, 25]"),
            ("family = \"trig\"", "family = \"beta\""),
            ("d = 1.0", "d = -1.0"),
        ] {
            let text = EXAMPLE.replace(from, to);
            assert!(ScenarioConfig::from_toml(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn explicit_target_weights_must_sum_to_one() {
        let text = EXAMPLE.replace("support = [1, 2, 5]", "support = [1, 2]\nweights = [0.7, 0.2]");
        assert!(ScenarioConfig::from_toml(&text).is_err());
        let text = EXAMPLE.replace("support = [1, 2, 5]", "support = [1, 2]\nweights = [0.7, 0.3]");
        assert!((ScenarioConfig::from_toml(&text).unwrap().target_weights().unwrap().weight(1) - 0.7).abs() < 1e-15);
    }
}
