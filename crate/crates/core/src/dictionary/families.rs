//! Prediction dictionaries on `[0, 1]` used by the experiment harness.

use serde::{Deserialize, Serialize};

use super::design::{DesignMatrix, ValueRange};
use super::measure::MeasureRep;
use crate::error::{Error, Result};

/// Atom `k` of the trigonometric system scaled into `[-1, 1]`:
/// `1, cos 2πx, sin 2πx, cos 4πx, sin 4πx, …`.
pub fn trig_atom(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let freq = k.div_ceil(2) as f64;
    let arg = std::f64::consts::TAU * freq * x;
    if k % 2 == 1 {
        arg.cos()
    } else {
        arg.sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PredictionFamily {
    /// The first `N` trigonometric atoms.
    Trig,
    /// `(1 − mix)·t_j + mix·t_{j+1 mod N}` over trigonometric atoms `t`.
    Correlated { mix: f64 },
    /// Atoms at `positions` are phase shifts `cos(2π f x − iπ/d)` of one
    /// frequency `f`, so they span a two-dimensional space; the remaining
    /// atoms are trigonometric atoms of other frequencies.
    Redundant { positions: Vec<usize>, frequency: usize },
}

/// A concrete dictionary of `n_atoms` functions on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDictionary {
    family: PredictionFamily,
    n_atoms: usize,
    /// Trigonometric index used by each non-redundant position.
    trig_index: Vec<usize>,
}

impl PredictionDictionary {
    pub fn new(family: PredictionFamily, n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidArgument("dictionary needs at least one atom".into()));
        }
        let trig_index = match &family {
            PredictionFamily::Trig => (0..n_atoms).collect(),
            PredictionFamily::Correlated { mix } => {
                if !(0.0..=1.0).contains(mix) {
                    return Err(Error::InvalidArgument(format!("mix must lie in [0, 1], got {mix}")));
                }
                (0..n_atoms).collect()
            }
            PredictionFamily::Redundant { positions, frequency } => {
                if positions.iter().any(|&p| p >= n_atoms) {
                    return Err(Error::InvalidArgument("redundant position out of range".into()));
                }
                if *frequency == 0 {
                    return Err(Error::InvalidArgument("redundant frequency must be positive".into()));
                }
                let skip = [2 * frequency - 1, 2 * frequency];
                let mut others = (0..).filter(|k| !skip.contains(k));
                (0..n_atoms)
                    .map(|j| if positions.contains(&j) { usize::MAX } else { others.next().unwrap() })
                    .collect()
            }
        };
        Ok(Self { family, n_atoms, trig_index })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn family(&self) -> &PredictionFamily {
        &self.family
    }

    pub fn eval(&self, j: usize, x: f64) -> f64 {
        match &self.family {
            PredictionFamily::Trig => trig_atom(j, x),
            PredictionFamily::Correlated { mix } => {
                (1.0 - mix) * trig_atom(j, x) + mix * trig_atom((j + 1) % self.n_atoms, x)
            }
            PredictionFamily::Redundant { positions, frequency } => match positions.iter().position(|&p| p == j) {
                Some(i) => {
                    let phase = std::f64::consts::PI * i as f64 / positions.len() as f64;
                    (std::f64::consts::TAU * *frequency as f64 * x - phase).cos()
                }
                None => trig_atom(self.trig_index[j], x),
            },
        }
    }

    /// Values of the dictionary on the points of `measure` (first coordinate).
    pub fn design(&self, measure: MeasureRep) -> Result<DesignMatrix> {
        DesignMatrix::from_fn(measure, self.n_atoms, ValueRange::Signed, |j, x| self.eval(j, x[0]).clamp(-1.0, 1.0))
    }
}
