use nalgebra::DMatrix;

use super::measure::MeasureRep;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::simplex::SimplexWeights;

const RANGE_SLACK: f64 = 1e-12;

/// Range constraint on dictionary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueRange {
    /// Prediction dictionaries: every `h_j` maps into `[-1, 1]`.
    Signed,
    /// Density dictionaries: values in `[0, bound]`.
    Nonnegative(f64),
}

/// Dictionary functions evaluated on the points of a measure:
/// entry `(i, j)` is `h_j(x_i)`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    measure: MeasureRep,
    range: ValueRange,
}

impl DesignMatrix {
    pub fn new(values: DMatrix<f64>, measure: MeasureRep) -> Result<Self> {
        Self::with_range(values, measure, ValueRange::Signed)
    }

    pub fn with_range(values: DMatrix<f64>, measure: MeasureRep, range: ValueRange) -> Result<Self> {
        check_dim(measure.len(), values.nrows())?;
        if values.ncols() == 0 {
            return Err(Error::InvalidArgument("dictionary needs at least one function".into()));
        }
        let (lo, hi) = match range {
            ValueRange::Signed => (-1.0, 1.0),
            ValueRange::Nonnegative(b) => (0.0, b),
        };
        if let Some(v) = values.iter().find(|v| !(**v >= lo - RANGE_SLACK && **v <= hi + RANGE_SLACK)) {
            return Err(Error::InvalidArgument(format!("dictionary value {v} outside [{lo}, {hi}]")));
        }
        Ok(Self { values, measure, range })
    }

    /// Evaluates `f(j, x)` for every atom `j < n_atoms` and point `x` of the measure.
    pub fn from_fn<F>(measure: MeasureRep, n_atoms: usize, range: ValueRange, f: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> f64,
    {
        let values = DMatrix::from_fn(measure.len(), n_atoms, |i, j| f(j, &measure.points()[i]));
        Self::with_range(values, measure, range)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn measure(&self) -> &MeasureRep {
        &self.measure
    }

    pub fn range(&self) -> ValueRange {
        self.range
    }

    pub fn n_atoms(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_points(&self) -> usize {
        self.values.nrows()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// `Σ_j c_j h_j` on the points, for any coefficient vector.
    pub fn combine(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_atoms(), coefficients.len())?;
        let c = linalg::to_dvector(coefficients);
        Ok((&self.values * c).iter().copied().collect())
    }

    /// Replaces the measure weights, keeping the points and values.
    pub fn reweighted(&self, measure: MeasureRep) -> Result<Self> {
        check_dim(self.n_points(), measure.len())?;
        Ok(Self { values: self.values.clone(), measure, range: self.range })
    }

    /// Keeps the columns listed in `columns`, in that order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.n_atoms()) {
            return Err(Error::InvalidArgument(format!("column {bad} out of range")));
        }
        let values = DMatrix::from_fn(self.n_points(), columns.len(), |i, j| self.values[(i, columns[j])]);
        Self::with_range(values, self.measure.clone(), self.range)
    }
}

/// Mixture `f_λ = Σ λ_j h_j` evaluated on the design points.
pub fn mixture_values(design: &DesignMatrix, lambda: &SimplexWeights) -> Result<Vec<f64>> {
    design.combine(&lambda.weights())
}

/// Gram matrix of a dictionary under a measure: `H_ij = Σ_k w_k h_i(x_k) h_j(x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    h: DMatrix<f64>,
}

impl GramMatrix {
    /// Validates symmetry (1e-12) and positive semidefiniteness (−1e-10).
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::InvalidArgument("Gram matrix must be square and nonempty".into()));
        }
        let asym = (&h - h.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::InvalidArgument(format!("Gram matrix not symmetric (deviation {asym:e})")));
        }
        let min = linalg::min_eigenvalue(&h);
        if min < -1e-10 {
            return Err(Error::InvalidArgument(format!("Gram matrix not PSD (eigenvalue {min:e})")));
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn n_atoms(&self) -> usize {
        self.h.nrows()
    }

    /// `uᵀ H v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(self.n_atoms(), u.len())?;
        check_dim(self.n_atoms(), v.len())?;
        let hv = &self.h * linalg::to_dvector(v);
        Ok(linalg::dot(u, hv.as_slice()))
    }

    /// `‖f_λ − f_ν‖ = √((λ−ν)ᵀ H (λ−ν))`, clamped at 0.
    pub fn l2_dist(&self, lambda: &SimplexWeights, nu: &SimplexWeights) -> Result<f64> {
        check_dim(lambda.n_atoms(), nu.n_atoms())?;
        let diff: Vec<f64> = lambda.weights().iter().zip(nu.weights()).map(|(a, b)| a - b).collect();
        Ok(self.inner(&diff, &diff)?.max(0.0).sqrt())
    }
}

pub fn gram(design: &DesignMatrix) -> GramMatrix {
    let w = design.measure().weights();
    let scaled = DMatrix::from_fn(design.n_points(), design.n_atoms(), |i, j| w[i] * design.values[(i, j)]);
    let mut h = design.values.transpose() * scaled;
    // Exact symmetry.
    let n = h.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = avg;
            h[(j, i)] = avg;
        }
    }
    GramMatrix { h }
}

/// `‖f_λ − f_ν‖_{L₂}` under the design's measure.
pub fn l2_dist(design: &DesignMatrix, lambda: &SimplexWeights, nu: &SimplexWeights) -> Result<f64> {
    check_dim(design.n_atoms(), lambda.n_atoms())?;
    gram(design).l2_dist(lambda, nu)
}
