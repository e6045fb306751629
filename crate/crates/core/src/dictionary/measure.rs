use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Uniform weights on observed design points.
    Empirical,
    /// A known design distribution or base measure given by quadrature.
    KnownGrid,
}

/// A finitely supported probability measure on design points.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRep {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    kind: MeasureKind,
}

impl MeasureRep {
    pub fn empirical(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("measure needs at least one point".into()));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(Self { points, weights, kind: MeasureKind::Empirical })
    }

    pub fn known_grid(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::weighted(points, weights, MeasureKind::KnownGrid)
    }

    /// Builds a measure of the given kind, normalizing the weights to sum 1.
    pub fn weighted(points: Vec<Vec<f64>>, mut weights: Vec<f64>, kind: MeasureKind) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("measure needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("measure weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("measure weights sum to zero".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { points, weights, kind })
    }

    /// `m` equispaced points `k/m` on `[0, 1)` with equal weights. Exact for
    /// trigonometric polynomials of degree below `m`.
    pub fn uniform_grid(m: usize) -> Result<Self> {
        let points = (0..m).map(|k| vec![k as f64 / m as f64]).collect();
        Self::known_grid(points, vec![1.0; m])
    }

    /// `m` points on `[0, 1]` (endpoints included) with trapezoid weights.
    pub fn trapezoid_grid(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument("trapezoid grid needs at least two points".into()));
        }
        let points = (0..m).map(|k| vec![k as f64 / (m - 1) as f64]).collect();
        let mut weights = vec![1.0; m];
        weights[0] = 0.5;
        weights[m - 1] = 0.5;
        Self::known_grid(points, weights)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinate dimension of the points.
    pub fn point_dim(&self) -> usize {
        self.points[0].len()
    }

    /// Integral of grid values against the measure.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}
