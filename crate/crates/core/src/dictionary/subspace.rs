//! Projections onto finite-dimensional subspaces `L ⊂ L₂(Π)` and the constant `U(L)`.

use nalgebra::DMatrix;

use super::design::DesignMatrix;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::simplex::SupportSet;

/// How a subspace `L` is specified.
#[derive(Debug, Clone)]
pub enum SubspaceBasis {
    /// The span of the listed dictionary columns.
    Columns(Vec<usize>),
    /// Explicit spanning functions evaluated on the design points (`n_points × d`).
    Explicit(DMatrix<f64>),
}

impl SubspaceBasis {
    fn values(&self, design: &DesignMatrix) -> Result<DMatrix<f64>> {
        match self {
            SubspaceBasis::Columns(cols) => {
                if let Some(&bad) = cols.iter().find(|&&j| j >= design.n_atoms()) {
                    return Err(Error::InvalidArgument(format!("column {bad} out of range")));
                }
                Ok(DMatrix::from_fn(design.n_points(), cols.len(), |i, j| design.values()[(i, cols[j])]))
            }
            SubspaceBasis::Explicit(m) => {
                check_dim(design.n_points(), m.nrows())?;
                Ok(m.clone())
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SubspaceBasis::Columns(c) => c.len(),
            SubspaceBasis::Explicit(m) => m.ncols(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Residual norms `‖P_{L⊥} h_j‖` for `j ∈ J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// One entry per index of `J`, in order.
    pub norms: Vec<f64>,
    /// Maximum over `J` (0 when `J` is empty).
    pub max: f64,
    /// Numerical rank of the supplied basis.
    pub rank: usize,
    /// Number of spanning vectors supplied.
    pub n_vectors: usize,
}

impl ResidualReport {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.n_vectors
    }
}

/// Projects each `h_j`, `j ∈ J`, onto `L` in `L₂` of the design's measure and
/// reports the residual norms. Rank-deficient bases are not an error here:
/// the projection uses the retained range and the report carries the rank.
pub fn residual_norms(design: &DesignMatrix, basis: &SubspaceBasis, support: &SupportSet) -> Result<ResidualReport> {
    check_dim(design.n_atoms(), support.n_atoms())?;
    let w = design.measure().weights();
    let q = linalg::weighted_orthonormal_basis(&basis.values(design)?, w);
    let norms: Vec<f64> = support
        .indices()
        .iter()
        .map(|&j| {
            let hw: Vec<f64> = (0..design.n_points()).map(|i| w[i].sqrt() * design.values()[(i, j)]).collect();
            let coeff = q.transpose() * linalg::to_dvector(&hw);
            let proj = &q * coeff;
            let r2: f64 = hw.iter().zip(proj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            r2.sqrt()
        })
        .collect();
    let max = norms.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport { norms, max, rank: q.ncols(), n_vectors: basis.len() })
}

/// Two evaluations of `U(L) = sup_{f ∈ L, ‖f‖=1} ‖f‖_∞ + 1` on the design points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UOfL {
    /// `max_j ‖φ_j‖_∞ √d + 1` for the computed orthonormal basis `φ`.
    pub basis_bound: f64,
    /// `max_i ‖φ(x_i)‖₂ + 1`, the exact supremum over the point set.
    pub point_sup: f64,
    pub dim: usize,
}

/// Orthonormalizes `L` under the measure and evaluates `U(L)` both ways.
/// Points with zero weight are ignored.
pub fn u_of_l(design: &DesignMatrix, basis: &SubspaceBasis) -> Result<UOfL> {
    let w = design.measure().weights();
    let q = linalg::weighted_orthonormal_basis(&basis.values(design)?, w);
    let d = q.ncols();
    if d < basis.len() {
        return Err(Error::RankDeficient { rank: d, dim: basis.len() });
    }
    let mut max_entry: f64 = 0.0;
    let mut max_row: f64 = 0.0;
    for i in (0..design.n_points()).filter(|&i| w[i] > 0.0) {
        let s = w[i].sqrt();
        let mut row2 = 0.0;
        for j in 0..d {
            let phi = q[(i, j)] / s;
            max_entry = max_entry.max(phi.abs());
            row2 += phi * phi;
        }
        max_row = max_row.max(row2.sqrt());
    }
    Ok(UOfL { basis_bound: max_entry * (d as f64).sqrt() + 1.0, point_sup: max_row + 1.0, dim: d })
}
