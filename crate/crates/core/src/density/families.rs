//! Density dictionaries on `[0, 1]`, normalized by quadrature.

use serde::{Deserialize, Serialize};

use crate::dictionary::{gram, DesignMatrix, GramMatrix, MeasureRep, ValueRange};
use crate::error::{check_dim, Error, Result};
use crate::simplex::SimplexWeights;

/// Default number of quadrature points for the base measure.
pub const DEFAULT_GRID: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityFamily {
    /// Gaussian bumps `exp(−(x − c_j)²/(2 w²))` with centres `c_j = (j + ½)/N`,
    /// truncated to `[0, 1]` and renormalized.
    Bumps { width: f64 },
    /// Beta(`j + 1`, `N − j`) densities, the Bernstein basis of degree `N − 1`.
    Beta,
}

/// `N` probability densities on `[0, 1]` together with the quadrature grid
/// for the base measure `μ` (Lebesgue measure on `[0, 1]`).
#[derive(Debug, Clone)]
pub struct DensityDictionary {
    family: DensityFamily,
    /// Quadrature mass of each raw (unnormalized) atom.
    norms: Vec<f64>,
    design: DesignMatrix,
    bound: f64,
}

impl DensityDictionary {
    pub fn new(family: DensityFamily, n_atoms: usize, grid_size: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidArgument("dictionary needs at least one atom".into()));
        }
        if let DensityFamily::Bumps { width } = family {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::InvalidArgument(format!("bump width must be positive, got {width}")));
            }
        }
        let quadrature = MeasureRep::trapezoid_grid(grid_size)?;
        let raw = |j: usize, x: f64| raw_atom(&family, n_atoms, j, x);
        let norms: Vec<f64> = (0..n_atoms)
            .map(|j| quadrature.points().iter().zip(quadrature.weights()).map(|(p, w)| w * raw(j, p[0])).sum())
            .collect();
        let values =
            nalgebra::DMatrix::from_fn(grid_size, n_atoms, |i, j| raw(j, quadrature.points()[i][0]) / norms[j]);
        let bound = values.max();
        let design = DesignMatrix::with_range(values, quadrature, ValueRange::Nonnegative(bound))?;
        Ok(Self { family, norms, design, bound })
    }

    pub fn family(&self) -> &DensityFamily {
        &self.family
    }

    pub fn n_atoms(&self) -> usize {
        self.design.n_atoms()
    }

    /// Largest value of any atom on the grid.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Atom values on the quadrature grid.
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn quadrature(&self) -> &MeasureRep {
        self.design.measure()
    }

    /// `G_ij = ⟨h_i, h_j⟩_{L₂(μ)}` by quadrature.
    pub fn gram(&self) -> GramMatrix {
        gram(&self.design)
    }

    /// Atom `j` at an arbitrary point of `[0, 1]`.
    pub fn eval(&self, j: usize, x: f64) -> f64 {
        raw_atom(&self.family, self.n_atoms(), j, x) / self.norms[j]
    }

    /// `f_λ` on the quadrature grid.
    pub fn mixture(&self, lambda: &SimplexWeights) -> Result<Vec<f64>> {
        check_dim(self.n_atoms(), lambda.n_atoms())?;
        self.design.combine(&lambda.weights())
    }

    /// `h̄_j = n⁻¹ Σ_i h_j(X_i)`.
    pub fn empirical_means(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("no samples".into()));
        }
        let n = samples.len() as f64;
        Ok((0..self.n_atoms()).map(|j| samples.iter().map(|&x| self.eval(j, x)).sum::<f64>() / n).collect())
    }
}

fn raw_atom(family: &DensityFamily, n_atoms: usize, j: usize, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    match family {
        DensityFamily::Bumps { width } => {
            let c = (j as f64 + 0.5) / n_atoms as f64;
            (-(x - c).powi(2) / (2.0 * width * width)).exp()
        }
        DensityFamily::Beta => {
            let (a, b) = (j as i32, (n_atoms - 1 - j) as i32);
            x.powi(a) * (1.0 - x).powi(b)
        }
    }
}
