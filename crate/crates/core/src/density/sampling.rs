//! Inverse-CDF sampling from a density given on a one-dimensional grid.

use rand::Rng;

use crate::dictionary::MeasureRep;
use crate::error::{check_dim, Error, Result};

/// Draws `n` points from the piecewise-linear interpolant of `density` on the
/// sorted points of `grid`.
pub fn sample_from_grid<R: Rng + ?Sized>(density: &[f64], grid: &MeasureRep, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_dim(grid.len(), density.len())?;
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("sampling grid needs at least two points".into()));
    }
    if density.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidArgument("density values must be finite and nonnegative".into()));
    }
    let x: Vec<f64> = grid.points().iter().map(|p| p[0]).collect();
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sampling grid must be strictly increasing".into()));
    }
    let mut cdf = Vec::with_capacity(x.len());
    cdf.push(0.0);
    for k in 0..x.len() - 1 {
        let mass = 0.5 * (density[k] + density[k + 1]) * (x[k + 1] - x[k]);
        cdf.push(cdf[k] + mass);
    }
    let total = *cdf.last().unwrap();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("density has zero mass".into()));
    }
    let draws = (0..n)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= target).clamp(1, x.len() - 1) - 1;
            let (p0, p1, dx) = (density[k], density[k + 1], x[k + 1] - x[k]);
            let r = target - cdf[k];
            // Solve p0·t + (p1 − p0)·t²/(2dx) = r for t ∈ [0, dx].
            let a = (p1 - p0) / (2.0 * dx);
            let disc = (p0 * p0 + 4.0 * a * r).max(0.0);
            let denom = p0 + disc.sqrt();
            let t = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
            (x[k] + t.clamp(0.0, dx)).clamp(x[0], x[x.len() - 1])
        })
        .collect();
    Ok(draws)
}
