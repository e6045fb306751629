//! Small dense linear-algebra helpers shared by the dictionary and geometry code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative threshold (against the largest eigenvalue or singular value)
/// below which a direction is treated as numerically null.
pub const RANK_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Eigenvectors of `m` whose eigenvalues exceed `RANK_TOL · max(λ_max, floor)`,
/// returned as `(values, vectors)` with vectors as columns.
pub(crate) fn retained_range(m: &DMatrix<f64>, floor: f64) -> (Vec<f64>, DMatrix<f64>) {
    let (values, vectors) = sym_eigen(m);
    let top = values.last().copied().unwrap_or(0.0).max(floor);
    let cut = RANK_TOL * top;
    let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > cut).collect();
    let kept_values = keep.iter().map(|&k| values[k]).collect();
    let kept = DMatrix::from_fn(m.nrows(), keep.len(), |i, j| vectors[(i, keep[j])]);
    (kept_values, kept)
}

/// Orthonormal basis (columns) of the column space of `values` under the
/// inner product `⟨a, b⟩ = Σ_i w_i a_i b_i`, expressed in the scaled
/// coordinates `√w_i · a_i`.
///
/// Modified Gram–Schmidt with a second orthogonalization pass; a column is
/// dropped when its residual falls below `RANK_TOL` times the largest input
/// column norm. Inputs that are already orthogonal come back normalized.
pub(crate) fn weighted_orthonormal_basis(values: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let (n, d) = values.shape();
    let scaled = DMatrix::from_fn(n, d, |i, j| weights[i].sqrt() * values[(i, j)]);
    let top = (0..d).map(|j| scaled.column(j).norm()).fold(0.0, f64::max);
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = scaled.column(j).into_owned();
        for _ in 0..2 {
            for q in &kept {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let nv = v.norm();
        if top > 0.0 && nv > RANK_TOL * top {
            kept.push(v / nv);
        }
    }
    DMatrix::from_fn(n, kept.len(), |i, j| kept[j][i])
}

/// Orthonormal basis of `{v : Σ v = 0, v_j = 0 for j ∉ free}` in `ℝ^n`.
pub(crate) fn sum_zero_basis(free: &[usize], n: usize) -> DMatrix<f64> {
    let m = free.len();
    let cols = m.saturating_sub(1);
    let mut q = DMatrix::zeros(n, cols);
    for k in 1..m {
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for &f in &free[..k] {
            q[(f, k - 1)] = scale;
        }
        q[(free[k], k - 1)] = -(k as f64) * scale;
    }
    q
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Principal submatrix `m[rows, cols]`.
pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_zero_basis_is_orthonormal() {
        let q = sum_zero_basis(&[0, 2, 3, 5], 6);
        assert_eq!(q.shape(), (6, 3));
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-14);
        for j in 0..3 {
            assert!(q.column(j).sum().abs() < 1e-14);
            assert_eq!(q[(1, j)], 0.0);
            assert_eq!(q[(4, j)], 0.0);
        }
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let (v, _) = sym_eigen(&m);
        assert_eq!(v, vec![1.0, 4.0]);
    }

    #[test]
    fn weighted_basis_drops_null_directions() {
        let v = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 1.0]);
        let q = weighted_orthonormal_basis(&v, &[0.2, 0.3, 0.5]);
        assert_eq!(q.ncols(), 2);
    }
}
