//! `a_H(Λ, λ, w) = sup{⟨w, u⟩ : u ∈ T_Λ(λ), uᵀHu = 1}`.
//!
//! The tangent cone at `λ` is `C = {u : Σu = 0, u_j ≥ 0 for λ_j = 0}`.
//! Routes, in order of preference:
//! - no zeros: closed form on the sum-zero hyperplane;
//! - few zeros: enumeration of the faces of `C`, each a subspace with a
//!   closed-form maximizer that is kept only when it lies in `C`;
//! - many zeros and nonsingular `H`: the dual problem
//!   `min_{t ∈ ℝ, z ≥ 0} ‖H^{-1/2}(w − t·1 + z_Z)‖`, solved by
//!   nonnegative least squares;
//! - otherwise: projected ascent with random restarts, flagged heuristic.
//!
//! The value reported is `max(a_H, 0)`, i.e. the supremum over the cone
//! intersected with the ball `uᵀHu ≤ 1`; it can only differ from `a_H` when
//! every unit direction of the cone has a negative inner product with `w`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TangentConeSpec;
use crate::dictionary::GramMatrix;
use crate::error::{check_dim, Result};
use crate::linalg::{self, RANK_TOL};

/// Faces are enumerated exactly up to this many zero constraints.
pub const ENUMERATION_CAP: usize = 20;
/// Above this many zeros, a nonsingular `H` switches to the dual route.
const DUAL_THRESHOLD: usize = 12;
const RESTARTS: usize = 50;
const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentMethod {
    ClosedForm,
    Enumeration,
    Dual,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub value: f64,
    pub method: AlignmentMethod,
    /// False for the heuristic route and for enumerations that met an
    /// unbounded face direction outside the cone.
    pub exact: bool,
}

/// Maximum of `⟨w, u⟩` over `u ∈ span(B)` with `uᵀHu ≤ 1`.
pub(crate) enum FaceMax {
    Finite { value: f64, direction: DVector<f64> },
    /// `w` has a component along `H`-null directions of the subspace.
    Unbounded { direction: DVector<f64> },
}

/// Closed form `√(w_Bᵀ (BᵀHB)⁺ w_B)` for an orthonormal basis `B`.
pub(crate) fn face_max(h: &DMatrix<f64>, basis: &DMatrix<f64>, w: &DVector<f64>) -> FaceMax {
    let k = basis.ncols();
    if k == 0 {
        return FaceMax::Finite { value: 0.0, direction: DVector::zeros(h.nrows()) };
    }
    let hf = basis.transpose() * h * basis;
    let wf = basis.transpose() * w;
    let (values, vectors) = linalg::sym_eigen(&hf);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = RANK_TOL * top;
    let mut coeff = DVector::zeros(k);
    let mut null = wf.clone();
    let mut value2 = 0.0;
    for (m, &mu) in values.iter().enumerate() {
        if mu > cut && mu > 0.0 {
            let e = vectors.column(m);
            let c = e.dot(&wf);
            null.axpy(-c, &e, 1.0);
            coeff.axpy(c / mu, &e, 1.0);
            value2 += c * c / mu;
        }
    }
    if null.norm() > null_tolerance(top, wf.norm()) {
        return FaceMax::Unbounded { direction: basis * null };
    }
    let value = value2.max(0.0).sqrt();
    let direction = if value > 0.0 { basis * coeff / value } else { DVector::zeros(h.nrows()) };
    FaceMax::Finite { value, direction }
}

/// Size of the out-of-range component of `w` above which `w ∉ Im(H^{1/2})`.
pub(crate) fn null_tolerance(top_eigenvalue: f64, w_norm: f64) -> f64 {
    RANK_TOL * top_eigenvalue.max(1.0) * w_norm
}

pub fn alignment_coefficient(h: &GramMatrix, spec: &TangentConeSpec, w: &[f64]) -> Result<Alignment> {
    let n = h.n_atoms();
    check_dim(n, spec.n_atoms())?;
    check_dim(n, w.len())?;
    let zeros = spec.zero_set();
    let hm = h.matrix();
    let wv = linalg::to_dvector(w);
    if zeros.is_empty() {
        let basis = linalg::sum_zero_basis(&(0..n).collect::<Vec<_>>(), n);
        let value = match face_max(hm, &basis, &wv) {
            FaceMax::Finite { value, .. } => value,
            FaceMax::Unbounded { .. } => f64::INFINITY,
        };
        return Ok(Alignment { value, method: AlignmentMethod::ClosedForm, exact: true });
    }
    let (values, _) = linalg::sym_eigen(hm);
    let nonsingular = values[0] > RANK_TOL * values[n - 1].max(0.0) && values[0] > 0.0;
    if zeros.len() <= DUAL_THRESHOLD || (!nonsingular && zeros.len() <= ENUMERATION_CAP) {
        return Ok(enumerate_faces(hm, zeros, &wv));
    }
    if nonsingular {
        return Ok(Alignment { value: dual_value(hm, zeros, &wv), method: AlignmentMethod::Dual, exact: true });
    }
    Ok(Alignment { value: projected_ascent(hm, zeros, &wv), method: AlignmentMethod::Heuristic, exact: false })
}

pub(crate) fn enumerate_faces(h: &DMatrix<f64>, zeros: &[usize], w: &DVector<f64>) -> Alignment {
    let n = h.nrows();
    let mut best: f64 = 0.0;
    let mut exact = true;
    for mask in 0u64..(1u64 << zeros.len()) {
        let active: Vec<usize> = (0..zeros.len()).filter(|b| mask >> b & 1 == 1).map(|b| zeros[b]).collect();
        let inactive: Vec<usize> = zeros.iter().copied().filter(|j| !active.contains(j)).collect();
        let free: Vec<usize> = (0..n).filter(|j| !active.contains(j)).collect();
        if free.len() < 2 {
            continue;
        }
        let basis = linalg::sum_zero_basis(&free, n);
        let feasible = |u: &DVector<f64>| {
            let scale = u.amax();
            inactive.iter().all(|&j| u[j] >= -FEAS_TOL * scale)
        };
        match face_max(h, &basis, w) {
            FaceMax::Finite { value, direction } => {
                if value > best && feasible(&direction) {
                    best = value;
                }
            }
            FaceMax::Unbounded { direction } => {
                if feasible(&direction) {
                    return Alignment { value: f64::INFINITY, method: AlignmentMethod::Enumeration, exact: true };
                }
                exact = false;
            }
        }
    }
    Alignment { value: best, method: AlignmentMethod::Enumeration, exact }
}

/// `min_{t, z ≥ 0} ‖H^{-1/2}(w − t·1 + Σ_{j∈Z} z_j e_j)‖` for nonsingular `H`.
pub(crate) fn dual_value(h: &DMatrix<f64>, zeros: &[usize], w: &DVector<f64>) -> f64 {
    let n = h.nrows();
    let (values, vectors) = linalg::sym_eigen(h);
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(n, values.iter().map(|v| 1.0 / v.sqrt())));
    let m = &vectors * inv_sqrt * vectors.transpose();
    let b = &m * w;
    let ones = &m * DVector::from_element(n, 1.0);
    let q = &ones / ones.norm();
    let project = |v: &DVector<f64>| v - &q * q.dot(v);
    let target = project(&b);
    let mut a = DMatrix::zeros(n, zeros.len());
    for (k, &j) in zeros.iter().enumerate() {
        let col = project(&m.column(j).into_owned());
        a.set_column(k, &(-col));
    }
    let z = nnls(&a, &target);
    (target - a * z).norm()
}

/// Lawson–Hanson nonnegative least squares: `min ‖Ax − b‖` over `x ≥ 0`.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = (a.transpose() * b).amax().max(1e-300);
    let tol = 1e-13 * scale * (n.max(1) as f64);
    for _ in 0..(3 * n + 10) {
        let grad = a.transpose() * (b - a * &x);
        let pick = (0..n).filter(|&j| !passive[j]).max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        match pick {
            Some(j) if grad[j] > tol => passive[j] = true,
            _ => break,
        }
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let ap = DMatrix::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])]);
            let sp = ap.svd(true, true).solve(b, 1e-14).unwrap_or_else(|_| DVector::zeros(idx.len()));
            if sp.iter().all(|v| *v > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = sp[k];
                }
                break;
            }
            let mut alpha: f64 = 1.0;
            for (k, &j) in idx.iter().enumerate() {
                if sp[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - sp[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (sp[k] - x[j]);
                if x[j] <= 1e-15 * scale {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

/// Euclidean projection onto `{u : Σu = 0, u_Z ≥ 0}`.
pub(crate) fn project_cone(v: &DVector<f64>, zero_mask: &[bool]) -> DVector<f64> {
    let phi = |t: f64| -> f64 {
        v.iter()
            .zip(zero_mask)
            .map(|(&x, &z)| if z { (x - t).max(0.0) } else { x - t })
            .sum()
    };
    let mut lo = v.min() - 1.0;
    let mut hi = v.max() + 1.0;
    while phi(lo) < 0.0 {
        lo -= 2.0 * (hi - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    DVector::from_iterator(v.len(), v.iter().zip(zero_mask).map(|(&x, &z)| if z { (x - t).max(0.0) } else { x - t }))
}

/// Projected ascent on `⟨w, u⟩ / √(uᵀHu)` over the cone, best of several
/// seeded restarts.
pub(crate) fn projected_ascent(h: &DMatrix<f64>, zeros: &[usize], w: &DVector<f64>) -> f64 {
    let n = h.nrows();
    let mut mask = vec![false; n];
    for &j in zeros {
        mask[j] = true;
    }
    let ratio = |u: &DVector<f64>| {
        let q = u.dot(&(h * u));
        if q <= 0.0 {
            if w.dot(u) > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY }
        } else {
            w.dot(u) / q.sqrt()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best: f64 = 0.0;
    for _ in 0..RESTARTS {
        let start = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut u = project_cone(&start, &mask);
        if u.norm() == 0.0 {
            continue;
        }
        u /= u.norm();
        let mut r = ratio(&u);
        let mut step = 1.0;
        for _ in 0..500 {
            let hu = h * &u;
            let q = u.dot(&hu).max(1e-300);
            let s = q.sqrt();
            let g = w / s - hu * (w.dot(&u) / (s * q));
            let mut cand = project_cone(&(&u + &g * step), &mask);
            let nc = cand.norm();
            if nc == 0.0 {
                step *= 0.5;
                continue;
            }
            cand /= nc;
            let rc = ratio(&cand);
            if rc > r {
                u = cand;
                r = rc;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best = best.max(r);
    }
    best
}
