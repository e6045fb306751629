//! Geometry of sparse recovery in the simplex: tangent cones, alignment
//! coefficients, restricted eigenvalues and canonical correlations.

mod alignment;

pub use alignment::{alignment_coefficient, Alignment, AlignmentMethod, ENUMERATION_CAP};

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dictionary::GramMatrix;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::simplex::{SimplexWeights, SupportSet};
use crate::solver::ErmProblem;

const SUM_TOL: f64 = 1e-12;

/// A point of the simplex that may lie on its boundary, with the indices
/// where it vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentConeSpec {
    weights: Vec<f64>,
    zero_set: Vec<usize>,
}

impl TangentConeSpec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("base point needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("base point weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL * weights.len() as f64 {
            return Err(Error::InvalidArgument(format!("base point weights sum to {total}, not 1")));
        }
        let zero_set = (0..weights.len()).filter(|&j| weights[j] == 0.0).collect();
        Ok(Self { weights, zero_set })
    }

    /// An interior point: its cone is the sum-zero hyperplane.
    pub fn interior(lambda: &SimplexWeights) -> Self {
        Self { weights: lambda.weights(), zero_set: Vec::new() }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn zero_set(&self) -> &[usize] {
        &self.zero_set
    }

    pub fn n_atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn support(&self) -> SupportSet {
        SupportSet::support_of(&self.weights)
    }
}

/// `Σ v = 0` and `v_j ≥ 0` on the zero set, both up to `tol`.
pub fn in_tangent_cone(spec: &TangentConeSpec, v: &[f64], tol: f64) -> Result<bool> {
    check_dim(spec.n_atoms(), v.len())?;
    let sum: f64 = v.iter().sum();
    Ok(sum.abs() <= tol && spec.zero_set.iter().all(|&j| v[j] >= -tol))
}

/// `s_j = log(e N² λ_j)` on the support of `λ`, 0 elsewhere.
pub fn score_vector(weights: &[f64]) -> Vec<f64> {
    let n = weights.len() as f64;
    weights.iter().map(|&l| if l > 0.0 { l.ln() + 1.0 + 2.0 * n.ln() } else { 0.0 }).collect()
}

/// `‖H^{-1/2} w‖`, or `+∞` when `w` is not in the range of `H`.
pub fn w_h_norm(h: &GramMatrix, w: &[f64]) -> Result<f64> {
    check_dim(h.n_atoms(), w.len())?;
    let (values, vectors) = linalg::sym_eigen(h.matrix());
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let wv = linalg::to_dvector(w);
    let mut rest = wv.clone();
    let mut total = 0.0;
    for (k, &mu) in values.iter().enumerate() {
        if mu > RANK_TOL * top && mu > 0.0 {
            let e = vectors.column(k);
            let c = e.dot(&wv);
            rest.axpy(-c, &e, 1.0);
            total += c * c / mu;
        }
    }
    if rest.norm() > alignment::null_tolerance(top, wv.norm()) {
        return Ok(f64::INFINITY);
    }
    Ok(total.sqrt())
}

/// `α_N(λ) = a_H(Λ, λ, s^N(λ))`.
pub fn alpha_n(h: &GramMatrix, spec: &TangentConeSpec) -> Result<Alignment> {
    alignment_coefficient(h, spec, &score_vector(spec.weights()))
}

/// Smallest eigenvalue of `H_J`, clamped at 0.
pub fn kappa(h: &GramMatrix, support: &SupportSet) -> Result<f64> {
    check_dim(h.n_atoms(), support.n_atoms())?;
    if support.is_empty() {
        return Err(Error::InvalidArgument("kappa needs a nonempty index set".into()));
    }
    let sub = linalg::submatrix(h.matrix(), support.indices(), support.indices());
    Ok(linalg::min_eigenvalue(&sub).max(0.0))
}

/// Largest canonical correlation between `span{h_j : j ∈ J}` and
/// `span{h_j : j ∉ J}`.
pub fn rho(h: &GramMatrix, support: &SupportSet) -> Result<f64> {
    check_dim(h.n_atoms(), support.n_atoms())?;
    let rest = support.complement();
    if support.is_empty() || rest.is_empty() {
        return Err(Error::InvalidArgument("rho needs J and its complement to be nonempty".into()));
    }
    let whiten = |idx: &[usize]| -> DMatrix<f64> {
        let block = linalg::submatrix(h.matrix(), idx, idx);
        let (vals, vecs) = linalg::retained_range(&block, 0.0);
        DMatrix::from_fn(idx.len(), vals.len(), |i, k| vecs[(i, k)] / vals[k].sqrt())
    };
    let wa = whiten(support.indices());
    let wc = whiten(rest.indices());
    if wa.ncols() == 0 || wc.ncols() == 0 {
        return Ok(0.0);
    }
    let cross = linalg::submatrix(h.matrix(), support.indices(), rest.indices());
    let m = wa.transpose() * cross * wc;
    let top = m.singular_values().max();
    Ok(top.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityBounds {
    /// `‖w‖₂ / √(κ(J)(1 − ρ²(J)))`.
    pub l2: f64,
    /// `‖w‖_∞ √d / √(κ(J)(1 − ρ²(J)))`.
    pub linf: f64,
    pub kappa: f64,
    pub rho: f64,
    pub d: usize,
}

/// Upper bounds on `‖w‖_H` through the geometry of `J = supp(w)`;
/// infinite when `κ(J) = 0` or `ρ(J) = 1`.
pub fn sparsity_alignment_bound(h: &GramMatrix, w: &[f64]) -> Result<SparsityBounds> {
    check_dim(h.n_atoms(), w.len())?;
    let support = SupportSet::support_of(w);
    let d = support.len();
    if d == 0 {
        return Ok(SparsityBounds { l2: 0.0, linf: 0.0, kappa: f64::NAN, rho: f64::NAN, d });
    }
    let k = kappa(h, &support)?;
    let r = if support.len() == h.n_atoms() { 0.0 } else { rho(h, &support)? };
    let denom = k * (1.0 - r * r);
    let l2n = linalg::norm(w);
    let linf = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (l2, li) = if denom > 0.0 {
        (l2n / denom.sqrt(), linf * (d as f64).sqrt() / denom.sqrt())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(SparsityBounds { l2, linf: li, kappa: k, rho: r, d })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GEpsReport {
    /// `‖P_𝓛(ℓ'∘f_λ)‖`.
    pub norm: f64,
    /// `‖P_𝓛(ℓ'∘f*)‖`, zero when `f*` minimizes the risk over the span.
    pub star_norm: f64,
    /// `‖f_λ − f*‖`.
    pub distance: f64,
    /// Lipschitz constant of `ℓ'` used in the bound: `sup ℓ''`.
    pub lipschitz: f64,
    /// `lipschitz · distance + star_norm`.
    pub bound: f64,
}

/// Projection of `(x, y) ↦ ℓ'(y, f_λ(x))` onto the span of the dictionary
/// columns in `L₂` of the problem's measure. On a population problem built
/// by label quadrature the measure is the joint law of `(X, Y)`; `f_star`
/// holds `f*` at each of its points.
pub fn g_eps_norm(problem: &ErmProblem, lambda: &SimplexWeights, f_star: &[f64]) -> Result<GEpsReport> {
    let design = problem.design();
    check_dim(design.n_points(), f_star.len())?;
    check_dim(design.n_atoms(), lambda.n_atoms())?;
    let w = design.measure().weights();
    let q = linalg::weighted_orthonormal_basis(design.values(), w);
    let f = design.combine(&lambda.weights())?;
    let loss = problem.loss();
    let y = problem.labels();
    let project = |r: Vec<f64>| -> f64 {
        let scaled: Vec<f64> = r.iter().zip(w).map(|(v, wi)| wi.sqrt() * v).collect();
        (q.transpose() * linalg::to_dvector(&scaled)).norm()
    };
    let norm = project((0..f.len()).map(|i| loss.d1(y[i], f[i])).collect());
    let star_norm = project((0..f.len()).map(|i| loss.d1(y[i], f_star[i])).collect());
    let distance = f.iter().zip(f_star).zip(w).map(|((a, b), wi)| wi * (a - b) * (a - b)).sum::<f64>().sqrt();
    let lipschitz = loss.curvature_bound();
    Ok(GEpsReport { norm, star_norm, distance, lipschitz, bound: lipschitz * distance + star_norm })
}

/// One row of geometry diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRecord {
    /// Indices of `J`, separated by `;`.
    pub support: String,
    pub d: usize,
    pub kappa: f64,
    pub rho: f64,
    pub w_h_norm: f64,
    pub bound_l2: f64,
    pub bound_linf: f64,
    pub alpha_n: f64,
    pub method: AlignmentMethod,
    pub exact: bool,
}

/// Diagnostics for the score vector of a (possibly boundary) point `λ`.
pub fn diagnose(h: &GramMatrix, spec: &TangentConeSpec) -> Result<GeometryRecord> {
    let s = score_vector(spec.weights());
    let bounds = sparsity_alignment_bound(h, &s)?;
    let alpha = alpha_n(h, spec)?;
    let support = SupportSet::support_of(&s);
    Ok(GeometryRecord {
        support: support.indices().iter().map(|j| j.to_string()).collect::<Vec<_>>().join(";"),
        d: bounds.d,
        kappa: bounds.kappa,
        rho: bounds.rho,
        w_h_norm: w_h_norm(h, &s)?,
        bound_l2: bounds.l2,
        bound_linf: bounds.linf,
        alpha_n: alpha.value,
        method: alpha.method,
        exact: alpha.exact,
    })
}

pub fn write_geometry_csv<W: Write>(out: W, records: &[GeometryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
