//! Convex, twice differentiable losses `ℓ(y, u)` and their curvature floor `τ(R)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};

/// Number of equispaced labels used to represent a bounded regression domain.
pub const REGRESSION_LABEL_GRID: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Quadratic,
    Logit,
    Exponential,
    Custom,
}

/// The label space `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelDomain {
    Interval { lo: f64, hi: f64 },
    Binary,
}

impl LabelDomain {
    /// Finite stand-in for `T` used in infimum computations.
    pub fn grid(&self) -> Vec<f64> {
        match *self {
            LabelDomain::Binary => vec![-1.0, 1.0],
            LabelDomain::Interval { lo, hi } => {
                let m = REGRESSION_LABEL_GRID;
                (0..m).map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64).collect()
            }
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
struct CustomFns {
    eval: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
}

/// A loss function together with its label domain.
///
/// `prediction_bound` is the radius `M ∨ 1` of the prediction range on which
/// the second derivative is assumed bounded; [`LossModel::curvature_bound`]
/// reports the supremum of `ℓ''` there.
#[derive(Clone)]
pub struct LossModel {
    kind: LossKind,
    domain: LabelDomain,
    prediction_bound: f64,
    custom: Option<CustomFns>,
}

impl fmt::Debug for LossModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossModel")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("prediction_bound", &self.prediction_bound)
            .finish()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

impl LossModel {
    /// `(y - u)^2` on labels in `[lo, hi]`.
    pub fn quadratic(lo: f64, hi: f64) -> Self {
        Self {
            kind: LossKind::Quadratic,
            domain: LabelDomain::Interval { lo, hi },
            prediction_bound: 1.0,
            custom: None,
        }
    }

    /// `log2(1 + e^{-yu})` on `{-1, +1}`.
    pub fn logit() -> Self {
        Self { kind: LossKind::Logit, domain: LabelDomain::Binary, prediction_bound: 1.0, custom: None }
    }

    /// `e^{-yu}` on `{-1, +1}`, with curvature bounded on `|u| <= max(bound, 1)`.
    pub fn exponential(bound: f64) -> Self {
        Self {
            kind: LossKind::Exponential,
            domain: LabelDomain::Binary,
            prediction_bound: bound.max(1.0),
            custom: None,
        }
    }

    /// A user-supplied loss with analytic first and second derivatives in `u`.
    pub fn custom<E, D1, D2>(domain: LabelDomain, prediction_bound: f64, eval: E, d1: D1, d2: D2) -> Self
    where
        E: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: LossKind::Custom,
            domain,
            prediction_bound: prediction_bound.max(1.0),
            custom: Some(CustomFns { eval: Arc::new(eval), d1: Arc::new(d1), d2: Arc::new(d2) }),
        }
    }

    /// Widens the prediction range on which curvature is bounded (`M ∨ 1`).
    pub fn with_prediction_bound(mut self, bound: f64) -> Self {
        self.prediction_bound = bound.max(1.0);
        self
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn domain(&self) -> LabelDomain {
        self.domain
    }

    pub fn prediction_bound(&self) -> f64 {
        self.prediction_bound
    }

    pub fn eval(&self, y: f64, u: f64) -> f64 {
        match self.kind {
            LossKind::Quadratic => (y - u) * (y - u),
            LossKind::Logit => softplus(-y * u) / std::f64::consts::LN_2,
            LossKind::Exponential => (-y * u).exp(),
            LossKind::Custom => (self.custom.as_ref().unwrap().eval)(y, u),
        }
    }

    /// `∂ℓ/∂u`.
    pub fn d1(&self, y: f64, u: f64) -> f64 {
        match self.kind {
            LossKind::Quadratic => 2.0 * (u - y),
            LossKind::Logit => -y * sigmoid(-y * u) / std::f64::consts::LN_2,
            LossKind::Exponential => -y * (-y * u).exp(),
            LossKind::Custom => (self.custom.as_ref().unwrap().d1)(y, u),
        }
    }

    /// `∂²ℓ/∂u²`.
    pub fn d2(&self, y: f64, u: f64) -> f64 {
        match self.kind {
            LossKind::Quadratic => 2.0,
            LossKind::Logit => y * y * sigmoid(y * u) * sigmoid(-y * u) / std::f64::consts::LN_2,
            LossKind::Exponential => y * y * (-y * u).exp(),
            LossKind::Custom => (self.custom.as_ref().unwrap().d2)(y, u),
        }
    }

    /// `τ(R) = ½ inf_{y ∈ T} inf_{|u| ≤ R} ℓ''(y, u)`, capped at 1.
    pub fn tau(&self, radius: f64) -> Result<f64> {
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::InvalidArgument(format!("radius must be nonnegative, got {radius}")));
        }
        let half_inf = match self.kind {
            LossKind::Quadratic => 1.0,
            LossKind::Logit => 0.5 * sigmoid(radius) * sigmoid(-radius) / std::f64::consts::LN_2,
            LossKind::Exponential => 0.5 * (-radius).exp(),
            LossKind::Custom => 0.5 * self.grid_extreme_d2(radius, false),
        };
        Ok(half_inf.min(1.0))
    }

    /// `sup ℓ''` over the label grid and `|u| <= prediction_bound`.
    pub fn curvature_bound(&self) -> f64 {
        let r = self.prediction_bound;
        match self.kind {
            LossKind::Quadratic => 2.0,
            LossKind::Logit => 0.25 / std::f64::consts::LN_2,
            LossKind::Exponential => r.exp(),
            LossKind::Custom => self.grid_extreme_d2(r, true),
        }
    }

    /// Dense scan of `ℓ''` over labels × `[-R, R]` (step `1e-3·R`), refined by
    /// golden-section search around the best grid point.
    fn grid_extreme_d2(&self, radius: f64, maximize: bool) -> f64 {
        let sign = if maximize { -1.0 } else { 1.0 };
        let labels = self.domain.grid();
        if radius == 0.0 {
            return sign * labels.iter().map(|&y| sign * self.d2(y, 0.0)).fold(f64::INFINITY, f64::min);
        }
        let steps = 2000usize;
        let h = 2.0 * radius / steps as f64;
        let mut best = f64::INFINITY;
        for &y in &labels {
            let f = |u: f64| sign * self.d2(y, u);
            let mut k_best = 0;
            let mut v_best = f64::INFINITY;
            for k in 0..=steps {
                let v = f(-radius + h * k as f64);
                if v < v_best {
                    v_best = v;
                    k_best = k;
                }
            }
            let center = -radius + h * k_best as f64;
            let (mut a, mut b) = ((center - h).max(-radius), (center + h).min(radius));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if f(c) < f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            best = best.min(v_best).min(f(0.5 * (a + b)));
        }
        sign * best
    }
}

/// Weighted risk `Σ_i w_i ℓ(y_i, u_i)`.
pub fn loss_risk(model: &LossModel, predictions: &[f64], labels: &[f64], weights: &[f64]) -> Result<f64> {
    check_dim(predictions.len(), labels.len())?;
    check_dim(predictions.len(), weights.len())?;
    Ok(predictions
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((&u, &y), &w)| w * model.eval(y, u))
        .sum())
}
