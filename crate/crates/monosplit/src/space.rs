//! Finite-dimensional real vector arithmetic, weighted product-space inner
//! products, and the skewed quadratic norm used by the saddle-point analysis.
//!
//! The ambient Hilbert space is `R^d` with dense `f64` coordinates. All
//! functions here are pure; none mutate their inputs.

use crate::error::{Error, Result};

/// A dense coordinate vector. Dimension is fixed per problem instance.
pub type Vector = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// Euclidean distance between `a` and `b`.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `a - b`, element-wise.
pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| s * x).collect()
}

/// `a + s * b`.
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn zeros(dim: usize) -> Vector {
    vec![0.0; dim]
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

fn check_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            expected,
            got,
            context,
        });
    }
    Ok(())
}

/// Positive block weights summing to one; the metric of the weighted product
/// space `H^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Tolerance on `sum(w) = 1`.
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidParameter("weights must be nonempty".into()));
        }
        for (i, &wi) in w.iter().enumerate() {
            if !(wi > 0.0 && wi <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight {i} = {wi} is outside (0, 1]"
                )));
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {sum}, expected 1 within {}",
                Self::SUM_TOL
            )));
        }
        Ok(Weights(w))
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1, "need at least one block");
        Weights(vec![1.0 / m as f64; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Weights {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A point of the product space `H x H`, as used by the saddle-point metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPoint {
    pub x: Vector,
    pub u: Vector,
}

impl PairPoint {
    pub fn new(x: Vector, u: Vector) -> Result<Self> {
        check_dim(x.len(), u.len(), "pair point blocks")?;
        Ok(PairPoint { x, u })
    }
}

/// Weighted inner product `sum_i w_i <x_i, y_i>` over block lists.
pub fn weighted_inner(weights: &Weights, x: &[Vector], y: &[Vector]) -> Result<f64> {
    check_dim(weights.len(), x.len(), "weighted_inner x blocks")?;
    check_dim(weights.len(), y.len(), "weighted_inner y blocks")?;
    let dim = x[0].len();
    let mut acc = 0.0;
    for i in 0..weights.len() {
        check_dim(dim, x[i].len(), "weighted_inner x block dim")?;
        check_dim(dim, y[i].len(), "weighted_inner y block dim")?;
        acc += weights[i] * dot(&x[i], &y[i]);
    }
    Ok(acc)
}

/// Weighted squared norm `sum_i w_i ||x_i||^2`.
pub fn weighted_norm_sq(weights: &Weights, x: &[Vector]) -> Result<f64> {
    weighted_inner(weights, x, x)
}

/// Squared norm of `(x, u)` in the metric
/// `(1/gamma) ||x||^2 - 2 <x, u> + lambda ||u||^2`.
///
/// The quadratic form is positive definite exactly when `gamma < lambda`,
/// which every admissible parameter pair satisfies; other inputs are
/// rejected.
pub fn k_norm_sq(p: &PairPoint, gamma: f64, lambda: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "k_norm_sq needs gamma > 0 and lambda > 0, got gamma = {gamma}, lambda = {lambda}"
        )));
    }
    if gamma >= lambda {
        return Err(Error::InvalidParameter(format!(
            "k_norm_sq needs gamma < lambda for positive definiteness, got gamma = {gamma}, lambda = {lambda}"
        )));
    }
    Ok(k_quad_form(&p.x, &p.u, gamma, lambda))
}

/// The raw quadratic form behind [`k_norm_sq`], without parameter checks.
/// Used on hot paths where `gamma < lambda` has already been validated.
pub(crate) fn k_quad_form(x: &[f64], u: &[f64], gamma: f64, lambda: f64) -> f64 {
    (1.0 / gamma) * norm_sq(x) - 2.0 * dot(x, u) + lambda * norm_sq(u)
}
