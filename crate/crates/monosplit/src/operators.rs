//! Operator oracles and a concrete library: projections, normal cones,
//! inverse operators through the Moreau identity, and the skew/translation
//! operators of the Minkowski-sum benchmark.
//!
//! The solvers touch set-valued operators only through their resolvents and
//! single-valued operators only through forward evaluations, so an operator
//! here is just an evaluation oracle plus declared constants. Oracles must be
//! referentially transparent: same input, same output, no observable
//! mutation. Declared constants are trusted; sampled validators live at the
//! bottom of this module.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{self, Vector};

/// Declared Lipschitz constant of a monotone forward operator. `Zero` flags
/// the identically-zero operator so step-size rules can take the `L -> 0`
/// limit without dividing by zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lipschitz {
    Zero,
    Const(f64),
}

impl Lipschitz {
    pub fn value(self) -> f64 {
        match self {
            Lipschitz::Zero => 0.0,
            Lipschitz::Const(l) => l,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Lipschitz::Zero)
    }
}

/// Declared cocoercivity constant. `Zero` flags the identically-zero
/// operator, which is beta-cocoercive for every beta (the `beta -> inf`
/// limit in the step-size rules).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cocoercivity {
    Zero,
    Beta(f64),
}

impl Cocoercivity {
    pub fn is_zero(self) -> bool {
        matches!(self, Cocoercivity::Zero)
    }
}

/// Resolvent oracle of a maximally monotone operator: `resolve(gamma, v)`
/// evaluates `(Id + gamma A)^{-1} v`.
pub trait ResolventOp: Send + Sync {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector>;

    fn name(&self) -> &str {
        "resolvent"
    }
}

/// Forward oracle of a single-valued monotone Lipschitz operator.
pub trait ForwardOp: Send + Sync {
    fn eval(&self, v: &[f64]) -> Result<Vector>;
    fn lipschitz(&self) -> Lipschitz;
}

/// Forward oracle of a cocoercive operator.
pub trait CocoerciveOp: Send + Sync {
    fn eval(&self, v: &[f64]) -> Result<Vector>;
    fn cocoercivity(&self) -> Cocoercivity;
}

pub type ArcResolvent = Arc<dyn ResolventOp>;
pub type ArcForward = Arc<dyn ForwardOp>;
pub type ArcCocoercive = Arc<dyn CocoerciveOp>;

fn require_positive_gamma(gamma: f64, who: &str) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{who}: resolvent parameter must be positive, got {gamma}"
        )));
    }
    Ok(())
}

fn require_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            expected,
            got,
            context,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Convex sets and projections
// ---------------------------------------------------------------------------

/// A nonempty closed convex set with a closed-form Euclidean projection.
/// Axis-aligned segments are degenerate boxes; see [`ConvexSet::segment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSet {
    #[serde(rename = "box")]
    Rect { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
    Singleton { point: Vector },
    WholeSpace { dim: usize },
}

impl ConvexSet {
    /// Axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
    pub fn rect(lo: Vector, hi: Vector) -> Result<Self> {
        require_dim(lo.len(), hi.len(), "box bounds")?;
        if lo.is_empty() {
            return Err(Error::InvalidParameter("box in dimension 0".into()));
        }
        for i in 0..lo.len() {
            if !(lo[i] <= hi[i]) {
                return Err(Error::InvalidParameter(format!(
                    "box bounds out of order on axis {i}: [{}, {}]",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(ConvexSet::Rect { lo, hi })
    }

    /// Segment `[lo, hi]` along coordinate `axis`, all other coordinates zero.
    pub fn segment(dim: usize, axis: usize, lo: f64, hi: f64) -> Result<Self> {
        if axis >= dim {
            return Err(Error::InvalidParameter(format!(
                "segment axis {axis} out of range for dimension {dim}"
            )));
        }
        let mut l = vec![0.0; dim];
        let mut h = vec![0.0; dim];
        l[axis] = lo;
        h[axis] = hi;
        Self::rect(l, h)
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Rect { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Singleton { point } => point.len(),
            ConvexSet::WholeSpace { dim } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Rect { lo, hi } => {
                Self::rect(lo.clone(), hi.clone())?;
            }
            ConvexSet::Ball { center, radius } => {
                Self::ball(center.clone(), *radius)?;
            }
            ConvexSet::Singleton { point } => {
                if point.is_empty() {
                    return Err(Error::InvalidParameter("singleton in dimension 0".into()));
                }
            }
            ConvexSet::WholeSpace { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("whole space in dimension 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, v: &[f64]) -> Result<Vector> {
        require_dim(self.dim(), v.len(), "projection input")?;
        Ok(match self {
            ConvexSet::Rect { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&x, (&l, &h))| x.clamp(l, h))
                .collect(),
            ConvexSet::Ball { center, radius } => {
                let d = space::sub(v, center);
                let n = space::norm(&d);
                if n <= *radius {
                    v.to_vec()
                } else {
                    space::axpy(center, radius / n, &d)
                }
            }
            ConvexSet::Singleton { point } => point.clone(),
            ConvexSet::WholeSpace { .. } => v.to_vec(),
        })
    }

    /// Membership up to a small relative slack, for residual checks.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        if v.len() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::Rect { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&x, (&l, &h))| x >= l - tol && x <= h + tol),
            ConvexSet::Ball { center, radius } => space::dist(v, center) <= radius + tol,
            ConvexSet::Singleton { point } => space::dist(v, point) <= tol,
            ConvexSet::WholeSpace { .. } => true,
        }
    }

    /// A point in the interior (or the point itself for sets without one).
    pub fn interior_point(&self) -> Vector {
        match self {
            ConvexSet::Rect { lo, hi } => lo.iter().zip(hi).map(|(&l, &h)| 0.5 * (l + h)).collect(),
            ConvexSet::Ball { center, .. } => center.clone(),
            ConvexSet::Singleton { point } => point.clone(),
            ConvexSet::WholeSpace { dim } => vec![0.0; *dim],
        }
    }
}

/// Projection onto a convex set, as a free function mirroring the math.
pub fn project(set: &ConvexSet, v: &[f64]) -> Result<Vector> {
    set.project(v)
}

// ---------------------------------------------------------------------------
// Resolvent library
// ---------------------------------------------------------------------------

/// Normal cone of a closed convex set. Its resolvent is the projection onto
/// the set, for every positive parameter.
#[derive(Debug, Clone)]
pub struct NormalCone {
    set: ConvexSet,
    name: String,
}

impl NormalCone {
    pub fn new(set: ConvexSet) -> Result<Self> {
        set.validate()?;
        let name = format!("normal_cone({:?})", kind_tag(&set));
        Ok(NormalCone { set, name })
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }
}

fn kind_tag(set: &ConvexSet) -> &'static str {
    match set {
        ConvexSet::Rect { .. } => "box",
        ConvexSet::Ball { .. } => "ball",
        ConvexSet::Singleton { .. } => "singleton",
        ConvexSet::WholeSpace { .. } => "whole_space",
    }
}

impl ResolventOp for NormalCone {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        require_positive_gamma(gamma, &self.name)?;
        self.set.project(v)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Resolvent of a maximally monotone operator, as a convenience constructor.
pub fn normal_cone_resolvent(set: ConvexSet) -> Result<ArcResolvent> {
    Ok(Arc::new(NormalCone::new(set)?))
}

/// Resolvent of the inverse operator `A^{-1}`, realized through the Moreau
/// identity: `J_{gamma A^{-1}}(v) = v - gamma * J_{A/gamma}(v / gamma)`.
pub struct InverseResolvent {
    inner: ArcResolvent,
    name: String,
}

impl InverseResolvent {
    pub fn new(inner: ArcResolvent) -> Self {
        let name = format!("inverse({})", inner.name());
        InverseResolvent { inner, name }
    }
}

impl ResolventOp for InverseResolvent {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        require_positive_gamma(gamma, &self.name)?;
        let scaled: Vector = v.iter().map(|x| x / gamma).collect();
        let p = self.inner.resolve(1.0 / gamma, &scaled)?;
        require_dim(v.len(), p.len(), "inverse resolvent inner output")?;
        Ok(v.iter().zip(&p).map(|(x, y)| x - gamma * y).collect())
    }

    fn name(&self) -> &str {
        &self.name
    }
}

pub fn inverse_resolvent(inner: ArcResolvent) -> ArcResolvent {
    Arc::new(InverseResolvent::new(inner))
}

/// Resolvent of a weighted operator `A / omega`:
/// `J_{gamma A / omega}(v) = J_{(gamma/omega) A}(v)`.
pub struct WeightedResolvent {
    inner: ArcResolvent,
    omega: f64,
    name: String,
}

impl WeightedResolvent {
    pub fn new(inner: ArcResolvent, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weighted resolvent needs omega in (0, 1], got {omega}"
            )));
        }
        let name = format!("weighted({}, {omega})", inner.name());
        Ok(WeightedResolvent { inner, omega, name })
    }
}

impl ResolventOp for WeightedResolvent {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        require_positive_gamma(gamma, &self.name)?;
        self.inner.resolve(gamma / self.omega, v)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

pub fn weighted_resolvent(inner: ArcResolvent, omega: f64) -> Result<ArcResolvent> {
    Ok(Arc::new(WeightedResolvent::new(inner, omega)?))
}

/// Block-diagonal resolvent on a pair `(x, y)`: identity on the leading
/// `x_dim` coordinates, `y_op` on the rest. This realizes the benchmark's
/// per-set operators `(x, y) -> (0, D y)`.
pub struct PairResolvent {
    x_dim: usize,
    y_op: ArcResolvent,
    name: String,
}

impl PairResolvent {
    pub fn new(x_dim: usize, y_op: ArcResolvent) -> Self {
        let name = format!("pair(id_{x_dim}, {})", y_op.name());
        PairResolvent { x_dim, y_op, name }
    }
}

impl ResolventOp for PairResolvent {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        require_positive_gamma(gamma, &self.name)?;
        if v.len() <= self.x_dim {
            return Err(Error::DimensionMismatch {
                expected: self.x_dim + 1,
                got: v.len(),
                context: "pair resolvent input",
            });
        }
        let mut out = v[..self.x_dim].to_vec();
        out.extend(self.y_op.resolve(gamma, &v[self.x_dim..])?);
        Ok(out)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

// ---------------------------------------------------------------------------
// Zero operators
// ---------------------------------------------------------------------------

/// The zero set-valued operator; its resolvent is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroResolvent;

impl ResolventOp for ZeroResolvent {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        require_positive_gamma(gamma, "zero resolvent")?;
        Ok(v.to_vec())
    }

    fn name(&self) -> &str {
        "zero"
    }
}

/// The zero forward operator, flagged so step-size rules use limit formulas.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForward;

impl ForwardOp for ZeroForward {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        Ok(vec![0.0; v.len()])
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz::Zero
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCocoercive;

impl CocoerciveOp for ZeroCocoercive {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        Ok(vec![0.0; v.len()])
    }

    fn cocoercivity(&self) -> Cocoercivity {
        Cocoercivity::Zero
    }
}

pub fn zero_resolvent() -> ArcResolvent {
    Arc::new(ZeroResolvent)
}

pub fn zero_forward() -> ArcForward {
    Arc::new(ZeroForward)
}

pub fn zero_cocoercive() -> ArcCocoercive {
    Arc::new(ZeroCocoercive)
}

// ---------------------------------------------------------------------------
// Benchmark forward operators
// ---------------------------------------------------------------------------

/// The rotation `(x, y) -> (y, -x)` on paired blocks of equal size.
/// Skew (`<v, Bv> = 0`), an isometry, hence monotone and 1-Lipschitz with
/// the constant attained.
#[derive(Debug, Clone, Copy)]
pub struct SkewPair {
    block: usize,
}

impl SkewPair {
    pub fn new(block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::InvalidParameter(
                "skew pair block size must be positive".into(),
            ));
        }
        Ok(SkewPair { block })
    }

    pub fn block(&self) -> usize {
        self.block
    }
}

impl ForwardOp for SkewPair {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        require_dim(2 * self.block, v.len(), "skew pair input")?;
        let (x, y) = v.split_at(self.block);
        let mut out = Vector::with_capacity(v.len());
        out.extend_from_slice(y);
        out.extend(x.iter().map(|c| -c));
        Ok(out)
    }

    fn lipschitz(&self) -> Lipschitz {
        Lipschitz::Const(1.0)
    }
}

pub fn skew_pair_operator(block: usize) -> Result<ArcForward> {
    Ok(Arc::new(SkewPair::new(block)?))
}

/// The 1-cocoercive translation `(x, y) -> (x - f, 0)`. With
/// `out_dim == f.len()` this degenerates to the plain affine map `x -> x - f`.
#[derive(Debug, Clone)]
pub struct Translation {
    f: Vector,
    out_dim: usize,
}

impl Translation {
    pub fn new(f: Vector, out_dim: usize) -> Result<Self> {
        if f.is_empty() || out_dim < f.len() {
            return Err(Error::InvalidParameter(format!(
                "translation block of size {} does not fit dimension {out_dim}",
                f.len()
            )));
        }
        Ok(Translation { f, out_dim })
    }
}

impl CocoerciveOp for Translation {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        require_dim(self.out_dim, v.len(), "translation input")?;
        let mut out = vec![0.0; self.out_dim];
        for i in 0..self.f.len() {
            out[i] = v[i] - self.f[i];
        }
        Ok(out)
    }

    fn cocoercivity(&self) -> Cocoercivity {
        Cocoercivity::Beta(1.0)
    }
}

pub fn translation_cocoercive(f: Vector, out_dim: usize) -> Result<ArcCocoercive> {
    Ok(Arc::new(Translation::new(f, out_dim)?))
}

// ---------------------------------------------------------------------------
// Sampled validators
// ---------------------------------------------------------------------------

/// Sampled firm-nonexpansiveness check of a resolvent at fixed `gamma`:
/// `||Jx - Jy||^2 + ||(I-J)x - (I-J)y||^2 <= ||x - y||^2 + tol`.
pub fn check_firmly_nonexpansive(
    op: &dyn ResolventOp,
    gamma: f64,
    dim: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        let x: Vector = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vector = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let jx = op.resolve(gamma, &x)?;
        let jy = op.resolve(gamma, &y)?;
        let lhs = space::dist_sq(&jx, &jy)
            + space::dist_sq(&space::sub(&x, &jx), &space::sub(&y, &jy));
        let rhs = space::dist_sq(&x, &y);
        if lhs > rhs + tol {
            return Err(Error::InvalidParameter(format!(
                "{} failed firm nonexpansiveness on sample {k}: {lhs} > {rhs} + {tol}",
                op.name()
            )));
        }
    }
    Ok(())
}

/// Sampled monotonicity and Lipschitz check of a forward operator against its
/// declared constant.
pub fn check_monotone_lipschitz(
    op: &dyn ForwardOp,
    dim: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<()> {
    let l = op.lipschitz().value();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        let x: Vector = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vector = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let bx = op.eval(&x)?;
        let by = op.eval(&y)?;
        let mono = space::dot(&space::sub(&x, &y), &space::sub(&bx, &by));
        if mono < -tol {
            return Err(Error::InvalidParameter(format!(
                "forward operator failed monotonicity on sample {k}: {mono}"
            )));
        }
        let lip = space::dist(&bx, &by);
        if lip > l * space::dist(&x, &y) + tol {
            return Err(Error::InvalidParameter(format!(
                "forward operator exceeded declared Lipschitz constant on sample {k}"
            )));
        }
    }
    Ok(())
}

/// Sampled cocoercivity check: `<x - y, Cx - Cy> >= beta ||Cx - Cy||^2 - tol`.
pub fn check_cocoercive(
    op: &dyn CocoerciveOp,
    dim: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<()> {
    let beta = match op.cocoercivity() {
        Cocoercivity::Zero => return Ok(()),
        Cocoercivity::Beta(b) => b,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        let x: Vector = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vector = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let cx = op.eval(&x)?;
        let cy = op.eval(&y)?;
        let lhs = space::dot(&space::sub(&x, &y), &space::sub(&cx, &cy));
        let rhs = beta * space::dist_sq(&cx, &cy);
        if lhs < rhs - tol {
            return Err(Error::InvalidParameter(format!(
                "operator failed cocoercivity on sample {k}: {lhs} < {rhs}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg_m1() -> ConvexSet {
        // [-2, 2] x {0}
        ConvexSet::segment(2, 0, -2.0, 2.0).unwrap()
    }

    fn seg_m2() -> ConvexSet {
        // {0} x [-1, 1]
        ConvexSet::segment(2, 1, -1.0, 1.0).unwrap()
    }

    fn unit_ball() -> ConvexSet {
        ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn projections_match_closed_forms() {
        assert_eq!(seg_m1().project(&[3.0, 5.0]).unwrap(), vec![2.0, 0.0]);
        assert_eq!(seg_m2().project(&[7.0, 0.5]).unwrap(), vec![0.0, 0.5]);
        let p = unit_ball().project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn projection_is_identity_on_members() {
        let b = unit_ball();
        let inside = vec![0.3, -0.4];
        assert_eq!(b.project(&inside).unwrap(), inside);
        let s = seg_m1();
        assert_eq!(s.project(&[1.5, 0.0]).unwrap(), vec![1.5, 0.0]);
    }

    #[test]
    fn projection_rejects_dimension_mismatch() {
        assert!(unit_ball().project(&[1.0]).is_err());
    }

    #[test]
    fn projection_idempotent_and_nonexpansive_sampled() {
        let sets = [seg_m1(), seg_m2(), unit_ball()];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let v: Vector = (0..2).map(|_| rng.random_range(-6.0..6.0)).collect();
            let w: Vector = (0..2).map(|_| rng.random_range(-6.0..6.0)).collect();
            for s in &sets {
                let pv = s.project(&v).unwrap();
                let ppv = s.project(&pv).unwrap();
                assert!(space::dist(&pv, &ppv) < 1e-12);
                assert!(s.contains(&pv, 1e-12));
                let pw = s.project(&w).unwrap();
                assert!(space::dist(&pv, &pw) <= space::dist(&v, &w) + 1e-12);
            }
        }
    }

    #[test]
    fn normal_cone_resolvent_is_projection_for_any_gamma() {
        let r = normal_cone_resolvent(unit_ball()).unwrap();
        assert_eq!(r.resolve(5.0, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(r.resolve(0.01, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let id = normal_cone_resolvent(ConvexSet::WholeSpace { dim: 2 }).unwrap();
        assert_eq!(id.resolve(3.0, &[4.0, -1.0]).unwrap(), vec![4.0, -1.0]);

        let s = normal_cone_resolvent(ConvexSet::Singleton {
            point: vec![1.0, 2.0],
        })
        .unwrap();
        assert_eq!(s.resolve(0.7, &[9.0, 9.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn inverse_resolvent_examples() {
        let ball = normal_cone_resolvent(unit_ball()).unwrap();
        let inv = inverse_resolvent(ball);
        // Boundary case: v - P(v) lands on the cone at the projection.
        assert_eq!(inv.resolve(1.0, &[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        // Interior case: the normal cone is {0}.
        assert_eq!(inv.resolve(1.0, &[0.5, 0.0]).unwrap(), vec![0.0, 0.0]);

        let seg = normal_cone_resolvent(seg_m1()).unwrap();
        let inv_seg = inverse_resolvent(seg);
        let out = inv_seg.resolve(2.0, &[1.0, 3.0]).unwrap();
        assert!(space::dist(&out, &[0.0, 3.0]) < 1e-15);
    }

    #[test]
    fn moreau_identity_sampled() {
        // J_{gamma A}(v) + gamma * J_{A^{-1}/gamma}(v/gamma) = v, to 1e-12.
        let ops: Vec<ArcResolvent> = vec![
            normal_cone_resolvent(seg_m1()).unwrap(),
            normal_cone_resolvent(seg_m2()).unwrap(),
            normal_cone_resolvent(unit_ball()).unwrap(),
            normal_cone_resolvent(ConvexSet::Singleton {
                point: vec![0.5, -0.5],
            })
            .unwrap(),
            normal_cone_resolvent(ConvexSet::WholeSpace { dim: 2 }).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let gamma = rng.random_range(0.05..5.0);
            let v: Vector = (0..2).map(|_| rng.random_range(-8.0..8.0)).collect();
            for op in &ops {
                let inv = inverse_resolvent(op.clone());
                let direct = op.resolve(gamma, &v).unwrap();
                let scaled: Vector = v.iter().map(|x| x / gamma).collect();
                let dual = inv.resolve(1.0 / gamma, &scaled).unwrap();
                let recombined = space::axpy(&direct, gamma, &dual);
                assert!(
                    space::dist(&recombined, &v) < 1e-12,
                    "Moreau identity violated for {}",
                    op.name()
                );
            }
        }
    }

    #[test]
    fn inverse_resolvent_graph_inclusion() {
        // p = J_{gamma A^{-1}}(v) means (v - p)/gamma is a point where p sits
        // in the normal cone: p in N_M((v - p)/gamma).
        let ball = unit_ball();
        let inv = inverse_resolvent(normal_cone_resolvent(ball.clone()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let gamma = rng.random_range(0.1..3.0);
            let v: Vector = (0..2).map(|_| rng.random_range(-4.0..4.0)).collect();
            let p = inv.resolve(gamma, &v).unwrap();
            let q: Vector = v.iter().zip(&p).map(|(a, b)| (a - b) / gamma).collect();
            // q must lie in the ball, and p must be normal to it at q:
            // either p = 0 (interior) or p parallel to q with |q| = 1.
            assert!(ball.contains(&q, 1e-9));
            let pn = space::norm(&p);
            if pn > 1e-12 {
                assert!((space::norm(&q) - 1.0).abs() < 1e-9);
                let cosine = space::dot(&p, &q) / (pn * space::norm(&q));
                assert!((cosine - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn firm_nonexpansiveness_of_library_resolvents() {
        let ops: Vec<ArcResolvent> = vec![
            normal_cone_resolvent(seg_m1()).unwrap(),
            normal_cone_resolvent(unit_ball()).unwrap(),
            inverse_resolvent(normal_cone_resolvent(seg_m2()).unwrap()),
            inverse_resolvent(normal_cone_resolvent(unit_ball()).unwrap()),
            weighted_resolvent(normal_cone_resolvent(unit_ball()).unwrap(), 0.25).unwrap(),
            zero_resolvent(),
        ];
        for (i, op) in ops.iter().enumerate() {
            check_firmly_nonexpansive(op.as_ref(), 0.8, 2, 1000, 1e-10, 40 + i as u64).unwrap();
        }
    }

    #[test]
    fn zero_operators() {
        let r = zero_resolvent();
        assert_eq!(r.resolve(0.3, &[4.0, -1.0]).unwrap(), vec![4.0, -1.0]);
        let b = zero_forward();
        assert_eq!(b.eval(&[4.0, -1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(b.lipschitz().is_zero());
        let c = zero_cocoercive();
        assert_eq!(c.eval(&[9.0]).unwrap(), vec![0.0]);
        assert!(c.cocoercivity().is_zero());
    }

    #[test]
    fn skew_pair_behaviour() {
        let b = SkewPair::new(2).unwrap();
        assert_eq!(
            b.eval(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![3.0, 4.0, -1.0, -2.0]
        );
        assert_eq!(b.eval(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        let v = vec![1.0, 2.0, 3.0, 4.0];
        let bv = b.eval(&v).unwrap();
        assert_eq!(space::dot(&v, &bv), 0.0);
        assert!(b.eval(&[1.0, 2.0, 3.0]).is_err());

        // Isometry, so the declared L = 1 is attained.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let v: Vector = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let bv = b.eval(&v).unwrap();
            assert!((space::norm(&bv) - space::norm(&v)).abs() < 1e-12);
            assert!(space::dot(&v, &bv).abs() < 1e-12);
        }
        check_monotone_lipschitz(&b, 4, 500, 1e-10, 23).unwrap();
    }

    #[test]
    fn translation_behaviour() {
        let c = Translation::new(vec![1.0, -4.0], 4).unwrap();
        assert_eq!(c.eval(&[1.0, -4.0, 7.0, 7.0]).unwrap(), vec![0.0; 4]);
        let c0 = Translation::new(vec![0.0, 0.0], 4).unwrap();
        assert_eq!(
            c0.eval(&[2.0, 3.0, 5.0, 5.0]).unwrap(),
            vec![2.0, 3.0, 0.0, 0.0]
        );
        assert!(c.eval(&[1.0, 2.0]).is_err());

        // On x-only perturbations the cocoercivity bound is tight.
        let x1 = [1.0, 0.0, 9.0, 9.0];
        let x2 = [0.0, 0.0, 9.0, 9.0];
        let d = space::sub(&x1, &x2);
        let cd = space::sub(&c.eval(&x1).unwrap(), &c.eval(&x2).unwrap());
        assert_eq!(space::dot(&d, &cd), 1.0);
        assert_eq!(space::norm_sq(&cd), 1.0);
        check_cocoercive(&c, 4, 1000, 1e-10, 31).unwrap();
    }

    #[test]
    fn weighted_resolvent_examples() {
        let ball = normal_cone_resolvent(unit_ball()).unwrap();
        let same = weighted_resolvent(ball.clone(), 1.0).unwrap();
        assert_eq!(same.resolve(0.7, &[3.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let half = weighted_resolvent(ball.clone(), 0.5).unwrap();
        assert_eq!(half.resolve(1.0, &[3.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let inv = inverse_resolvent(ball);
        let w = weighted_resolvent(inv, 0.5).unwrap();
        // Effective parameter 2: v - 2 P(v/2) = (2,0) - 2(1,0) = 0.
        assert_eq!(w.resolve(1.0, &[2.0, 0.0]).unwrap(), vec![0.0, 0.0]);

        assert!(weighted_resolvent(zero_resolvent(), 0.0).is_err());
        assert!(weighted_resolvent(zero_resolvent(), 1.5).is_err());
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn sets() -> impl Strategy<Value = ConvexSet> {
            prop_oneof![
                ((-5.0_f64..0.0), (0.0_f64..5.0), (-5.0_f64..0.0), (0.0_f64..5.0)).prop_map(
                    |(a, b, c, d)| ConvexSet::rect(vec![a, c], vec![b, d]).unwrap()
                ),
                ((-2.0_f64..2.0), (-2.0_f64..2.0), (0.1_f64..4.0))
                    .prop_map(|(cx, cy, r)| ConvexSet::ball(vec![cx, cy], r).unwrap()),
            ]
        }

        proptest! {
            #[test]
            fn projection_idempotent_and_nonexpansive(
                s in sets(),
                v in proptest::collection::vec(-20.0_f64..20.0, 2),
                w in proptest::collection::vec(-20.0_f64..20.0, 2),
            ) {
                let pv = s.project(&v).unwrap();
                let ppv = s.project(&pv).unwrap();
                prop_assert!(space::dist(&pv, &ppv) <= 1e-12);
                let pw = s.project(&w).unwrap();
                prop_assert!(space::dist(&pv, &pw) <= space::dist(&v, &w) + 1e-12);
            }

            #[test]
            fn moreau_decomposition_for_normal_cones(
                s in sets(),
                v in proptest::collection::vec(-20.0_f64..20.0, 2),
                gamma in 0.05_f64..5.0,
            ) {
                let op = normal_cone_resolvent(s).unwrap();
                let inv = inverse_resolvent(op.clone());
                let direct = op.resolve(gamma, &v).unwrap();
                let scaled: Vector = v.iter().map(|x| x / gamma).collect();
                let dual = inv.resolve(1.0 / gamma, &scaled).unwrap();
                let back = space::axpy(&direct, gamma, &dual);
                prop_assert!(space::dist(&back, &v) <= 1e-10 * (1.0 + space::norm(&v)));
            }
        }
    }

    #[test]
    fn convex_set_serde_round_trip() {
        let sets = vec![
            seg_m1(),
            unit_ball(),
            ConvexSet::Singleton { point: vec![1.0] },
            ConvexSet::WholeSpace { dim: 3 },
        ];
        for s in sets {
            let text = serde_json::to_string(&s).unwrap();
            let back: ConvexSet = serde_json::from_str(&text).unwrap();
            assert_eq!(s, back);
        }
        let parsed: ConvexSet =
            serde_json::from_str(r#"{"kind":"box","lo":[-2.0,0.0],"hi":[2.0,0.0]}"#).unwrap();
        assert_eq!(parsed, seg_m1());
    }
}
