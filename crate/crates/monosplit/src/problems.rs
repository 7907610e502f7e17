//! Benchmark problem builders and independent ground truth.
//!
//! The Minkowski-sum projection problem `min ||f - x||` over `M_1 + ... + M_k`
//! is rewritten as an m-operator inclusion on the doubled space of pairs
//! `(x, y)`: a 1-cocoercive translation pulls the x-block toward `f`, a
//! 1-Lipschitz rotation couples the blocks, and each set contributes the
//! operator `(x, y) -> (0, (N_{M_i})^{-1} y)`, realized through the Moreau
//! identity on top of the set's projection.
//!
//! `oracle_solve` produces reference solutions for small synthetic instances
//! without touching any of the splitting iterations: it runs a projected
//! fixed-point contraction on the equivalent variational inequality, with the
//! feasible-set projection computed by Dykstra's alternating scheme, and
//! certifies the result by sampling the inequality.

use crate::error::{Error, Result};
use crate::lifting::{bsfrb_block_points, MBsfrbState, MOperatorProblem};
use crate::operators::{
    inverse_resolvent, normal_cone_resolvent, skew_pair_operator, translation_cocoercive,
    zero_forward, zero_resolvent, ArcForward, ArcResolvent, ConvexSet, PairResolvent,
};
use crate::space::{self, Vector, Weights};
use crate::splitting::lyapunov::{DrAnchor, SaddleAnchor};
use crate::splitting::FourOperatorProblem;

// ---------------------------------------------------------------------------
// Minkowski-sum projection benchmark
// ---------------------------------------------------------------------------

/// Projection of `f` onto the Minkowski sum of `sets`, all in the same
/// ambient dimension.
#[derive(Debug, Clone)]
pub struct MinkowskiSpec {
    pub sets: Vec<ConvexSet>,
    pub f: Vector,
}

impl MinkowskiSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sets.is_empty() {
            return Err(Error::InvalidParameter(
                "Minkowski sum needs at least one set".into(),
            ));
        }
        let d = self.f.len();
        if d == 0 {
            return Err(Error::InvalidParameter("empty target point".into()));
        }
        for s in &self.sets {
            s.validate()?;
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.dim(),
                    context: "Minkowski set dimension",
                });
            }
        }
        Ok(())
    }

    /// The three-segment benchmark instance: a horizontal segment, a vertical
    /// segment, and the unit ball in the plane.
    pub fn benchmark(f: Vector) -> Result<Self> {
        let spec = MinkowskiSpec {
            sets: vec![
                ConvexSet::segment(2, 0, -2.0, 2.0)?,
                ConvexSet::segment(2, 1, -1.0, 1.0)?,
                ConvexSet::ball(vec![0.0, 0.0], 1.0)?,
            ],
            f,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The lifted m-operator form of a [`MinkowskiSpec`], keeping the sets for
/// decomposition recovery.
pub struct MinkowskiProblem {
    pub problem: MOperatorProblem,
    pub sets: Vec<ConvexSet>,
    pub f: Vector,
    /// Dimension of the pair space `(x, y)`, twice the ambient dimension.
    pub pair_dim: usize,
}

/// Builds the m-operator inclusion whose x-block solution is the projection
/// of `spec.f` onto the Minkowski sum.
pub fn build_minkowski(spec: &MinkowskiSpec, weights: Weights) -> Result<MinkowskiProblem> {
    spec.validate()?;
    let d = spec.f.len();
    let pair_dim = 2 * d;
    let mut a: Vec<ArcResolvent> = Vec::with_capacity(spec.sets.len());
    for set in &spec.sets {
        let dual = inverse_resolvent(normal_cone_resolvent(set.clone())?);
        a.push(std::sync::Arc::new(PairResolvent::new(d, dual)));
    }
    let problem = MOperatorProblem::new(
        a,
        skew_pair_operator(d)?,
        translation_cocoercive(spec.f.clone(), pair_dim)?,
        weights,
        pair_dim,
    )?;
    Ok(MinkowskiProblem {
        problem,
        sets: spec.sets.clone(),
        f: spec.f.clone(),
        pair_dim,
    })
}

/// Recovers the summands `m_i in M_i` with `sum_i m_i ~= x_bar` from a
/// converged first-algorithm state, via the per-block resolvent identity:
/// the y-part of `(arg - out) / param` is exactly a projection onto `M_i`.
pub fn recover_decomposition(
    mk: &MinkowskiProblem,
    state: &MBsfrbState,
    gamma: f64,
) -> Result<Vec<Vector>> {
    let d = mk.f.len();
    let points = bsfrb_block_points(&mk.problem, state, gamma)?;
    let mut parts = Vec::with_capacity(points.len());
    for pt in &points {
        let mut mi = space::zeros(d);
        for c in 0..d {
            mi[c] = (pt.arg[d + c] - pt.output[d + c]) / pt.param;
        }
        parts.push(mi);
    }
    Ok(parts)
}

// ---------------------------------------------------------------------------
// Synthetic instances with independently computable solutions
// ---------------------------------------------------------------------------

/// A small four-operator instance built from normal cones of boxes/balls,
/// an optional rotation coupling, and the affine pull `C x = x - f`.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub set1: ConvexSet,
    pub set2: Option<ConvexSet>,
    /// Couple the halves with the skew rotation (requires even dimension).
    pub skew: bool,
    pub f: Vector,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if self.f.len() != self.dim || self.set1.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.f.len().min(self.set1.dim()),
                context: "synthetic spec dimensions",
            });
        }
        if let Some(s2) = &self.set2 {
            if s2.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: s2.dim(),
                    context: "synthetic second set",
                });
            }
        }
        if self.skew && self.dim % 2 != 0 {
            return Err(Error::InvalidParameter(
                "skew coupling needs an even dimension".into(),
            ));
        }
        Ok(())
    }

    fn forward(&self) -> Result<ArcForward> {
        if self.skew {
            skew_pair_operator(self.dim / 2)
        } else {
            Ok(zero_forward())
        }
    }

    pub fn four_operator_problem(&self) -> Result<FourOperatorProblem> {
        self.validate()?;
        let a2 = match &self.set2 {
            Some(s) => normal_cone_resolvent(s.clone())?,
            None => zero_resolvent(),
        };
        FourOperatorProblem::new(
            normal_cone_resolvent(self.set1.clone())?,
            a2,
            self.forward()?,
            translation_cocoercive(self.f.clone(), self.dim)?,
            self.dim,
        )
    }

    /// The same inclusion as an m-operator problem (m = 1 or 2), uniform
    /// weights.
    pub fn m_operator_problem(&self) -> Result<MOperatorProblem> {
        self.validate()?;
        let mut a = vec![normal_cone_resolvent(self.set1.clone())?];
        if let Some(s) = &self.set2 {
            a.push(normal_cone_resolvent(s.clone())?);
        }
        let m = a.len();
        MOperatorProblem::new(
            a,
            self.forward()?,
            translation_cocoercive(self.f.clone(), self.dim)?,
            Weights::uniform(m),
            self.dim,
        )
    }

    /// `F x = B x + x - f`, the single-valued part of the inclusion.
    pub fn field(&self, x: &[f64]) -> Result<Vector> {
        let b = self.forward()?.eval(x)?;
        Ok((0..self.dim).map(|i| b[i] + x[i] - self.f[i]).collect())
    }
}

/// Projection onto the intersection of two sets by Dykstra's alternating
/// scheme.
pub fn dykstra_project(
    s1: &ConvexSet,
    s2: &ConvexSet,
    v: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vector> {
    let mut x = v.to_vec();
    let mut p = space::zeros(v.len());
    let mut q = space::zeros(v.len());
    for _ in 0..max_iter {
        let y = s1.project(&space::add(&x, &p))?;
        let p_next = space::sub(&space::add(&x, &p), &y);
        let x_next = s2.project(&space::add(&y, &q))?;
        let q_next = space::sub(&space::add(&y, &q), &x_next);
        let gap = space::dist(&y, &x_next);
        let moved = space::dist(&x, &x_next);
        x = x_next;
        p = p_next;
        q = q_next;
        if gap <= tol && moved <= tol {
            return Ok(x);
        }
    }
    Err(Error::OracleFailure(format!(
        "Dykstra projection did not reach tolerance {tol} in {max_iter} iterations"
    )))
}

/// Accuracy of [`oracle_solve`].
pub const ORACLE_TOL: f64 = 1e-13;

/// Independent reference solution of a synthetic instance: a projected
/// fixed-point contraction `x <- P_K(x - tau F(x))` on the equivalent
/// variational inequality over `K = S_1 (cap S_2)`, certified by sampling
/// `<F(x*), y - x*> >= 0` over feasible points. Never touches the splitting
/// iterations.
pub fn oracle_solve(spec: &SyntheticSpec) -> Result<Vector> {
    spec.validate()?;
    if spec.dim > 8 {
        return Err(Error::InvalidParameter(
            "oracle_solve is restricted to dimension <= 8".into(),
        ));
    }
    let project_k = |v: &[f64]| -> Result<Vector> {
        match &spec.set2 {
            None => spec.set1.project(v),
            Some(s2) => dykstra_project(&spec.set1, s2, v, 1e-15, 50_000),
        }
    };

    // F is 1-strongly monotone and sqrt(2)-Lipschitz at worst, so tau = 0.4
    // makes the projected map a contraction with factor about 0.72.
    let tau = 0.4;
    let mut x = project_k(&spec.f)?;
    let mut converged = false;
    for _ in 0..100_000 {
        let fx = spec.field(&x)?;
        let next = project_k(&space::axpy(&x, -tau, &fx))?;
        let moved = space::dist(&next, &x);
        x = next;
        if moved <= ORACLE_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::OracleFailure(
            "projected fixed-point iteration did not converge".into(),
        ));
    }

    // Certificate: the inequality must hold against sampled feasible points.
    use rand::prelude::*;
    let fx = spec.field(&x)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b9);
    for _ in 0..64 {
        let probe: Vector = (0..spec.dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let y = project_k(&space::add(&x, &probe))?;
        let slack = space::dot(&fx, &space::sub(&y, &x));
        if slack < -1e-8 {
            return Err(Error::OracleFailure(format!(
                "variational inequality certificate failed: slack {slack}"
            )));
        }
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Residual verification and anchors
// ---------------------------------------------------------------------------

const SPLIT_PROBE_GAMMA: f64 = 1.0;

/// Alternately reconstructs graph points `a_i in A_i(p_i)` near `x` with
/// `a_1 + a_2 = -(Bx + Cx)`, through the resolvent identity
/// `a = (v - Jv) / gamma` at `v = x + gamma a_candidate`. Returns
/// `(a1, a2, defect)` where `defect` bounds both the sum residual and the
/// distance of the graph points from `x`.
fn split_sum(
    p: &FourOperatorProblem,
    x: &[f64],
    iters: usize,
) -> Result<(Vector, Vector, f64)> {
    let g = {
        let bx = p.b.eval(x)?;
        let cx = p.c.eval(x)?;
        space::add(&bx, &cx)
    };
    let gamma = SPLIT_PROBE_GAMMA;
    let mut a1 = space::zeros(p.dim);
    let mut a2 = space::zeros(p.dim);
    let mut defect = f64::INFINITY;
    for _ in 0..iters {
        let v2: Vector = (0..p.dim).map(|i| x[i] - gamma * (g[i] + a1[i])).collect();
        let p2 = p.a2.resolve(gamma, &v2)?;
        a2 = (0..p.dim).map(|i| (v2[i] - p2[i]) / gamma).collect();

        let v1: Vector = (0..p.dim).map(|i| x[i] - gamma * (g[i] + a2[i])).collect();
        let p1 = p.a1.resolve(gamma, &v1)?;
        let a1_next: Vector = (0..p.dim).map(|i| (v1[i] - p1[i]) / gamma).collect();
        let moved = space::dist(&a1_next, &a1);
        a1 = a1_next;

        let sum_res = {
            let mut acc = 0.0;
            for i in 0..p.dim {
                let r = a1[i] + a2[i] + g[i];
                acc += r * r;
            }
            acc.sqrt()
        };
        defect = sum_res
            .max(space::dist(&p1, x))
            .max(space::dist(&p2, x));
        if defect < 1e-14 && moved < 1e-15 {
            break;
        }
    }
    Ok((a1, a2, defect))
}

/// Residual check of `0 in A1 x + A2 x + B x + C x` at `x`, within `tol`.
pub fn verify_solution(p: &FourOperatorProblem, x: &[f64], tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if x.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: x.len(),
            context: "verify_solution point",
        });
    }
    let (_, _, defect) = split_sum(p, x, 20_000)?;
    Ok(defect <= tol)
}

/// Residual check for the m-operator inclusion: cyclically reconstructs
/// `a_i in A_i` near `x` with `sum_i a_i = -(Bx + Cx)`.
pub fn verify_m_solution(mp: &MOperatorProblem, x: &[f64], tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if x.len() != mp.dim {
        return Err(Error::DimensionMismatch {
            expected: mp.dim,
            got: x.len(),
            context: "verify_m_solution point",
        });
    }
    let g = {
        let bx = mp.b.eval(x)?;
        let cx = mp.c.eval(x)?;
        space::add(&bx, &cx)
    };
    let gamma = SPLIT_PROBE_GAMMA;
    let m = mp.m();
    let mut a: Vec<Vector> = vec![space::zeros(mp.dim); m];
    let mut shadow: Vec<Vector> = vec![x.to_vec(); m];
    let mut defect = f64::INFINITY;
    for _ in 0..20_000 {
        for i in 0..m {
            let mut v = space::zeros(mp.dim);
            for c in 0..mp.dim {
                let others: f64 = (0..m).filter(|&j| j != i).map(|j| a[j][c]).sum();
                v[c] = x[c] - gamma * (g[c] + others);
            }
            let pi = mp.a[i].resolve(gamma, &v)?;
            a[i] = (0..mp.dim).map(|c| (v[c] - pi[c]) / gamma).collect();
            shadow[i] = pi;
        }
        let mut sum_res = 0.0;
        for c in 0..mp.dim {
            let r: f64 = (0..m).map(|i| a[i][c]).sum::<f64>() + g[c];
            sum_res += r * r;
        }
        let mut d = sum_res.sqrt();
        for s in &shadow {
            d = d.max(space::dist(s, x));
        }
        defect = d;
        if defect < 1e-14 {
            break;
        }
    }
    Ok(defect <= tol)
}

/// Anchor for the first two algorithms at a known solution: `z = x + gamma a1`
/// with `a1 in A1 x` complementary to the remaining operators.
pub fn dr_anchor(p: &FourOperatorProblem, x_star: &[f64], gamma: f64) -> Result<DrAnchor> {
    let (a1, _, defect) = split_sum(p, x_star, 50_000)?;
    if defect > 1e-9 {
        return Err(Error::OracleFailure(format!(
            "could not split the solution residual: defect {defect}"
        )));
    }
    Ok(DrAnchor {
        z: space::axpy(x_star, gamma, &a1),
        x: x_star.to_vec(),
    })
}

/// Anchor for the third algorithm: `(x, u)` with `u in A1 x` and
/// `-u in (A2 + B + C) x`.
pub fn saddle_anchor(p: &FourOperatorProblem, x_star: &[f64]) -> Result<SaddleAnchor> {
    let (a1, _, defect) = split_sum(p, x_star, 50_000)?;
    if defect > 1e-9 {
        return Err(Error::OracleFailure(format!(
            "could not split the solution residual: defect {defect}"
        )));
    }
    Ok(SaddleAnchor {
        x: x_star.to_vec(),
        u: a1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{zero_cocoercive, ConvexSet};

    #[test]
    fn oracle_kkt_interval() {
        // On the line: N_[-1,1] + (x - 3) vanishes at x = 1.
        let spec = SyntheticSpec {
            dim: 1,
            set1: ConvexSet::rect(vec![-1.0], vec![1.0]).unwrap(),
            set2: None,
            skew: false,
            f: vec![3.0],
        };
        let x = oracle_solve(&spec).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_unconstrained_returns_f() {
        let spec = SyntheticSpec {
            dim: 2,
            set1: ConvexSet::WholeSpace { dim: 2 },
            set2: None,
            skew: false,
            f: vec![0.25, -1.5],
        };
        let x = oracle_solve(&spec).unwrap();
        assert!(space::dist(&x, &spec.f) < 1e-12);
    }

    #[test]
    fn oracle_ball_projection() {
        let spec = SyntheticSpec {
            dim: 2,
            set1: ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
            set2: None,
            skew: false,
            f: vec![3.0, 0.0],
        };
        let x = oracle_solve(&spec).unwrap();
        assert!(space::dist(&x, &[1.0, 0.0]) < 1e-12);
    }

    #[test]
    fn oracle_dimension_guard() {
        let spec = SyntheticSpec {
            dim: 9,
            set1: ConvexSet::WholeSpace { dim: 9 },
            set2: None,
            skew: false,
            f: vec![0.0; 9],
        };
        assert!(oracle_solve(&spec).is_err());
    }

    #[test]
    fn dykstra_matches_box_intersection() {
        // Two boxes: the intersection is a box, so the projection is a clamp.
        let b1 = ConvexSet::rect(vec![-1.0, -1.0], vec![0.5, 2.0]).unwrap();
        let b2 = ConvexSet::rect(vec![-0.25, -3.0], vec![1.0, 1.0]).unwrap();
        let inter = ConvexSet::rect(vec![-0.25, -1.0], vec![0.5, 1.0]).unwrap();
        for v in [[2.0, 2.0], [-4.0, 0.3], [0.1, -9.0]] {
            let got = dykstra_project(&b1, &b2, &v, 1e-15, 10_000).unwrap();
            let want = inter.project(&v).unwrap();
            assert!(space::dist(&got, &want) < 1e-10);
        }
    }

    #[test]
    fn verify_accepts_oracle_output_and_rejects_perturbations() {
        let spec = SyntheticSpec {
            dim: 1,
            set1: ConvexSet::rect(vec![-1.0], vec![1.0]).unwrap(),
            set2: None,
            skew: false,
            f: vec![3.0],
        };
        let p = spec.four_operator_problem().unwrap();
        let x = oracle_solve(&spec).unwrap();
        assert!(verify_solution(&p, &x, 1e-8).unwrap());
        assert!(!verify_solution(&p, &[x[0] + 0.1], 1e-8).unwrap());

        let ball = SyntheticSpec {
            dim: 2,
            set1: ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
            set2: None,
            skew: false,
            f: vec![3.0, 0.0],
        };
        let p = ball.four_operator_problem().unwrap();
        let x = oracle_solve(&ball).unwrap();
        assert!(verify_solution(&p, &x, 1e-8).unwrap());
        assert!(!verify_solution(&p, &[1.1, 0.0], 1e-8).unwrap());
    }

    #[test]
    fn verify_zero_problem_accepts_anything() {
        let p = FourOperatorProblem::new(
            zero_resolvent(),
            zero_resolvent(),
            zero_forward(),
            zero_cocoercive(),
            3,
        )
        .unwrap();
        assert!(verify_solution(&p, &[0.4, -2.0, 11.0], 1e-10).unwrap());
    }

    #[test]
    fn minkowski_single_ball_degenerates_to_projection() {
        let spec = MinkowskiSpec {
            sets: vec![ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap()],
            f: vec![3.0, 0.0],
        };
        let mk = build_minkowski(&spec, Weights::uniform(1)).unwrap();
        assert_eq!(mk.problem.m(), 1);
        assert_eq!(mk.pair_dim, 4);
        // The pair solution is (x, y) with x = P_M(f) = (1, 0), y = f - x.
        let pair = vec![1.0, 0.0, 2.0, 0.0];
        assert!(verify_m_solution(&mk.problem, &pair, 1e-8).unwrap());
        let off = vec![1.2, 0.0, 1.8, 0.0];
        assert!(!verify_m_solution(&mk.problem, &off, 1e-8).unwrap());
    }

    #[test]
    fn anchors_split_the_residual() {
        let spec = SyntheticSpec {
            dim: 2,
            set1: ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
            set2: None,
            skew: false,
            f: vec![3.0, 0.0],
        };
        let p = spec.four_operator_problem().unwrap();
        let x = oracle_solve(&spec).unwrap();
        let gamma = 0.2;
        let anchor = dr_anchor(&p, &x, gamma).unwrap();
        // z - x = gamma * a1 must reproduce a1 = -C(x) = (2, 0).
        let a1 = space::scale(&space::sub(&anchor.z, &anchor.x), 1.0 / gamma);
        assert!(space::dist(&a1, &[2.0, 0.0]) < 1e-9);

        let sa = saddle_anchor(&p, &x).unwrap();
        assert!(space::dist(&sa.u, &[2.0, 0.0]) < 1e-9);
    }
}
