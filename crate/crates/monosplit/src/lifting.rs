//! Weighted product-space machinery and the three algorithms for
//! `0 in sum_i A_i x + B x + C x` with `m` maximally monotone operators.
//!
//! The product space `H^m` carries the weighted metric
//! `<x|y> = sum_i w_i <x_i, y_i>`. In that metric the projection onto the
//! diagonal subspace is the weighted block average, and the resolvent of the
//! stacked operator acts blockwise with per-block parameter `gamma / w_i`.
//! Consequently each m-operator method is exactly one of the four-operator
//! algorithms applied to the lifted problem with the diagonal normal cone in
//! one slot; the direct per-block implementations below are arithmetic
//! transcriptions of that identity, and the equivalence tests assert bitwise
//! equality between both paths. Any change to an update expression here must
//! be mirrored in `splitting`.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::operators::{
    ArcCocoercive, ArcForward, ArcResolvent, CocoerciveOp, Cocoercivity, ForwardOp, Lipschitz,
    ResolventOp,
};
use crate::space::{self, k_quad_form, Vector, Weights};
use crate::splitting::lyapunov::{
    lyapunov_bsfrb, lyapunov_bsrfb, lyapunov_sfrdr, Anchor, BsfrbWindow, BsrfbWindow, SfrdrWindow,
};
use crate::splitting::run::{
    prefix_dist, IterationRecord, RunOptions, RunTrace, StoppingRule, Termination,
    DIVERGENCE_NORM,
};
use crate::splitting::stepsize::{StepsizeRule, Variant};
use crate::splitting::FourOperatorProblem;

/// A point of the lifted space: one block per operator.
pub type LiftedPoint = Vec<Vector>;

/// `x -> (x, ..., x)`, the canonical embedding into the diagonal.
pub fn lift(x: &[f64], m: usize) -> LiftedPoint {
    assert!(m >= 1, "need at least one block");
    (0..m).map(|_| x.to_vec()).collect()
}

pub fn concat_blocks(blocks: &[Vector]) -> Vector {
    blocks.concat()
}

pub fn split_blocks(flat: &[f64], m: usize) -> Result<LiftedPoint> {
    if m == 0 || flat.len() % m != 0 {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: flat.len(),
            context: "flat lifted vector",
        });
    }
    let d = flat.len() / m;
    Ok(flat.chunks(d).map(|c| c.to_vec()).collect())
}

/// Weighted block average, the shared kernel of the diagonal projection and
/// the direct x-updates. Accumulation order is fixed (ascending blocks) so
/// the direct and lifted code paths agree bit-for-bit.
fn weighted_average(w: &Weights, blocks: &[&[f64]], dim: usize) -> Vector {
    let mut out = space::zeros(dim);
    for (c, slot) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, blk) in blocks.iter().enumerate() {
            s += w[j] * blk[c];
        }
        *slot = s;
    }
    out
}

/// Projection onto the diagonal subspace in the weighted metric:
/// every block becomes `sum_i w_i x_i`.
pub fn project_diagonal(w: &Weights, p: &LiftedPoint) -> Result<LiftedPoint> {
    if p.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: p.len(),
            context: "project_diagonal blocks",
        });
    }
    let dim = p[0].len();
    for b in p {
        if b.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.len(),
                context: "project_diagonal block dim",
            });
        }
    }
    let refs: Vec<&[f64]> = p.iter().map(|b| b.as_slice()).collect();
    let avg = weighted_average(w, &refs, dim);
    Ok(lift(&avg, w.len()))
}

/// Blockwise resolvent of the stacked operator: block `i` is
/// `J_{(gamma/w_i) A_i}` applied to block `i`.
pub fn lifted_resolvent(
    parts: &[ArcResolvent],
    w: &Weights,
    gamma: f64,
    p: &LiftedPoint,
) -> Result<LiftedPoint> {
    if parts.len() != w.len() || p.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: parts.len().min(p.len()),
            context: "lifted_resolvent blocks",
        });
    }
    let mut out = Vec::with_capacity(parts.len());
    for i in 0..parts.len() {
        out.push(parts[i].resolve(gamma / w[i], &p[i])?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The m-operator problem
// ---------------------------------------------------------------------------

/// An inclusion `0 in sum_i A_i x + B x + C x` on `R^dim`, with block
/// weights fixing the product-space metric.
pub struct MOperatorProblem {
    pub a: Vec<ArcResolvent>,
    pub b: ArcForward,
    pub c: ArcCocoercive,
    pub weights: Weights,
    pub dim: usize,
}

impl MOperatorProblem {
    pub fn new(
        a: Vec<ArcResolvent>,
        b: ArcForward,
        c: ArcCocoercive,
        weights: Weights,
        dim: usize,
    ) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one maximally monotone operator".into(),
            ));
        }
        if weights.len() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: weights.len(),
                context: "m-operator weights",
            });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(MOperatorProblem {
            a,
            b,
            c,
            weights,
            dim,
        })
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn lipschitz(&self) -> Lipschitz {
        self.b.lipschitz()
    }

    pub fn cocoercivity(&self) -> Cocoercivity {
        self.c.cocoercivity()
    }

    /// The lifted four-operator problem driving the first two algorithms:
    /// `A1` the diagonal normal cone (resolvent = weighted-average
    /// projection), `A2` the stacked blockwise resolvent.
    pub fn lifted_dr_problem(&self) -> FourOperatorProblem {
        FourOperatorProblem::new(
            Arc::new(DiagonalProjection {
                weights: self.weights.clone(),
                block_dim: self.dim,
            }),
            Arc::new(LiftedResolventOp {
                parts: self.a.clone(),
                weights: self.weights.clone(),
                block_dim: self.dim,
            }),
            Arc::new(LiftedForward {
                inner: self.b.clone(),
                blocks: self.m(),
                block_dim: self.dim,
            }),
            Arc::new(LiftedCocoercive {
                inner: self.c.clone(),
                blocks: self.m(),
                block_dim: self.dim,
            }),
            self.m() * self.dim,
        )
        .expect("lifted problem dimensions are consistent")
    }

    /// The lifted problem driving the third algorithm, where the roles swap:
    /// the blockwise resolvent sits in the `A1` slot (evaluated at `lambda`)
    /// and the diagonal normal cone in the `A2` slot.
    pub fn lifted_saddle_problem(&self) -> FourOperatorProblem {
        FourOperatorProblem::new(
            Arc::new(LiftedResolventOp {
                parts: self.a.clone(),
                weights: self.weights.clone(),
                block_dim: self.dim,
            }),
            Arc::new(DiagonalProjection {
                weights: self.weights.clone(),
                block_dim: self.dim,
            }),
            Arc::new(LiftedForward {
                inner: self.b.clone(),
                blocks: self.m(),
                block_dim: self.dim,
            }),
            Arc::new(LiftedCocoercive {
                inner: self.c.clone(),
                blocks: self.m(),
                block_dim: self.dim,
            }),
            self.m() * self.dim,
        )
        .expect("lifted problem dimensions are consistent")
    }

    fn check_block(&self, v: &[f64], context: &'static str) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
                context,
            });
        }
        Ok(())
    }
}

/// Resolvent of the normal cone of the diagonal subspace in the weighted
/// metric: parameter-independent, every block becomes the weighted average.
pub struct DiagonalProjection {
    weights: Weights,
    block_dim: usize,
}

impl ResolventOp for DiagonalProjection {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diagonal projection: resolvent parameter must be positive, got {gamma}"
            )));
        }
        let m = self.weights.len();
        let d = self.block_dim;
        if v.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                got: v.len(),
                context: "diagonal projection input",
            });
        }
        let blocks: Vec<&[f64]> = v.chunks(d).collect();
        let avg = weighted_average(&self.weights, &blocks, d);
        let mut out = Vector::with_capacity(m * d);
        for _ in 0..m {
            out.extend_from_slice(&avg);
        }
        Ok(out)
    }

    fn name(&self) -> &str {
        "diagonal_projection"
    }
}

/// Flat-vector form of [`lifted_resolvent`].
pub struct LiftedResolventOp {
    parts: Vec<ArcResolvent>,
    weights: Weights,
    block_dim: usize,
}

impl ResolventOp for LiftedResolventOp {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        let m = self.parts.len();
        let d = self.block_dim;
        if v.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                got: v.len(),
                context: "lifted resolvent input",
            });
        }
        let mut out = Vector::with_capacity(m * d);
        for (i, block) in v.chunks(d).enumerate() {
            let r = self.parts[i].resolve(gamma / self.weights[i], block)?;
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                    context: "lifted resolvent block output",
                });
            }
            out.extend(r);
        }
        Ok(out)
    }

    fn name(&self) -> &str {
        "lifted_resolvent"
    }
}

/// Blockwise application of a forward operator; keeps its Lipschitz constant.
pub struct LiftedForward {
    inner: ArcForward,
    blocks: usize,
    block_dim: usize,
}

impl ForwardOp for LiftedForward {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        if v.len() != self.blocks * self.block_dim {
            return Err(Error::DimensionMismatch {
                expected: self.blocks * self.block_dim,
                got: v.len(),
                context: "lifted forward input",
            });
        }
        let mut out = Vector::with_capacity(v.len());
        for block in v.chunks(self.block_dim) {
            out.extend(self.inner.eval(block)?);
        }
        Ok(out)
    }

    fn lipschitz(&self) -> Lipschitz {
        self.inner.lipschitz()
    }
}

/// Blockwise application of a cocoercive operator; keeps its constant.
pub struct LiftedCocoercive {
    inner: ArcCocoercive,
    blocks: usize,
    block_dim: usize,
}

impl CocoerciveOp for LiftedCocoercive {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        if v.len() != self.blocks * self.block_dim {
            return Err(Error::DimensionMismatch {
                expected: self.blocks * self.block_dim,
                got: v.len(),
                context: "lifted cocoercive input",
            });
        }
        let mut out = Vector::with_capacity(v.len());
        for block in v.chunks(self.block_dim) {
            out.extend(self.inner.eval(block)?);
        }
        Ok(out)
    }

    fn cocoercivity(&self) -> Cocoercivity {
        self.inner.cocoercivity()
    }
}

// ---------------------------------------------------------------------------
// States and steps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MBsfrbState {
    pub z: LiftedPoint,
    pub y: LiftedPoint,
    pub y_prev: LiftedPoint,
    by_prev: LiftedPoint,
    pub n: usize,
}

impl MBsfrbState {
    pub fn new(
        mp: &MOperatorProblem,
        z0: LiftedPoint,
        y0: LiftedPoint,
        y_minus1: LiftedPoint,
    ) -> Result<Self> {
        check_blocks(mp, &z0, "m-bsfrb z0")?;
        check_blocks(mp, &y0, "m-bsfrb y0")?;
        check_blocks(mp, &y_minus1, "m-bsfrb y_minus1")?;
        let by_prev = y_minus1
            .iter()
            .map(|b| mp.b.eval(b))
            .collect::<Result<_>>()?;
        Ok(MBsfrbState {
            z: z0,
            y: y0,
            y_prev: y_minus1,
            by_prev,
            n: 0,
        })
    }

    pub fn zeros(mp: &MOperatorProblem) -> Result<Self> {
        let zero = lift(&space::zeros(mp.dim), mp.m());
        Self::new(mp, zero.clone(), zero.clone(), zero)
    }
}

#[derive(Debug, Clone)]
pub struct MBsrfbState {
    pub z: LiftedPoint,
    pub y: LiftedPoint,
    pub y_prev: LiftedPoint,
    pub n: usize,
}

impl MBsrfbState {
    pub fn new(
        mp: &MOperatorProblem,
        z0: LiftedPoint,
        y0: LiftedPoint,
        y_minus1: LiftedPoint,
    ) -> Result<Self> {
        check_blocks(mp, &z0, "m-bsrfb z0")?;
        check_blocks(mp, &y0, "m-bsrfb y0")?;
        check_blocks(mp, &y_minus1, "m-bsrfb y_minus1")?;
        Ok(MBsrfbState {
            z: z0,
            y: y0,
            y_prev: y_minus1,
            n: 0,
        })
    }

    pub fn zeros(mp: &MOperatorProblem) -> Result<Self> {
        let zero = lift(&space::zeros(mp.dim), mp.m());
        Self::new(mp, zero.clone(), zero.clone(), zero)
    }
}

#[derive(Debug, Clone)]
pub struct MSfrdrState {
    pub x: Vector,
    pub x_prev: Vector,
    pub u: LiftedPoint,
    bx_prev: Vector,
    pub n: usize,
}

impl MSfrdrState {
    pub fn new(
        mp: &MOperatorProblem,
        x0: Vector,
        x_minus1: Vector,
        u0: LiftedPoint,
    ) -> Result<Self> {
        mp.check_block(&x0, "m-sfrdr x0")?;
        mp.check_block(&x_minus1, "m-sfrdr x_minus1")?;
        check_blocks(mp, &u0, "m-sfrdr u0")?;
        let bx_prev = mp.b.eval(&x_minus1)?;
        Ok(MSfrdrState {
            x: x0,
            x_prev: x_minus1,
            u: u0,
            bx_prev,
            n: 0,
        })
    }

    pub fn zeros(mp: &MOperatorProblem) -> Result<Self> {
        let zero = space::zeros(mp.dim);
        Self::new(mp, zero.clone(), zero.clone(), lift(&zero, mp.m()))
    }
}

#[derive(Debug, Clone)]
pub enum MState {
    Bsfrb(MBsfrbState),
    Bsrfb(MBsrfbState),
    Sfrdr(MSfrdrState),
}

impl MState {
    pub fn zeros(mp: &MOperatorProblem, variant: Variant) -> Result<Self> {
        Ok(match variant {
            Variant::Bsfrb => MState::Bsfrb(MBsfrbState::zeros(mp)?),
            Variant::Bsrfb => MState::Bsrfb(MBsrfbState::zeros(mp)?),
            Variant::Sfrdr => MState::Sfrdr(MSfrdrState::zeros(mp)?),
        })
    }

    pub fn variant(&self) -> Variant {
        match self {
            MState::Bsfrb(_) => Variant::Bsfrb,
            MState::Bsrfb(_) => Variant::Bsrfb,
            MState::Sfrdr(_) => Variant::Sfrdr,
        }
    }
}

fn check_blocks(mp: &MOperatorProblem, p: &LiftedPoint, context: &'static str) -> Result<()> {
    if p.len() != mp.m() {
        return Err(Error::DimensionMismatch {
            expected: mp.m(),
            got: p.len(),
            context,
        });
    }
    for b in p {
        mp.check_block(b, context)?;
    }
    Ok(())
}

/// One step of the m-operator backward-semi-forward-reflected-backward
/// method:
///
/// ```text
/// x_{n+1}   = sum_j w_j z_{j,n}
/// y_{i,n+1} = J_{(gamma/w_i) A_i}(2 x_{n+1} - z_{i,n}
///             - gamma (2 B y_{i,n} - B y_{i,n-1}) - gamma C y_{i,n})
/// z_{i,n+1} = z_{i,n} + y_{i,n+1} - x_{n+1}
/// ```
///
/// `B` and `C` are evaluated once per block. Returns `x_{n+1}`.
pub fn step_m_bsfrb(mp: &MOperatorProblem, s: &mut MBsfrbState, gamma: f64) -> Result<Vector> {
    let n = s.n;
    let fail = |e: Error| e.at_iteration(n);
    let d = mp.dim;
    let w = &mp.weights;

    let z_refs: Vec<&[f64]> = s.z.iter().map(|b| b.as_slice()).collect();
    let x1 = weighted_average(w, &z_refs, d);

    let m = mp.m();
    let mut y1 = Vec::with_capacity(m);
    let mut z1 = Vec::with_capacity(m);
    let mut by_new = Vec::with_capacity(m);
    for i in 0..m {
        let by = mp.b.eval(&s.y[i]).map_err(fail)?;
        mp.check_block(&by, "m-bsfrb b output").map_err(fail)?;
        let cy = mp.c.eval(&s.y[i]).map_err(fail)?;
        mp.check_block(&cy, "m-bsfrb c output").map_err(fail)?;

        let mut refl = space::zeros(d);
        for c in 0..d {
            refl[c] = 2.0 * by[c] - s.by_prev[i][c];
        }
        let mut arg = space::zeros(d);
        for c in 0..d {
            arg[c] = 2.0 * x1[c] - s.z[i][c] - gamma * refl[c] - gamma * cy[c];
        }
        let yi = mp.a[i].resolve(gamma / w[i], &arg).map_err(fail)?;
        mp.check_block(&yi, "m-bsfrb resolvent output")
            .map_err(fail)?;

        let mut zi = space::zeros(d);
        for c in 0..d {
            zi[c] = yi[c] + (s.z[i][c] - x1[c]);
        }
        y1.push(yi);
        z1.push(zi);
        by_new.push(by);
    }

    s.z = z1;
    s.y_prev = std::mem::replace(&mut s.y, y1);
    s.by_prev = by_new;
    s.n += 1;
    Ok(x1)
}

/// One step of the m-operator backward-semi-reflected-forward-backward
/// method; `B` is evaluated at the reflected point `2 y_{i,n} - y_{i,n-1}`.
pub fn step_m_bsrfb(mp: &MOperatorProblem, s: &mut MBsrfbState, gamma: f64) -> Result<Vector> {
    let n = s.n;
    let fail = |e: Error| e.at_iteration(n);
    let d = mp.dim;
    let w = &mp.weights;

    let z_refs: Vec<&[f64]> = s.z.iter().map(|b| b.as_slice()).collect();
    let x1 = weighted_average(w, &z_refs, d);

    let m = mp.m();
    let mut y1 = Vec::with_capacity(m);
    let mut z1 = Vec::with_capacity(m);
    for i in 0..m {
        let mut yhat = space::zeros(d);
        for c in 0..d {
            yhat[c] = 2.0 * s.y[i][c] - s.y_prev[i][c];
        }
        let bhat = mp.b.eval(&yhat).map_err(fail)?;
        mp.check_block(&bhat, "m-bsrfb b output").map_err(fail)?;
        let cy = mp.c.eval(&s.y[i]).map_err(fail)?;
        mp.check_block(&cy, "m-bsrfb c output").map_err(fail)?;

        let mut arg = space::zeros(d);
        for c in 0..d {
            arg[c] = 2.0 * x1[c] - s.z[i][c] - gamma * bhat[c] - gamma * cy[c];
        }
        let yi = mp.a[i].resolve(gamma / w[i], &arg).map_err(fail)?;
        mp.check_block(&yi, "m-bsrfb resolvent output")
            .map_err(fail)?;

        let mut zi = space::zeros(d);
        for c in 0..d {
            zi[c] = yi[c] + (s.z[i][c] - x1[c]);
        }
        y1.push(yi);
        z1.push(zi);
    }

    s.z = z1;
    s.y_prev = std::mem::replace(&mut s.y, y1);
    s.n += 1;
    Ok(x1)
}

/// One step of the m-operator semi-forward-reflected-Douglas-Rachford
/// method:
///
/// ```text
/// x_{n+1}   = sum_j w_j (x_n - gamma u_{j,n}
///             - gamma (2 B x_n - B x_{n-1}) - gamma C x_n)
/// y_{i,n+1} = J_{(lambda/w_i) A_i}(2 x_{n+1} - x_n + lambda u_{i,n})
/// u_{i,n+1} = u_{i,n} + (2 x_{n+1} - x_n - y_{i,n+1}) / lambda
/// ```
///
/// `B x_n` and `C x_n` are shared across blocks, so one forward evaluation
/// each per step. Returns `x_{n+1}`.
pub fn step_m_sfrdr(
    mp: &MOperatorProblem,
    s: &mut MSfrdrState,
    gamma: f64,
    lambda: f64,
) -> Result<Vector> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let n = s.n;
    let fail = |e: Error| e.at_iteration(n);
    let d = mp.dim;
    let w = &mp.weights;
    let m = mp.m();

    let bx = mp.b.eval(&s.x).map_err(fail)?;
    mp.check_block(&bx, "m-sfrdr b output").map_err(fail)?;
    let cx = mp.c.eval(&s.x).map_err(fail)?;
    mp.check_block(&cx, "m-sfrdr c output").map_err(fail)?;

    let mut refl = space::zeros(d);
    for c in 0..d {
        refl[c] = 2.0 * bx[c] - s.bx_prev[c];
    }

    let mut pre = Vec::with_capacity(m);
    for i in 0..m {
        let mut pi = space::zeros(d);
        for c in 0..d {
            pi[c] = s.x[c] - gamma * s.u[i][c] - gamma * refl[c] - gamma * cx[c];
        }
        pre.push(pi);
    }
    let pre_refs: Vec<&[f64]> = pre.iter().map(|b| b.as_slice()).collect();
    let x1 = weighted_average(w, &pre_refs, d);

    let mut u1 = Vec::with_capacity(m);
    for i in 0..m {
        let mut yarg = space::zeros(d);
        for c in 0..d {
            yarg[c] = 2.0 * x1[c] - s.x[c] + lambda * s.u[i][c];
        }
        let yi = mp.a[i].resolve(lambda / w[i], &yarg).map_err(fail)?;
        mp.check_block(&yi, "m-sfrdr resolvent output")
            .map_err(fail)?;

        let mut ui = space::zeros(d);
        for c in 0..d {
            ui[c] = s.u[i][c] + (2.0 * x1[c] - s.x[c] - yi[c]) / lambda;
        }
        u1.push(ui);
    }

    s.x_prev = std::mem::replace(&mut s.x, x1.clone());
    s.u = u1;
    s.bx_prev = bx;
    s.n += 1;
    Ok(x1)
}

/// The per-block resolvent evaluation a further step would perform from the
/// current state: `(argument, output, parameter)` triples. At a converged
/// state the identity `(arg - out) / param in A_i(out)` recovers the
/// per-block operator values, which the benchmark uses to read off the
/// Minkowski decomposition.
pub struct BlockResolventPoint {
    pub arg: Vector,
    pub output: Vector,
    pub param: f64,
}

pub fn bsfrb_block_points(
    mp: &MOperatorProblem,
    s: &MBsfrbState,
    gamma: f64,
) -> Result<Vec<BlockResolventPoint>> {
    let d = mp.dim;
    let w = &mp.weights;
    let z_refs: Vec<&[f64]> = s.z.iter().map(|b| b.as_slice()).collect();
    let x1 = weighted_average(w, &z_refs, d);
    let mut points = Vec::with_capacity(mp.m());
    for i in 0..mp.m() {
        let by = mp.b.eval(&s.y[i])?;
        let cy = mp.c.eval(&s.y[i])?;
        let mut arg = space::zeros(d);
        for c in 0..d {
            let refl = 2.0 * by[c] - s.by_prev[i][c];
            arg[c] = 2.0 * x1[c] - s.z[i][c] - gamma * refl - gamma * cy[c];
        }
        let param = gamma / w[i];
        let output = mp.a[i].resolve(param, &arg)?;
        points.push(BlockResolventPoint { arg, output, param });
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Iteration driver
// ---------------------------------------------------------------------------

fn weighted_block_dist(w: &Weights, a: &LiftedPoint, b: &LiftedPoint) -> f64 {
    let mut acc = 0.0;
    for i in 0..w.len() {
        acc += w[i] * space::dist_sq(&a[i], &b[i]);
    }
    acc.max(0.0).sqrt()
}

/// Runs one of the three m-operator algorithms. Mirrors
/// [`crate::splitting::run_four`]: same stopping rules, residuals in the
/// weighted product metric, same divergence guard.
///
/// Energy diagnostics are evaluated on the lifted four-operator form and are
/// supported for uniform weights only, where the weighted and plain product
/// metrics agree up to the constant factor `1/m`.
pub fn run_m(
    mp: &MOperatorProblem,
    rule: &StepsizeRule,
    init: MState,
    opts: &RunOptions,
) -> Result<RunTrace> {
    Ok(run_m_with_state(mp, rule, init, opts)?.0)
}

pub fn run_m_with_state(
    mp: &MOperatorProblem,
    rule: &StepsizeRule,
    init: MState,
    opts: &RunOptions,
) -> Result<(RunTrace, MState)> {
    if opts.max_iter < 1 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    if init.variant() != rule.variant {
        return Err(Error::InvalidParameter(format!(
            "state is for {}, rule is for {}",
            init.variant().name(),
            rule.variant.name()
        )));
    }
    let mut warnings = Vec::new();
    if let Some(w) = rule.validate(mp.cocoercivity(), mp.lipschitz())? {
        warnings.push(w);
    }
    let track_v = opts.lyapunov.is_some();
    if track_v {
        let uniform = Weights::uniform(mp.m());
        if mp.weights != uniform {
            return Err(Error::InvalidParameter(
                "energy diagnostics on m-operator runs require uniform weights".into(),
            ));
        }
    }
    match (&opts.lyapunov, rule.variant) {
        (Some(Anchor::Dr(_)), Variant::Bsfrb | Variant::Bsrfb)
        | (Some(Anchor::Saddle(_)), Variant::Sfrdr)
        | (None, _) => {}
        _ => {
            return Err(Error::InvalidParameter(
                "anchor kind does not match the algorithm".into(),
            ))
        }
    }

    let gamma = rule.gamma;
    let lambda = rule.lambda;
    let start = Instant::now();
    let mut records: Vec<IterationRecord> = Vec::with_capacity(64);
    let lifted = track_v.then(|| match rule.variant {
        Variant::Bsfrb | Variant::Bsrfb => mp.lifted_dr_problem(),
        Variant::Sfrdr => mp.lifted_saddle_problem(),
    });

    let mut z_hist: Vec<Vector> = Vec::new();
    let mut y_hist: Vec<Vector> = Vec::new();
    let mut u_hist: Vec<Vector> = Vec::new();

    let mut state = init;

    let initial_iterate = match &state {
        MState::Bsfrb(s) => {
            let refs: Vec<&[f64]> = s.z.iter().map(|b| b.as_slice()).collect();
            weighted_average(&mp.weights, &refs, mp.dim)
        }
        MState::Bsrfb(s) => {
            let refs: Vec<&[f64]> = s.z.iter().map(|b| b.as_slice()).collect();
            weighted_average(&mp.weights, &refs, mp.dim)
        }
        MState::Sfrdr(s) => s.x.clone(),
    };
    if track_v {
        match &state {
            MState::Bsfrb(s) => {
                z_hist.push(concat_blocks(&s.z));
                y_hist.push(concat_blocks(&s.y));
            }
            MState::Bsrfb(s) => {
                z_hist.push(concat_blocks(&s.z));
                y_hist.push(concat_blocks(&s.y));
            }
            MState::Sfrdr(s) => {
                z_hist.push(concat_blocks(&lift(&s.x, mp.m())));
                u_hist.push(concat_blocks(&s.u));
            }
        }
    }

    let lyap_at = |k: usize,
                   z_hist: &[Vector],
                   y_hist: &[Vector],
                   u_hist: &[Vector]|
     -> Result<Option<f64>> {
        let (Some(anchor), Some(lp)) = (&opts.lyapunov, &lifted) else {
            return Ok(None);
        };
        let v = match (anchor, rule.variant) {
            (Anchor::Dr(a), Variant::Bsfrb) => lyapunov_bsfrb(
                lp,
                gamma,
                a,
                &BsfrbWindow {
                    z_n: &z_hist[k],
                    z_nm1: &z_hist[k.saturating_sub(1)],
                    z_nm2: &z_hist[k.saturating_sub(2)],
                    y_n: &y_hist[k],
                    y_nm1: &y_hist[k.saturating_sub(1)],
                },
            )?,
            (Anchor::Dr(a), Variant::Bsrfb) => lyapunov_bsrfb(
                lp,
                gamma,
                a,
                &BsrfbWindow {
                    z_n: &z_hist[k],
                    z_nm1: &z_hist[k.saturating_sub(1)],
                    z_nm2: &z_hist[k.saturating_sub(2)],
                    z_nm3: &z_hist[k.saturating_sub(3)],
                    y_n: &y_hist[k],
                    y_nm1: &y_hist[k.saturating_sub(1)],
                    y_nm2: &y_hist[k.saturating_sub(2)],
                },
            )?,
            (Anchor::Saddle(a), Variant::Sfrdr) => lyapunov_sfrdr(
                lp,
                gamma,
                lambda.expect("validated above"),
                a,
                &SfrdrWindow {
                    x_n: &z_hist[k],
                    x_nm1: &z_hist[k.saturating_sub(1)],
                    u_n: &u_hist[k],
                    u_nm1: &u_hist[k.saturating_sub(1)],
                },
            )?,
            _ => unreachable!("anchor kind checked above"),
        };
        Ok(Some(v))
    };

    let dist_of = |x: &Vector| match &opts.stop {
        StoppingRule::KnownSolution { target, .. } => Some(prefix_dist(x, target)),
        StoppingRule::FixedPoint { .. } => None,
    };
    match &opts.stop {
        StoppingRule::KnownSolution { target, .. } => {
            if target.is_empty() || target.len() > mp.dim {
                return Err(Error::DimensionMismatch {
                    expected: mp.dim,
                    got: target.len(),
                    context: "known-solution target",
                });
            }
        }
        StoppingRule::FixedPoint { .. } => {}
    }

    records.push(IterationRecord {
        n: 0,
        iterate: initial_iterate.clone(),
        residual: f64::INFINITY,
        dist_to_solution: dist_of(&initial_iterate),
        lyapunov: lyap_at(0, &z_hist, &y_hist, &u_hist)?,
    });

    let mut termination = Termination::MaxIter;
    let mut iterations = 0;

    for k in 1..=opts.max_iter {
        let (monitored, residual, guard_norm) = match &mut state {
            MState::Bsfrb(s) => {
                let z_prev = s.z.clone();
                let x1 = step_m_bsfrb(mp, s, gamma)?;
                let r = weighted_block_dist(&mp.weights, &s.z, &z_prev);
                let g = s.z.iter().map(|b| space::norm_sq(b)).sum::<f64>().sqrt();
                let finite = s.z.iter().all(|b| space::all_finite(b));
                (x1, r, if finite { g } else { f64::NAN })
            }
            MState::Bsrfb(s) => {
                let z_prev = s.z.clone();
                let x1 = step_m_bsrfb(mp, s, gamma)?;
                let r = weighted_block_dist(&mp.weights, &s.z, &z_prev);
                let g = s.z.iter().map(|b| space::norm_sq(b)).sum::<f64>().sqrt();
                let finite = s.z.iter().all(|b| space::all_finite(b));
                (x1, r, if finite { g } else { f64::NAN })
            }
            MState::Sfrdr(s) => {
                let lm = lambda.expect("validated above");
                let x_prev = s.x.clone();
                let u_prev = s.u.clone();
                let x1 = step_m_sfrdr(mp, s, gamma, lm)?;
                let dx = space::sub(&s.x, &x_prev);
                let mut acc = 0.0;
                for i in 0..mp.m() {
                    let du = space::sub(&s.u[i], &u_prev[i]);
                    acc += mp.weights[i] * k_quad_form(&dx, &du, gamma, lm);
                }
                let r = acc.max(0.0).sqrt();
                let g = (space::norm_sq(&s.x)
                    + s.u.iter().map(|b| space::norm_sq(b)).sum::<f64>())
                .sqrt();
                let finite =
                    space::all_finite(&s.x) && s.u.iter().all(|b| space::all_finite(b));
                (x1, r, if finite { g } else { f64::NAN })
            }
        };
        iterations = k;

        if track_v {
            match &state {
                MState::Bsfrb(s) => {
                    z_hist.push(concat_blocks(&s.z));
                    y_hist.push(concat_blocks(&s.y));
                }
                MState::Bsrfb(s) => {
                    z_hist.push(concat_blocks(&s.z));
                    y_hist.push(concat_blocks(&s.y));
                }
                MState::Sfrdr(s) => {
                    z_hist.push(concat_blocks(&lift(&s.x, mp.m())));
                    u_hist.push(concat_blocks(&s.u));
                }
            }
        }

        if !guard_norm.is_finite() || guard_norm > DIVERGENCE_NORM {
            records.push(IterationRecord {
                n: k,
                iterate: monitored,
                residual: if residual.is_finite() {
                    residual
                } else {
                    f64::INFINITY
                },
                dist_to_solution: None,
                lyapunov: None,
            });
            termination = Termination::Diverged;
            break;
        }

        let dist = dist_of(&monitored);
        let lyap = lyap_at(k, &z_hist, &y_hist, &u_hist)?;
        records.push(IterationRecord {
            n: k,
            iterate: monitored,
            residual,
            dist_to_solution: dist,
            lyapunov: lyap,
        });

        let fired = match &opts.stop {
            StoppingRule::KnownSolution { epsilon, .. } => {
                dist.expect("known-solution rule records distances") <= *epsilon
            }
            StoppingRule::FixedPoint { epsilon } => residual <= *epsilon,
        };
        if fired {
            termination = Termination::Converged;
            break;
        }
    }

    let trace = RunTrace {
        records,
        termination,
        iterations,
        wall_time: start.elapsed(),
        warnings,
    };
    Ok((trace, state))
}
