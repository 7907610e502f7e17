//! The three four-operator splitting algorithms for
//! `0 in A1 x + A2 x + B x + C x`, with `A1`, `A2` maximally monotone
//! (resolvent oracles), `B` monotone `L`-Lipschitz, and `C` beta-cocoercive.
//!
//! Each step makes exactly one resolvent call per backward operator, one
//! fresh forward evaluation of `B` (the second value a reflected step needs
//! is cached from the previous iteration), and one evaluation of `C`.
//!
//! The update expressions below are written coordinate-wise in a fixed
//! evaluation order. Several equivalence tests in this crate assert bitwise
//! equality of trajectories (algorithm reductions, the product-space
//! identities), which holds only if these expressions keep their exact
//! shape; see `lifting` for the mirrored block-wise forms.

pub mod lyapunov;
pub mod run;
pub mod stepsize;

pub use lyapunov::{Anchor, DrAnchor, SaddleAnchor};
pub use run::{
    prefix_dist, run_four, run_four_with_state, IterationRecord, RunOptions, RunTrace,
    StoppingRule, Termination, DIVERGENCE_NORM,
};
pub use stepsize::{max_gamma, StepsizeMode, StepsizeRule, Variant};

use crate::error::{Error, Result};
use crate::operators::{ArcCocoercive, ArcForward, ArcResolvent, Cocoercivity, Lipschitz};
use crate::space::{self, Vector};

/// A four-operator inclusion instance: two resolvent oracles, one monotone
/// Lipschitz forward operator, one cocoercive operator, all on `R^dim`.
pub struct FourOperatorProblem {
    pub a1: ArcResolvent,
    pub a2: ArcResolvent,
    pub b: ArcForward,
    pub c: ArcCocoercive,
    pub dim: usize,
}

impl FourOperatorProblem {
    pub fn new(
        a1: ArcResolvent,
        a2: ArcResolvent,
        b: ArcForward,
        c: ArcCocoercive,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if let Lipschitz::Const(l) = b.lipschitz() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "declared Lipschitz constant must be positive and finite, got {l}; use the zero flag for B = 0"
                )));
            }
        }
        if let Cocoercivity::Beta(beta) = c.cocoercivity() {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "declared cocoercivity constant must be positive and finite, got {beta}; use the zero flag for C = 0"
                )));
            }
        }
        Ok(FourOperatorProblem { a1, a2, b, c, dim })
    }

    pub fn lipschitz(&self) -> Lipschitz {
        self.b.lipschitz()
    }

    pub fn cocoercivity(&self) -> Cocoercivity {
        self.c.cocoercivity()
    }

    fn check_dim(&self, v: &[f64], context: &'static str) -> Result<()> {
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

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// State of the backward-semi-forward-reflected-backward iteration: the
/// governing sequence `z_n` plus `y_n`, `y_{n-1}` and the cached forward
/// value `B y_{n-1}`.
#[derive(Debug, Clone)]
pub struct BsfrbState {
    pub z: Vector,
    pub y: Vector,
    pub y_prev: Vector,
    by_prev: Vector,
    pub n: usize,
}

impl BsfrbState {
    pub fn new(p: &FourOperatorProblem, z0: Vector, y0: Vector, y_minus1: Vector) -> Result<Self> {
        p.check_dim(&z0, "bsfrb z0")?;
        p.check_dim(&y0, "bsfrb y0")?;
        p.check_dim(&y_minus1, "bsfrb y_minus1")?;
        let by_prev = p.b.eval(&y_minus1)?;
        Ok(BsfrbState {
            z: z0,
            y: y0,
            y_prev: y_minus1,
            by_prev,
            n: 0,
        })
    }

    pub fn zeros(p: &FourOperatorProblem) -> Result<Self> {
        let zero = space::zeros(p.dim);
        Self::new(p, zero.clone(), zero.clone(), zero)
    }
}

/// State of the backward-semi-reflected-forward-backward iteration. The
/// forward operator is evaluated at the reflected point `2 y_n - y_{n-1}`,
/// so no cache is carried.
#[derive(Debug, Clone)]
pub struct BsrfbState {
    pub z: Vector,
    pub y: Vector,
    pub y_prev: Vector,
    pub n: usize,
}

impl BsrfbState {
    pub fn new(p: &FourOperatorProblem, z0: Vector, y0: Vector, y_minus1: Vector) -> Result<Self> {
        p.check_dim(&z0, "bsrfb z0")?;
        p.check_dim(&y0, "bsrfb y0")?;
        p.check_dim(&y_minus1, "bsrfb y_minus1")?;
        Ok(BsrfbState {
            z: z0,
            y: y0,
            y_prev: y_minus1,
            n: 0,
        })
    }

    pub fn zeros(p: &FourOperatorProblem) -> Result<Self> {
        let zero = space::zeros(p.dim);
        Self::new(p, zero.clone(), zero.clone(), zero)
    }
}

/// State of the semi-forward-reflected-Douglas-Rachford iteration: the primal
/// pair `(x_n, u_n)`, the previous primal `x_{n-1}`, and the cached value
/// `B x_{n-1}`.
#[derive(Debug, Clone)]
pub struct SfrdrState {
    pub x: Vector,
    pub x_prev: Vector,
    pub u: Vector,
    bx_prev: Vector,
    pub n: usize,
}

impl SfrdrState {
    pub fn new(p: &FourOperatorProblem, x0: Vector, x_minus1: Vector, u0: Vector) -> Result<Self> {
        p.check_dim(&x0, "sfrdr x0")?;
        p.check_dim(&x_minus1, "sfrdr x_minus1")?;
        p.check_dim(&u0, "sfrdr u0")?;
        let bx_prev = p.b.eval(&x_minus1)?;
        Ok(SfrdrState {
            x: x0,
            x_prev: x_minus1,
            u: u0,
            bx_prev,
            n: 0,
        })
    }

    pub fn zeros(p: &FourOperatorProblem) -> Result<Self> {
        let zero = space::zeros(p.dim);
        Self::new(p, zero.clone(), zero.clone(), zero)
    }
}

/// State of any of the three algorithms, for the shared iteration driver.
#[derive(Debug, Clone)]
pub enum FourState {
    Bsfrb(BsfrbState),
    Bsrfb(BsrfbState),
    Sfrdr(SfrdrState),
}

impl FourState {
    pub fn zeros(p: &FourOperatorProblem, variant: Variant) -> Result<Self> {
        Ok(match variant {
            Variant::Bsfrb => FourState::Bsfrb(BsfrbState::zeros(p)?),
            Variant::Bsrfb => FourState::Bsrfb(BsrfbState::zeros(p)?),
            Variant::Sfrdr => FourState::Sfrdr(SfrdrState::zeros(p)?),
        })
    }

    pub fn variant(&self) -> Variant {
        match self {
            FourState::Bsfrb(_) => Variant::Bsfrb,
            FourState::Bsrfb(_) => Variant::Bsrfb,
            FourState::Sfrdr(_) => Variant::Sfrdr,
        }
    }
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

/// One backward-semi-forward-reflected-backward step:
///
/// ```text
/// x_{n+1} = J_{gamma A1} z_n
/// y_{n+1} = J_{gamma A2}(2 x_{n+1} - z_n - gamma (2 B y_n - B y_{n-1}) - gamma C y_n)
/// z_{n+1} = z_n + y_{n+1} - x_{n+1}
/// ```
///
/// Returns `x_{n+1}`, the iterate the stopping rules monitor.
pub fn step_bsfrb(p: &FourOperatorProblem, s: &mut BsfrbState, gamma: f64) -> Result<Vector> {
    let n = s.n;
    let fail = |e: Error| e.at_iteration(n);

    let x1 = p.a1.resolve(gamma, &s.z).map_err(fail)?;
    p.check_dim(&x1, "bsfrb a1 output").map_err(fail)?;
    let by = p.b.eval(&s.y).map_err(fail)?;
    p.check_dim(&by, "bsfrb b output").map_err(fail)?;
    let cy = p.c.eval(&s.y).map_err(fail)?;
    p.check_dim(&cy, "bsfrb c output").map_err(fail)?;

    let d = p.dim;
    let mut refl = space::zeros(d);
    for i in 0..d {
        refl[i] = 2.0 * by[i] - s.by_prev[i];
    }
    let mut arg = space::zeros(d);
    for i in 0..d {
        arg[i] = 2.0 * x1[i] - s.z[i] - gamma * refl[i] - gamma * cy[i];
    }
    let y1 = p.a2.resolve(gamma, &arg).map_err(fail)?;
    p.check_dim(&y1, "bsfrb a2 output").map_err(fail)?;

    let mut z1 = space::zeros(d);
    for i in 0..d {
        z1[i] = y1[i] + (s.z[i] - x1[i]);
    }

    s.z = z1;
    s.y_prev = std::mem::replace(&mut s.y, y1);
    s.by_prev = by;
    s.n += 1;
    Ok(x1)
}

/// One backward-semi-reflected-forward-backward step:
///
/// ```text
/// x_{n+1} = J_{gamma A1} z_n
/// y_{n+1} = J_{gamma A2}(2 x_{n+1} - z_n - gamma B(2 y_n - y_{n-1}) - gamma C y_n)
/// z_{n+1} = z_n + y_{n+1} - x_{n+1}
/// ```
pub fn step_bsrfb(p: &FourOperatorProblem, s: &mut BsrfbState, gamma: f64) -> Result<Vector> {
    let n = s.n;
    let fail = |e: Error| e.at_iteration(n);

    let x1 = p.a1.resolve(gamma, &s.z).map_err(fail)?;
    p.check_dim(&x1, "bsrfb a1 output").map_err(fail)?;

    let d = p.dim;
    let mut yhat = space::zeros(d);
    for i in 0..d {
        yhat[i] = 2.0 * s.y[i] - s.y_prev[i];
    }
    let bhat = p.b.eval(&yhat).map_err(fail)?;
    p.check_dim(&bhat, "bsrfb b output").map_err(fail)?;
    let cy = p.c.eval(&s.y).map_err(fail)?;
    p.check_dim(&cy, "bsrfb c output").map_err(fail)?;

    let mut arg = space::zeros(d);
    for i in 0..d {
        arg[i] = 2.0 * x1[i] - s.z[i] - gamma * bhat[i] - gamma * cy[i];
    }
    let y1 = p.a2.resolve(gamma, &arg).map_err(fail)?;
    p.check_dim(&y1, "bsrfb a2 output").map_err(fail)?;

    let mut z1 = space::zeros(d);
    for i in 0..d {
        z1[i] = y1[i] + (s.z[i] - x1[i]);
    }

    s.z = z1;
    s.y_prev = std::mem::replace(&mut s.y, y1);
    s.n += 1;
    Ok(x1)
}

/// One semi-forward-reflected-Douglas-Rachford step:
///
/// ```text
/// x_{n+1} = J_{gamma A2}(x_n - gamma u_n - gamma (2 B x_n - B x_{n-1}) - gamma C x_n)
/// y_{n+1} = J_{lambda A1}(2 x_{n+1} - x_n + lambda u_n)
/// u_{n+1} = u_n + (2 x_{n+1} - x_n - y_{n+1}) / lambda
/// ```
///
/// Returns `y_{n+1}`; the monitored iterate `x_{n+1}` stays in the state.
pub fn step_sfrdr(
    p: &FourOperatorProblem,
    s: &mut SfrdrState,
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

    let bx = p.b.eval(&s.x).map_err(fail)?;
    p.check_dim(&bx, "sfrdr b output").map_err(fail)?;
    let cx = p.c.eval(&s.x).map_err(fail)?;
    p.check_dim(&cx, "sfrdr c output").map_err(fail)?;

    let d = p.dim;
    let mut refl = space::zeros(d);
    for i in 0..d {
        refl[i] = 2.0 * bx[i] - s.bx_prev[i];
    }
    let mut xarg = space::zeros(d);
    for i in 0..d {
        xarg[i] = s.x[i] - gamma * s.u[i] - gamma * refl[i] - gamma * cx[i];
    }
    let x1 = p.a2.resolve(gamma, &xarg).map_err(fail)?;
    p.check_dim(&x1, "sfrdr a2 output").map_err(fail)?;

    let mut yarg = space::zeros(d);
    for i in 0..d {
        yarg[i] = 2.0 * x1[i] - s.x[i] + lambda * s.u[i];
    }
    let y1 = p.a1.resolve(lambda, &yarg).map_err(fail)?;
    p.check_dim(&y1, "sfrdr a1 output").map_err(fail)?;

    let mut u1 = space::zeros(d);
    for i in 0..d {
        u1[i] = s.u[i] + (2.0 * x1[i] - s.x[i] - y1[i]) / lambda;
    }

    s.x_prev = std::mem::replace(&mut s.x, x1);
    s.u = u1;
    s.bx_prev = bx;
    s.n += 1;
    Ok(y1)
}
