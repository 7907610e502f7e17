//! Shared helpers for the integration suites: counting operator wrappers,
//! reference implementations of the reduced (three-operator) algorithms,
//! bitwise trajectory comparison, and seeded synthetic instance generation.
#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use monosplit::error::Result;
use monosplit::operators::{
    ArcCocoercive, ArcForward, ArcResolvent, Cocoercivity, CocoerciveOp, ConvexSet, ForwardOp,
    Lipschitz, ResolventOp,
};
use monosplit::problems::{MinkowskiSpec, SyntheticSpec};
use monosplit::space::Vector;

// ---------------------------------------------------------------------------
// Counting wrappers
// ---------------------------------------------------------------------------

pub struct CountingResolvent {
    inner: ArcResolvent,
    pub calls: Arc<AtomicUsize>,
}

impl CountingResolvent {
    pub fn wrap(inner: ArcResolvent) -> (ArcResolvent, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (
            Arc::new(CountingResolvent {
                inner,
                calls: calls.clone(),
            }),
            calls,
        )
    }
}

impl ResolventOp for CountingResolvent {
    fn resolve(&self, gamma: f64, v: &[f64]) -> Result<Vector> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.resolve(gamma, v)
    }
}

pub struct CountingForward {
    inner: ArcForward,
    pub calls: Arc<AtomicUsize>,
}

impl CountingForward {
    pub fn wrap(inner: ArcForward) -> (ArcForward, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (
            Arc::new(CountingForward {
                inner,
                calls: calls.clone(),
            }),
            calls,
        )
    }
}

impl ForwardOp for CountingForward {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(v)
    }

    fn lipschitz(&self) -> Lipschitz {
        self.inner.lipschitz()
    }
}

pub struct CountingCocoercive {
    inner: ArcCocoercive,
    pub calls: Arc<AtomicUsize>,
}

impl CountingCocoercive {
    pub fn wrap(inner: ArcCocoercive) -> (ArcCocoercive, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (
            Arc::new(CountingCocoercive {
                inner,
                calls: calls.clone(),
            }),
            calls,
        )
    }
}

impl CocoerciveOp for CountingCocoercive {
    fn eval(&self, v: &[f64]) -> Result<Vector> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(v)
    }

    fn cocoercivity(&self) -> Cocoercivity {
        self.inner.cocoercivity()
    }
}

// ---------------------------------------------------------------------------
// Bitwise comparison
// ---------------------------------------------------------------------------

pub fn assert_bits_eq(a: &[f64], b: &[f64], context: &str) {
    assert_eq!(a.len(), b.len(), "{context}: length mismatch");
    for i in 0..a.len() {
        assert_eq!(
            a[i].to_bits(),
            b[i].to_bits(),
            "{context}: coordinate {i} differs: {} vs {}",
            a[i],
            b[i]
        );
    }
}

// ---------------------------------------------------------------------------
// Reference implementations of the reduced algorithms
// ---------------------------------------------------------------------------
//
// These are independent transcriptions of the three-operator methods the
// four-operator algorithms collapse to when one operator vanishes. They share
// the update-expression shapes of the production steps so that trajectory
// comparison can be exact.

/// Semi-forward-reflected-backward iteration (single backward operator,
/// reflected forward term evaluated as `2 B w_n - B w_{n-1}`, cocoercive
/// term):
/// `w_{n+1} = J_{gamma A2}(w_n - gamma (2 B w_n - B w_{n-1}) - gamma C w_n)`.
pub struct SfrbRef {
    pub w: Vector,
    bw_prev: Vector,
}

impl SfrbRef {
    pub fn new(b: &dyn ForwardOp, w0: Vector, w_minus1: &[f64]) -> Self {
        let bw_prev = b.eval(w_minus1).unwrap();
        SfrbRef { w: w0, bw_prev }
    }

    pub fn step(&mut self, a2: &dyn ResolventOp, b: &dyn ForwardOp, c: &dyn CocoerciveOp, gamma: f64) {
        let d = self.w.len();
        let bw = b.eval(&self.w).unwrap();
        let cw = c.eval(&self.w).unwrap();
        let mut refl = vec![0.0; d];
        for i in 0..d {
            refl[i] = 2.0 * bw[i] - self.bw_prev[i];
        }
        let mut arg = vec![0.0; d];
        for i in 0..d {
            arg[i] = self.w[i] - gamma * refl[i] - gamma * cw[i];
        }
        self.w = a2.resolve(gamma, &arg).unwrap();
        self.bw_prev = bw;
    }
}

/// Backward-forward-reflected-backward iteration (two backward operators and
/// a reflected forward term, no cocoercive part):
///
/// ```text
/// x_{n+1} = J_{gamma A1} z_n
/// y_{n+1} = J_{gamma A2}(2 x_{n+1} - z_n - gamma (2 B y_n - B y_{n-1}))
/// z_{n+1} = z_n + y_{n+1} - x_{n+1}
/// ```
pub struct BfrbRef {
    pub z: Vector,
    pub y: Vector,
    by_prev: Vector,
}

impl BfrbRef {
    pub fn new(b: &dyn ForwardOp, z0: Vector, y0: Vector, y_minus1: &[f64]) -> Self {
        let by_prev = b.eval(y_minus1).unwrap();
        BfrbRef { z: z0, y: y0, by_prev }
    }

    pub fn step(&mut self, a1: &dyn ResolventOp, a2: &dyn ResolventOp, b: &dyn ForwardOp, gamma: f64) {
        let d = self.z.len();
        let x1 = a1.resolve(gamma, &self.z).unwrap();
        let by = b.eval(&self.y).unwrap();
        let mut refl = vec![0.0; d];
        for i in 0..d {
            refl[i] = 2.0 * by[i] - self.by_prev[i];
        }
        let mut arg = vec![0.0; d];
        for i in 0..d {
            arg[i] = 2.0 * x1[i] - self.z[i] - gamma * refl[i];
        }
        let y1 = a2.resolve(gamma, &arg).unwrap();
        let mut z1 = vec![0.0; d];
        for i in 0..d {
            z1[i] = y1[i] + (self.z[i] - x1[i]);
        }
        self.z = z1;
        self.y = y1;
        self.by_prev = by;
    }
}

/// Semi-reflected-forward-backward iteration (single backward operator, the
/// forward operator evaluated at the reflected point):
/// `w_{n+1} = J_{gamma A2}(w_n - gamma B(2 w_n - w_{n-1}) - gamma C w_n)`.
pub struct SrfbRef {
    pub w: Vector,
    pub w_prev: Vector,
}

impl SrfbRef {
    pub fn step(&mut self, a2: &dyn ResolventOp, b: &dyn ForwardOp, c: &dyn CocoerciveOp, gamma: f64) {
        let d = self.w.len();
        let mut what = vec![0.0; d];
        for i in 0..d {
            what[i] = 2.0 * self.w[i] - self.w_prev[i];
        }
        let bhat = b.eval(&what).unwrap();
        let cw = c.eval(&self.w).unwrap();
        let mut arg = vec![0.0; d];
        for i in 0..d {
            arg[i] = self.w[i] - gamma * bhat[i] - gamma * cw[i];
        }
        let w1 = a2.resolve(gamma, &arg).unwrap();
        self.w_prev = std::mem::replace(&mut self.w, w1);
    }
}

/// Backward-reflected-forward-backward iteration (no cocoercive part):
///
/// ```text
/// x_{n+1} = J_{gamma A1} z_n
/// y_{n+1} = J_{gamma A2}(2 x_{n+1} - z_n - gamma B(2 y_n - y_{n-1}))
/// z_{n+1} = z_n + y_{n+1} - x_{n+1}
/// ```
pub struct BrfbRef {
    pub z: Vector,
    pub y: Vector,
    pub y_prev: Vector,
}

impl BrfbRef {
    pub fn step(&mut self, a1: &dyn ResolventOp, a2: &dyn ResolventOp, b: &dyn ForwardOp, gamma: f64) {
        let d = self.z.len();
        let x1 = a1.resolve(gamma, &self.z).unwrap();
        let mut yhat = vec![0.0; d];
        for i in 0..d {
            yhat[i] = 2.0 * self.y[i] - self.y_prev[i];
        }
        let bhat = b.eval(&yhat).unwrap();
        let mut arg = vec![0.0; d];
        for i in 0..d {
            arg[i] = 2.0 * x1[i] - self.z[i] - gamma * bhat[i];
        }
        let y1 = a2.resolve(gamma, &arg).unwrap();
        let mut z1 = vec![0.0; d];
        for i in 0..d {
            z1[i] = y1[i] + (self.z[i] - x1[i]);
        }
        self.z = z1;
        self.y_prev = std::mem::replace(&mut self.y, y1);
    }
}

/// Forward-reflected-Douglas-Rachford iteration (no cocoercive part):
///
/// ```text
/// x_{n+1} = J_{gamma A2}(x_n - gamma u_n - gamma (2 B x_n - B x_{n-1}))
/// y_{n+1} = J_{lambda A1}(2 x_{n+1} - x_n + lambda u_n)
/// u_{n+1} = u_n + (2 x_{n+1} - x_n - y_{n+1}) / lambda
/// ```
pub struct FrdrRef {
    pub x: Vector,
    pub u: Vector,
    bx_prev: Vector,
}

impl FrdrRef {
    pub fn new(b: &dyn ForwardOp, x0: Vector, x_minus1: &[f64], u0: Vector) -> Self {
        let bx_prev = b.eval(x_minus1).unwrap();
        FrdrRef { x: x0, u: u0, bx_prev }
    }

    pub fn step(
        &mut self,
        a1: &dyn ResolventOp,
        a2: &dyn ResolventOp,
        b: &dyn ForwardOp,
        gamma: f64,
        lambda: f64,
    ) {
        let d = self.x.len();
        let bx = b.eval(&self.x).unwrap();
        let mut refl = vec![0.0; d];
        for i in 0..d {
            refl[i] = 2.0 * bx[i] - self.bx_prev[i];
        }
        let mut xarg = vec![0.0; d];
        for i in 0..d {
            xarg[i] = self.x[i] - gamma * self.u[i] - gamma * refl[i];
        }
        let x1 = a2.resolve(gamma, &xarg).unwrap();
        let mut yarg = vec![0.0; d];
        for i in 0..d {
            yarg[i] = 2.0 * x1[i] - self.x[i] + lambda * self.u[i];
        }
        let y1 = a1.resolve(lambda, &yarg).unwrap();
        let mut u1 = vec![0.0; d];
        for i in 0..d {
            u1[i] = self.u[i] + (2.0 * x1[i] - self.x[i] - y1[i]) / lambda;
        }
        self.x = x1;
        self.u = u1;
        self.bx_prev = bx;
    }
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

/// The benchmark's three target points and their exact projections.
pub fn benchmark_cases() -> Vec<(Vector, Vector)> {
    vec![
        (vec![6.0, -4.0], vec![2.8, -1.6]),
        (vec![1.0, -4.0], vec![1.0, -2.0]),
        (vec![2.0, 7.0], vec![2.0, 2.0]),
    ]
}

pub fn benchmark_spec(f: Vector) -> MinkowskiSpec {
    MinkowskiSpec::benchmark(f).unwrap()
}

/// Deterministic generator of synthetic instances. Both sets are built to
/// contain a shared interior ball, so the inclusion has a solution that
/// coincides with the variational-inequality solution the oracle computes.
pub struct SyntheticGen {
    rng: ChaCha8Rng,
}

impl SyntheticGen {
    pub fn new(seed: u64) -> Self {
        SyntheticGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn set_around(&mut self, anchor: &[f64], margin: f64) -> ConvexSet {
        let dim = anchor.len();
        if self.rng.random_bool(0.5) {
            let mut lo = vec![0.0; dim];
            let mut hi = vec![0.0; dim];
            for i in 0..dim {
                lo[i] = anchor[i] - margin - self.rng.random_range(0.0..1.5);
                hi[i] = anchor[i] + margin + self.rng.random_range(0.0..1.5);
            }
            ConvexSet::rect(lo, hi).unwrap()
        } else {
            let shift: Vector = (0..dim)
                .map(|_| self.rng.random_range(-0.3..0.3))
                .collect();
            let center: Vector = anchor.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let shift_norm = shift.iter().map(|s| s * s).sum::<f64>().sqrt();
            let radius = shift_norm + margin + self.rng.random_range(0.2..1.5);
            ConvexSet::ball(center, radius).unwrap()
        }
    }

    pub fn next_spec(&mut self) -> SyntheticSpec {
        let dim = self.rng.random_range(1..=8usize);
        let anchor: Vector = (0..dim)
            .map(|_| self.rng.random_range(-0.5..0.5))
            .collect();
        let set1 = self.set_around(&anchor, 0.15);
        let set2 = if self.rng.random_bool(0.7) {
            Some(self.set_around(&anchor, 0.15))
        } else {
            None
        };
        let skew = dim % 2 == 0 && self.rng.random_bool(0.5);
        let f: Vector = (0..dim)
            .map(|_| self.rng.random_range(-3.0..3.0))
            .collect();
        SyntheticSpec {
            dim,
            set1,
            set2,
            skew,
            f,
        }
    }
}
