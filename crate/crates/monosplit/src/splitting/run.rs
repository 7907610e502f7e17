//! Iteration driver: stopping rules, per-iteration trace records, divergence
//! guard, and optional energy diagnostics.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::space::{self, k_quad_form, Vector};
use crate::splitting::lyapunov::{
    lyapunov_bsfrb, lyapunov_bsrfb, lyapunov_sfrdr, Anchor, BsfrbWindow, BsrfbWindow, SfrdrWindow,
};
use crate::splitting::stepsize::{StepsizeRule, Variant};
use crate::splitting::{step_bsfrb, step_bsrfb, step_sfrdr, FourOperatorProblem, FourState};

/// Norm threshold of the divergence guard.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// When to stop iterating.
#[derive(Debug, Clone)]
pub enum StoppingRule {
    /// Stop once `||x_n - target|| <= epsilon`, comparing against the leading
    /// `target.len()` coordinates of the monitored iterate. This reproduces
    /// the benchmark's termination rule, where the target lives in the
    /// x-block of a product iterate.
    KnownSolution { target: Vector, epsilon: f64 },
    /// Stop once the fixed-point residual (`||z_{n+1} - z_n||`, or the
    /// skewed-metric step norm for the saddle-point algorithm) drops below
    /// `epsilon`.
    FixedPoint { epsilon: f64 },
}

impl StoppingRule {
    fn validate(&self, monitored_dim: usize) -> Result<()> {
        match self {
            StoppingRule::KnownSolution { target, epsilon } => {
                if !(epsilon > &0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "stopping epsilon must be positive, got {epsilon}"
                    )));
                }
                if target.is_empty() || target.len() > monitored_dim {
                    return Err(Error::DimensionMismatch {
                        expected: monitored_dim,
                        got: target.len(),
                        context: "known-solution target",
                    });
                }
                Ok(())
            }
            StoppingRule::FixedPoint { epsilon } => {
                if !(epsilon > &0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "stopping epsilon must be positive, got {epsilon}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Distance between the leading coordinates of `x` and the full `target`.
pub fn prefix_dist(x: &[f64], target: &[f64]) -> f64 {
    space::dist(&x[..target.len()], target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIter,
    Diverged,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
            Termination::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub n: usize,
    /// Snapshot of the monitored iterate (`x_n`; the initial record holds
    /// the initial driving iterate).
    pub iterate: Vector,
    /// Fixed-point residual of the step that produced this record;
    /// `+inf` on the initial record.
    pub residual: f64,
    pub dist_to_solution: Option<f64>,
    pub lyapunov: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub iterations: usize,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_iterate(&self) -> &Vector {
        &self.records.last().expect("trace has records").iterate
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().expect("trace has records").residual
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub stop: StoppingRule,
    pub max_iter: usize,
    /// When set, the matching energy `V_n` is evaluated at every record.
    pub lyapunov: Option<Anchor>,
}

impl RunOptions {
    pub fn new(stop: StoppingRule, max_iter: usize) -> Self {
        RunOptions {
            stop,
            max_iter,
            lyapunov: None,
        }
    }

    pub fn with_lyapunov(mut self, anchor: Anchor) -> Self {
        self.lyapunov = Some(anchor);
        self
    }
}

fn diverged(v: &[f64]) -> bool {
    !space::all_finite(v) || space::norm(v) > DIVERGENCE_NORM
}

/// Runs one of the three four-operator algorithms from `init` until the
/// stopping rule fires, `max_iter` steps elapse, or the divergence guard
/// trips.
pub fn run_four(
    p: &FourOperatorProblem,
    rule: &StepsizeRule,
    init: FourState,
    opts: &RunOptions,
) -> Result<RunTrace> {
    Ok(run_four_with_state(p, rule, init, opts)?.0)
}

/// [`run_four`], additionally returning the final internal state (used for
/// anchor construction and stationarity checks).
pub fn run_four_with_state(
    p: &FourOperatorProblem,
    rule: &StepsizeRule,
    init: FourState,
    opts: &RunOptions,
) -> Result<(RunTrace, FourState)> {
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
    opts.stop.validate(p.dim)?;
    let mut warnings = Vec::new();
    if let Some(w) = rule.validate(p.cocoercivity(), p.lipschitz())? {
        warnings.push(w);
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
    let mut records = Vec::with_capacity(64);
    let track_v = opts.lyapunov.is_some();

    // Histories for the energy windows; index k holds the iterate of record k.
    let mut z_hist: Vec<Vector> = Vec::new();
    let mut y_hist: Vec<Vector> = Vec::new();
    let mut u_hist: Vec<Vector> = Vec::new();

    let mut state = init;

    let initial_iterate = match &state {
        FourState::Bsfrb(s) => s.z.clone(),
        FourState::Bsrfb(s) => s.z.clone(),
        FourState::Sfrdr(s) => s.x.clone(),
    };
    if track_v {
        match &state {
            FourState::Bsfrb(s) => {
                z_hist.push(s.z.clone());
                y_hist.push(s.y.clone());
            }
            FourState::Bsrfb(s) => {
                z_hist.push(s.z.clone());
                y_hist.push(s.y.clone());
            }
            FourState::Sfrdr(s) => {
                z_hist.push(s.x.clone());
                u_hist.push(s.u.clone());
            }
        }
    }
    let lyap_at = |k: usize, z_hist: &[Vector], y_hist: &[Vector], u_hist: &[Vector]| -> Result<Option<f64>> {
        let Some(anchor) = &opts.lyapunov else {
            return Ok(None);
        };
        let v = match (anchor, rule.variant) {
            (Anchor::Dr(a), Variant::Bsfrb) => lyapunov_bsfrb(
                p,
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
                p,
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
                p,
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
        let (monitored, residual, guard) = match &mut state {
            FourState::Bsfrb(s) => {
                let z_prev = s.z.clone();
                let x1 = step_bsfrb(p, s, gamma)?;
                let r = space::dist(&s.z, &z_prev);
                (x1, r, s.z.clone())
            }
            FourState::Bsrfb(s) => {
                let z_prev = s.z.clone();
                let x1 = step_bsrfb(p, s, gamma)?;
                let r = space::dist(&s.z, &z_prev);
                (x1, r, s.z.clone())
            }
            FourState::Sfrdr(s) => {
                let lm = lambda.expect("validated above");
                let x_prev = s.x.clone();
                let u_prev = s.u.clone();
                step_sfrdr(p, s, gamma, lm)?;
                let dx = space::sub(&s.x, &x_prev);
                let du = space::sub(&s.u, &u_prev);
                let r = k_quad_form(&dx, &du, gamma, lm).max(0.0).sqrt();
                let mut guard = s.x.clone();
                guard.extend_from_slice(&s.u);
                (s.x.clone(), r, guard)
            }
        };
        iterations = k;

        if track_v {
            match &state {
                FourState::Bsfrb(s) => {
                    z_hist.push(s.z.clone());
                    y_hist.push(s.y.clone());
                }
                FourState::Bsrfb(s) => {
                    z_hist.push(s.z.clone());
                    y_hist.push(s.y.clone());
                }
                FourState::Sfrdr(s) => {
                    z_hist.push(s.x.clone());
                    u_hist.push(s.u.clone());
                }
            }
        }

        if diverged(&guard) {
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
