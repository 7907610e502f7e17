//! Energy (Lyapunov) diagnostics from the convergence analyses.
//!
//! Each algorithm's analysis builds a nonincreasing energy `V_n` anchored at
//! a fixed point of the iteration. Evaluating `V_n` along a run is both a
//! runtime diagnostic and a test oracle: with an admissible step size the
//! sequence must not increase, and the decrease dominates the summed squared
//! fixed-point residuals through the margin constant `eps'`.
//!
//! History shorter than the window is padded with the initial iterate
//! (`z_{-1} = z_{-2} = z_{-3} = z_0`, `y_{-1} = y_{-2} = y_0`), which makes
//! every difference term vanish at `n = 0`.

use crate::error::{Error, Result};
use crate::operators::{Cocoercivity, Lipschitz};
use crate::space::{self, k_quad_form, Vector};
use crate::splitting::stepsize::{self, max_gamma, Variant};
use crate::splitting::FourOperatorProblem;

/// Anchor for the first two algorithms: a point `z` with
/// `J_{gamma A1} z = x`, `x` a zero of the sum, and `x - z` realizing the
/// remaining operators at `x`.
#[derive(Debug, Clone)]
pub struct DrAnchor {
    pub z: Vector,
    pub x: Vector,
}

/// Anchor for the third algorithm: a primal-dual pair with `u in A1 x` and
/// `-u in (A2 + B + C) x`.
#[derive(Debug, Clone)]
pub struct SaddleAnchor {
    pub x: Vector,
    pub u: Vector,
}

/// Anchor for any of the three algorithms.
#[derive(Debug, Clone)]
pub enum Anchor {
    Dr(DrAnchor),
    Saddle(SaddleAnchor),
}

/// `coeff * gl`, with the convention that a vanished Lipschitz term kills
/// the whole product even when `coeff` is infinite (the `a -> inf` limit).
fn lip_term(coeff: f64, gl: f64) -> f64 {
    if gl == 0.0 {
        0.0
    } else {
        coeff * gl
    }
}

/// The constant `epsilon` fixed in the first algorithm's analysis (with
/// `a = 1`): `1 / (4 (1 + 4 beta L))`, degenerating to `0` when `C = 0`.
pub fn bsfrb_epsilon(beta: Cocoercivity, l: Lipschitz) -> f64 {
    match beta {
        Cocoercivity::Zero => 0.0,
        Cocoercivity::Beta(b) => 1.0 / (4.0 * (1.0 + 4.0 * b * l.value())),
    }
}

/// The pair `(a, epsilon)` fixed in the second algorithm's analysis.
/// `a` is infinite in the `L -> 0` limit; callers must guard products of
/// `a` with vanished Lipschitz terms.
pub fn bsrfb_constants(beta: Cocoercivity, l: Lipschitz) -> (f64, f64) {
    match (beta, l) {
        (Cocoercivity::Beta(b), Lipschitz::Const(lc)) => {
            let a = stepsize::bsrfb_a(b * lc);
            (a, 1.0 / (5.0 + (10.0 + 6.0 / a) * b * lc))
        }
        (Cocoercivity::Beta(_), Lipschitz::Zero) => (f64::INFINITY, 0.2),
        (Cocoercivity::Zero, Lipschitz::Const(_)) => (stepsize::bsrfb_a_beta_limit(), 0.0),
        (Cocoercivity::Zero, Lipschitz::Zero) => (f64::INFINITY, 0.0),
    }
}

/// Margin constant `eps'` multiplying the summed squared residuals in the
/// descent inequality `V_{n+1} + eps' * ||step||^2 <= V_n`.
pub fn epsilon_prime(
    variant: Variant,
    gamma: f64,
    lambda: Option<f64>,
    beta: Cocoercivity,
    l: Lipschitz,
) -> Result<f64> {
    let lv = l.value();
    match variant {
        Variant::Bsfrb => {
            let eps = bsfrb_epsilon(beta, l);
            Ok(1.0 - 4.0 * eps - 8.0 * gamma * lv)
        }
        Variant::Bsrfb => {
            let (a, eps) = bsrfb_constants(beta, l);
            let beta_term = match beta {
                Cocoercivity::Zero => 0.0,
                Cocoercivity::Beta(b) => 8.0 * gamma / b,
            };
            Ok(1.0 - 4.0 * eps - beta_term - lip_term(20.0 + 12.0 / a, gamma * lv))
        }
        Variant::Sfrdr => {
            let lm = lambda
                .ok_or_else(|| Error::InvalidParameter("lambda required for sfrdr".into()))?;
            if !(gamma < lm) {
                return Err(Error::InvalidParameter(format!(
                    "sfrdr margin needs gamma < lambda, got gamma = {gamma}, lambda = {lm}"
                )));
            }
            Ok(match beta {
                Cocoercivity::Beta(b) => {
                    (b * (lm - gamma) - lm * gamma * (2.0 * b * lv + 1.0))
                        / (2.0 * b * (lm - gamma))
                }
                Cocoercivity::Zero => {
                    (lm - gamma - 2.0 * lm * gamma * lv) / (2.0 * (lm - gamma))
                }
            })
        }
    }
}

/// Supremum of the `gamma` range on which the analysis actually certifies
/// `V_{n+1} <= V_n`. For the first and third algorithms this coincides with
/// [`max_gamma`]. For the second it is strictly smaller: with the constants
/// `a`, `eps` fixed by its analysis, the descent coefficients stay positive
/// only on `min` of the three derivation bounds, which sits below the stated
/// admissibility supremum.
pub fn monotone_gamma_sup(
    variant: Variant,
    beta: Cocoercivity,
    l: Lipschitz,
    lambda: Option<f64>,
) -> Result<f64> {
    match variant {
        Variant::Bsfrb | Variant::Sfrdr => max_gamma(variant, beta, l, lambda),
        Variant::Bsrfb => {
            let (a, eps) = bsrfb_constants(beta, l);
            let lv = l.value();
            let g1 = match (beta, l) {
                (Cocoercivity::Beta(b), Lipschitz::Const(_)) => {
                    (1.0 - 4.0 * eps) / ((20.0 + 12.0 / a) * lv + 8.0 / b)
                }
                (Cocoercivity::Beta(b), Lipschitz::Zero) => (1.0 - 4.0 * eps) * b / 8.0,
                (Cocoercivity::Zero, Lipschitz::Const(_)) => 1.0 / ((20.0 + 12.0 / a) * lv),
                (Cocoercivity::Zero, Lipschitz::Zero) => f64::INFINITY,
            };
            let g2 = match l {
                Lipschitz::Const(lc) => 1.0 / (3.0 * (1.0 + a) * lc),
                Lipschitz::Zero => f64::INFINITY,
            };
            let g3 = match beta {
                Cocoercivity::Beta(b) => 2.0 * b * eps,
                Cocoercivity::Zero => f64::INFINITY,
            };
            Ok(g1.min(g2).min(g3))
        }
    }
}

/// History window for [`lyapunov_bsfrb`].
pub struct BsfrbWindow<'a> {
    pub z_n: &'a [f64],
    pub z_nm1: &'a [f64],
    pub z_nm2: &'a [f64],
    pub y_n: &'a [f64],
    pub y_nm1: &'a [f64],
}

/// Energy of the first algorithm at the window's head:
///
/// ```text
/// V_n = ||z_n - z||^2 + 2 gamma <B y_n - B y_{n-1}, x - y_n>
///     + (6 gamma L + 2 eps) ||z_n - z_{n-1}||^2 + 2 gamma L ||z_{n-1} - z_{n-2}||^2
/// ```
pub fn lyapunov_bsfrb(
    p: &FourOperatorProblem,
    gamma: f64,
    anchor: &DrAnchor,
    w: &BsfrbWindow<'_>,
) -> Result<f64> {
    let l = p.lipschitz().value();
    let eps = bsfrb_epsilon(p.cocoercivity(), p.lipschitz());
    let by = p.b.eval(w.y_n)?;
    let by_prev = p.b.eval(w.y_nm1)?;
    let cross = space::dot(&space::sub(&by, &by_prev), &space::sub(&anchor.x, w.y_n));
    Ok(space::dist_sq(w.z_n, &anchor.z)
        + 2.0 * gamma * cross
        + (6.0 * gamma * l + 2.0 * eps) * space::dist_sq(w.z_n, w.z_nm1)
        + 2.0 * gamma * l * space::dist_sq(w.z_nm1, w.z_nm2))
}

/// History window for [`lyapunov_bsrfb`].
pub struct BsrfbWindow<'a> {
    pub z_n: &'a [f64],
    pub z_nm1: &'a [f64],
    pub z_nm2: &'a [f64],
    pub z_nm3: &'a [f64],
    pub y_n: &'a [f64],
    pub y_nm1: &'a [f64],
    pub y_nm2: &'a [f64],
}

/// Energy of the second algorithm at the window's head:
///
/// ```text
/// V_n = ||z_n - z||^2 + 2 gamma <B yh_{n-1} - B x, y_n - y_{n-1}>
///     + (1 + 2 eps + 6 gamma / beta + (20 + 12/a) gamma L) ||z_n - z_{n-1}||^2
///     + (2 gamma / beta + (14 + 10/a) gamma L) ||z_{n-1} - z_{n-2}||^2
///     + 4 (1 + 1/a) gamma L ||z_{n-2} - z_{n-3}||^2
///     + 2 (1 + a) gamma L ||z_n - zh_{n-1}||^2
/// ```
///
/// with the reflections `yh_{n-1} = 2 y_{n-1} - y_{n-2}` and
/// `zh_{n-1} = 2 z_{n-1} - z_{n-2}`.
pub fn lyapunov_bsrfb(
    p: &FourOperatorProblem,
    gamma: f64,
    anchor: &DrAnchor,
    w: &BsrfbWindow<'_>,
) -> Result<f64> {
    let lv = p.lipschitz().value();
    let gl = gamma * lv;
    let (a, eps) = bsrfb_constants(p.cocoercivity(), p.lipschitz());
    let gob = match p.cocoercivity() {
        Cocoercivity::Zero => 0.0,
        Cocoercivity::Beta(b) => gamma / b,
    };

    let yhat: Vector = w
        .y_nm1
        .iter()
        .zip(w.y_nm2)
        .map(|(&ym1, &ym2)| 2.0 * ym1 - ym2)
        .collect();
    let b_yhat = p.b.eval(&yhat)?;
    let b_x = p.b.eval(&anchor.x)?;
    let cross = space::dot(
        &space::sub(&b_yhat, &b_x),
        &space::sub(w.y_n, w.y_nm1),
    );

    let zhat: Vector = w
        .z_nm1
        .iter()
        .zip(w.z_nm2)
        .map(|(&zm1, &zm2)| 2.0 * zm1 - zm2)
        .collect();

    Ok(space::dist_sq(w.z_n, &anchor.z)
        + 2.0 * gamma * cross
        + (1.0 + 2.0 * eps + 6.0 * gob + lip_term(20.0 + 12.0 / a, gl))
            * space::dist_sq(w.z_n, w.z_nm1)
        + (2.0 * gob + lip_term(14.0 + 10.0 / a, gl)) * space::dist_sq(w.z_nm1, w.z_nm2)
        + lip_term(4.0 * (1.0 + 1.0 / a), gl) * space::dist_sq(w.z_nm2, w.z_nm3)
        + lip_term(2.0 * (1.0 + a), gl) * space::dist_sq(w.z_n, &zhat))
}

/// History window for [`lyapunov_sfrdr`].
pub struct SfrdrWindow<'a> {
    pub x_n: &'a [f64],
    pub x_nm1: &'a [f64],
    pub u_n: &'a [f64],
    pub u_nm1: &'a [f64],
}

/// Energy of the third algorithm at the window's head, in the skewed metric:
///
/// ```text
/// V_n = ||(x_n, u_n) - (x, u)||_K^2 + 2 <B x_n - B x_{n-1}, x - x_n>
///     + (1/2) ||(x_n, u_n) - (x_{n-1}, u_{n-1})||_K^2
/// ```
pub fn lyapunov_sfrdr(
    p: &FourOperatorProblem,
    gamma: f64,
    lambda: f64,
    anchor: &SaddleAnchor,
    w: &SfrdrWindow<'_>,
) -> Result<f64> {
    if !(gamma > 0.0 && lambda > 0.0 && gamma < lambda) {
        return Err(Error::InvalidParameter(format!(
            "sfrdr energy needs 0 < gamma < lambda, got gamma = {gamma}, lambda = {lambda}"
        )));
    }
    let bx = p.b.eval(w.x_n)?;
    let bx_prev = p.b.eval(w.x_nm1)?;
    let cross = space::dot(&space::sub(&bx, &bx_prev), &space::sub(&anchor.x, w.x_n));
    let dx_anchor = space::sub(w.x_n, &anchor.x);
    let du_anchor = space::sub(w.u_n, &anchor.u);
    let dx_step = space::sub(w.x_n, w.x_nm1);
    let du_step = space::sub(w.u_n, w.u_nm1);
    Ok(k_quad_form(&dx_anchor, &du_anchor, gamma, lambda)
        + 2.0 * cross
        + 0.5 * k_quad_form(&dx_step, &du_step, gamma, lambda))
}
