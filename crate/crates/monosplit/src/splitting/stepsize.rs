//! Step-size admissibility regions for the three algorithms.
//!
//! Each algorithm's convergence analysis fixes an open interval `(0, sup)`
//! for `gamma`. `max_gamma` returns the supremum; `strict` mode requires
//! `gamma` strictly below it, `permissive` mode additionally accepts `gamma`
//! equal to the supremum (up to 1e-12) with a warning, which benchmark
//! sweeps commonly exploit.

use crate::error::{Error, Result};
use crate::operators::{Cocoercivity, Lipschitz};

/// The three four-operator splitting algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Backward-semi-forward-reflected-backward.
    Bsfrb,
    /// Backward-semi-reflected-forward-backward.
    Bsrfb,
    /// Semi-forward-reflected-Douglas-Rachford.
    Sfrdr,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Bsfrb => "bsfrb",
            Variant::Bsrfb => "bsrfb",
            Variant::Sfrdr => "sfrdr",
        }
    }

    pub fn needs_lambda(self) -> bool {
        matches!(self, Variant::Sfrdr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepsizeMode {
    #[default]
    Strict,
    Permissive,
}

impl StepsizeMode {
    pub fn name(self) -> &'static str {
        match self {
            StepsizeMode::Strict => "strict",
            StepsizeMode::Permissive => "permissive",
        }
    }
}

/// Slack admitted on the boundary in permissive mode.
pub const PERMISSIVE_SLACK: f64 = 1e-12;

/// The constant `a` of the second algorithm's admissibility bound,
/// `a = (17 bl + 10 + sqrt((17 bl + 10)^2 + 144 (bl)^2)) / (6 bl)`
/// with `bl = beta * L`.
pub fn bsrfb_a(beta_l: f64) -> f64 {
    let t = 17.0 * beta_l + 10.0;
    (t + (t * t + 144.0 * beta_l * beta_l).sqrt()) / (6.0 * beta_l)
}

/// Limit of `a` as `beta -> inf` (zero cocoercive part): `(17 + sqrt(433))/6`.
pub fn bsrfb_a_beta_limit() -> f64 {
    (17.0 + 433.0_f64.sqrt()) / 6.0
}

/// Supremum of the admissible `gamma` interval for the given algorithm and
/// declared constants. Zero-flagged operators select the corresponding limit
/// formula. `lambda` is required for [`Variant::Sfrdr`].
pub fn max_gamma(
    variant: Variant,
    beta: Cocoercivity,
    l: Lipschitz,
    lambda: Option<f64>,
) -> Result<f64> {
    if let Some(lm) = lambda {
        if !(lm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lm}"
            )));
        }
    }
    match variant {
        Variant::Bsfrb => Ok(match (beta, l) {
            (Cocoercivity::Beta(b), Lipschitz::Const(l)) => b / (2.0 * (1.0 + 4.0 * b * l)),
            (Cocoercivity::Beta(b), Lipschitz::Zero) => b / 2.0,
            (Cocoercivity::Zero, Lipschitz::Const(l)) => 1.0 / (8.0 * l),
            (Cocoercivity::Zero, Lipschitz::Zero) => f64::INFINITY,
        }),
        Variant::Bsrfb => Ok(match (beta, l) {
            (Cocoercivity::Beta(b), Lipschitz::Const(l)) => {
                let a = bsrfb_a(b * l);
                b / (5.0 + (10.0 + 6.0 / a) * b * l)
            }
            (Cocoercivity::Beta(b), Lipschitz::Zero) => b / 5.0,
            (Cocoercivity::Zero, Lipschitz::Const(l)) => {
                let a = bsrfb_a_beta_limit();
                1.0 / ((10.0 + 6.0 / a) * l)
            }
            (Cocoercivity::Zero, Lipschitz::Zero) => f64::INFINITY,
        }),
        Variant::Sfrdr => {
            let lm = lambda.ok_or_else(|| {
                Error::InvalidParameter("lambda required for sfrdr".into())
            })?;
            Ok(match (beta, l) {
                (Cocoercivity::Beta(b), Lipschitz::Const(l)) => {
                    lm * b / (b + lm * (2.0 * b * l + 1.0))
                }
                (Cocoercivity::Beta(b), Lipschitz::Zero) => lm * b / (b + lm),
                (Cocoercivity::Zero, Lipschitz::Const(l)) => lm / (1.0 + 2.0 * lm * l),
                (Cocoercivity::Zero, Lipschitz::Zero) => lm,
            })
        }
    }
}

/// A resolved step-size choice, validated against the admissible region.
#[derive(Debug, Clone, Copy)]
pub struct StepsizeRule {
    pub variant: Variant,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub mode: StepsizeMode,
}

impl StepsizeRule {
    pub fn new(variant: Variant, gamma: f64, lambda: Option<f64>, mode: StepsizeMode) -> Self {
        StepsizeRule {
            variant,
            gamma,
            lambda,
            mode,
        }
    }

    /// Validates `gamma` (and `lambda`) against the declared constants.
    /// Returns a warning string when permissive mode accepts a boundary value
    /// that strict mode would reject.
    pub fn validate(&self, beta: Cocoercivity, l: Lipschitz) -> Result<Option<String>> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.variant.needs_lambda() && self.lambda.is_none() {
            return Err(Error::InvalidParameter("lambda required for sfrdr".into()));
        }
        let bound = max_gamma(self.variant, beta, l, self.lambda)?;
        let ok = match self.mode {
            StepsizeMode::Strict => self.gamma < bound,
            StepsizeMode::Permissive => self.gamma <= bound + PERMISSIVE_SLACK,
        };
        if !ok {
            return Err(Error::StepSizeOutOfRange {
                algorithm: self.variant.name(),
                gamma: self.gamma,
                bound,
                mode: self.mode.name(),
            });
        }
        if self.mode == StepsizeMode::Permissive && self.gamma >= bound {
            return Ok(Some(format!(
                "gamma = {} sits on the boundary of the admissible interval (0, {bound}) for {}; convergence is not covered by the analysis",
                self.gamma,
                self.variant.name()
            )));
        }
        Ok(None)
    }
}
