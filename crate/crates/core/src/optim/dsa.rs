//! Detection-based self-adaptive learning rates (DSA).
//!
//! Each step evaluates the gradient twice: at the current point `W` and at
//! the trial point `W~` reached by taking the step with the current rate.
//! When the two gradients agree in sign the rate grows by `beta`, when they
//! disagree it shrinks by `beta`. The rate is `gamma * sigmoid(alpha)`, so it
//! always lies in `(0, gamma)`.

use crate::error::{Error, Result};
use crate::optim::{
    apply_step, checked_evaluate, miss_probe, GradOracle, MissStats, Rates, StepOutcome,
};
use crate::params::ParamSet;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DsaConfig<S> {
    /// Step size of `alpha`.
    pub beta: S,
    /// Learning-rate ceiling.
    pub gamma: S,
    /// Initial `alpha` (before the sigmoid).
    pub alpha0: S,
    /// Guard added to magnitudes in the sign ratios.
    pub epsilon: S,
    /// One `alpha` per parameter element instead of a single global one.
    pub per_parameter: bool,
    /// Step by `g / (|g| + epsilon)` so each element moves exactly its rate.
    pub sign_param_step: bool,
    /// Scalar-`alpha` variant only: step `alpha` by `beta * <g~, g>` instead of its sign.
    #[doc(hidden)]
    pub raw_scalar_hypergradient: bool,
    /// Probe at `W - lr * g` (raw gradient) even when the committed step is
    /// sign-normalized. Off by default: probing with the committed step form
    /// makes the detection test the move that is actually taken.
    #[doc(hidden)]
    pub raw_gradient_probe: bool,
}

impl<S: Scalar> Default for DsaConfig<S> {
    fn default() -> Self {
        Self {
            beta: S::lit(0.1),
            gamma: S::lit(0.1),
            alpha0: S::lit(-4.6),
            epsilon: S::lit(1e-12),
            per_parameter: true,
            sign_param_step: true,
            raw_scalar_hypergradient: false,
            raw_gradient_probe: false,
        }
    }
}

impl<S: Scalar> DsaConfig<S> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: S, name: &str| {
            if v > S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("dsa: {name} must be positive, got {v}")))
            }
        };
        positive(self.beta, "beta")?;
        positive(self.gamma, "gamma")?;
        positive(self.epsilon, "epsilon")?;
        if !self.alpha0.is_finite() {
            return Err(Error::invalid("dsa: alpha0 must be finite"));
        }
        Ok(())
    }

    /// The `alpha` whose effective rate is `lr`: `logit(lr / gamma)`.
    pub fn alpha_for_lr(lr: S, gamma: S) -> Result<S> {
        let p = lr / gamma;
        if !(p > S::zero() && p < S::one()) {
            return Err(Error::invalid(format!(
                "dsa: learning rate {lr} must lie in (0, gamma = {gamma})"
            )));
        }
        Ok((p / (S::one() - p)).ln())
    }

    /// Same configuration, started at learning rate `lr`.
    pub fn with_initial_lr(self, lr: S) -> Result<Self> {
        Ok(Self {
            alpha0: Self::alpha_for_lr(lr, self.gamma)?,
            ..self
        })
    }
}

/// Largest `|alpha|` fed to the sigmoid. Beyond it `sigmoid` rounds to exactly
/// 0 or 1 and the rate would leave the open interval `(0, gamma)`.
fn alpha_limit<S: Scalar>() -> S {
    -S::epsilon().ln() - S::lit(2.0)
}

/// `gamma * sigmoid(alpha)`, strictly inside `(0, gamma)`.
pub fn effective_lr<S: Scalar>(gamma: S, alpha: S) -> S {
    let limit = alpha_limit::<S>();
    let a = alpha.max(-limit).min(limit);
    gamma / (S::one() + (-a).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Alpha<S> {
    Scalar(S),
    PerParameter(ParamSet<S>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DsaState<S> {
    alpha: Alpha<S>,
    steps: u64,
}

impl<S: Scalar> DsaState<S> {
    pub fn new(cfg: &DsaConfig<S>, params: &ParamSet<S>) -> Self {
        let alpha = if cfg.per_parameter {
            Alpha::PerParameter(params.full_like(cfg.alpha0))
        } else {
            Alpha::Scalar(cfg.alpha0)
        };
        Self { alpha, steps: 0 }
    }

    pub fn alpha(&self) -> &Alpha<S> {
        &self.alpha
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Effective learning rates `gamma * sigmoid(alpha)`.
    pub fn rates(&self, gamma: S) -> Rates<S> {
        match &self.alpha {
            Alpha::Scalar(a) => Rates::Global(effective_lr(gamma, *a)),
            Alpha::PerParameter(a) => Rates::PerElement(a.map(|v| effective_lr(gamma, v))),
        }
    }
}

fn sign_ratio<S: Scalar>(x: S, eps: S) -> S {
    x / (x.abs() + eps)
}

/// One DSA step.
///
/// 1. `g = grad f(W)`; the step direction `d` is `g`, or `g / (|g| + eps)`
///    when `sign_param_step` is set.
/// 2. Detection: `W~ = W - lr(alpha) * d`, `g~ = grad f(W~)`. The probe uses
///    the same step form as the update.
/// 3. `alpha += beta * p / (|p| + eps)` with `p = g~ * g` per element, or
///    `p = <g~, g>` for a single global `alpha`.
/// 4. `W <- W - lr(alpha) * d` with the updated rate.
pub fn dsa_step<S: Scalar>(
    params: &mut ParamSet<S>,
    oracle: &dyn GradOracle<S>,
    state: &mut DsaState<S>,
    cfg: &DsaConfig<S>,
    probe: Option<&mut MissStats>,
) -> Result<StepOutcome<S>> {
    cfg.validate()?;
    match (&state.alpha, cfg.per_parameter) {
        (Alpha::PerParameter(a), true) => params.check_layout(a, "dsa state")?,
        (Alpha::Scalar(_), false) => {}
        _ => {
            return Err(Error::State(
                "dsa state does not match the per_parameter setting".into(),
            ))
        }
    }

    let eval = checked_evaluate(oracle, params, "gradient")?;
    let grad = eval.grads;
    let eps = cfg.epsilon;
    let direction = if cfg.sign_param_step {
        grad.map(|g| sign_ratio(g, eps))
    } else {
        grad.clone()
    };

    let before = state.rates(cfg.gamma);
    let probe_dir = if cfg.raw_gradient_probe { &grad } else { &direction };
    let trial = apply_step(params, &before, probe_dir)?;
    let detected = checked_evaluate(oracle, &trial, "detection gradient")?;
    if trial == *params && detected.loss != eval.loss {
        return Err(Error::OracleContract(format!(
            "loss {} then {} at identical parameters",
            eval.loss, detected.loss
        )));
    }

    match &mut state.alpha {
        Alpha::PerParameter(alpha) => {
            for ((a, &gt), &g) in alpha
                .iter_values_mut()
                .zip(detected.grads.iter_values())
                .zip(grad.iter_values())
            {
                *a += cfg.beta * sign_ratio(gt * g, eps);
            }
        }
        Alpha::Scalar(alpha) => {
            let p = detected.grads.dot(&grad)?;
            *alpha += if cfg.raw_scalar_hypergradient {
                cfg.beta * p
            } else {
                cfg.beta * sign_ratio(p, eps)
            };
            if !alpha.is_finite() {
                return Err(Error::NonFinite { primitive: "dsa alpha" });
            }
        }
    }
    let after = state.rates(cfg.gamma);

    let miss = match probe {
        Some(stats) => {
            let miss = miss_probe(params, &direction, &before, &after, oracle)?;
            stats.record(miss);
            Some(miss)
        }
        None => None,
    };

    *params = apply_step(params, &after, &direction)?;
    state.steps += 1;

    Ok(StepOutcome {
        loss: eval.loss,
        lr: after.stats(),
        miss,
    })
}
