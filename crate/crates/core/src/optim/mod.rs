//! Optimizers behind one step contract.
//!
//! Every optimizer consumes a [`GradOracle`] rather than a precomputed
//! gradient, because DSA and the miss probe re-evaluate the objective at
//! trial parameters within a single step.

mod classic;
mod dsa;
mod hd;
mod miss;

pub use classic::{classic_step, ClassicHyper, ClassicState, Rule};
pub use dsa::{dsa_step, effective_lr, Alpha, DsaConfig, DsaState};
pub use hd::{hd_step, HdConfig, HdState};
pub use miss::{apply_step, miss_probe, MissStats, Rates};

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::scalar::Scalar;

/// Loss and gradient at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<S> {
    pub loss: S,
    pub grads: ParamSet<S>,
}

/// Maps parameters to `(loss, gradients)`.
///
/// Within one optimizer step the oracle must be deterministic: two calls
/// with identical parameters return identical results. Minibatch training
/// satisfies this by fixing the batch before the step starts.
pub trait GradOracle<S: Scalar> {
    fn evaluate(&self, params: &ParamSet<S>) -> Result<Evaluation<S>>;

    /// Loss only. Implementors that can skip the reverse pass should override this.
    fn loss(&self, params: &ParamSet<S>) -> Result<S> {
        self.evaluate(params).map(|e| e.loss)
    }
}

impl<S, F> GradOracle<S> for F
where
    S: Scalar,
    F: Fn(&ParamSet<S>) -> Result<Evaluation<S>>,
{
    fn evaluate(&self, params: &ParamSet<S>) -> Result<Evaluation<S>> {
        self(params)
    }
}

/// Evaluates and rejects non-finite losses or gradients.
pub(crate) fn checked_evaluate<S: Scalar>(
    oracle: &dyn GradOracle<S>,
    params: &ParamSet<S>,
    what: &'static str,
) -> Result<Evaluation<S>> {
    let eval = oracle.evaluate(params)?;
    if !eval.loss.is_finite() {
        return Err(Error::NonFinite { primitive: what });
    }
    params.check_layout(&eval.grads, what)?;
    if !eval.grads.is_finite() {
        return Err(Error::NonFinite { primitive: what });
    }
    Ok(eval)
}

/// Summary of the learning rates in force for a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrStats<S> {
    pub min: S,
    pub mean: S,
    pub max: S,
}

impl<S: Scalar> LrStats<S> {
    pub fn uniform(lr: S) -> Self {
        Self {
            min: lr,
            mean: lr,
            max: lr,
        }
    }

    pub fn from_values<'a>(values: impl Iterator<Item = &'a S>) -> Self {
        let (mut min, mut max, mut sum, mut n) = (S::infinity(), S::neg_infinity(), S::zero(), 0usize);
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        if n == 0 {
            return Self::uniform(S::zero());
        }
        // The mean of rounded values can land a hair outside [min, max].
        let mean = (sum / S::from_usize(n).expect("count fits scalar")).max(min).min(max);
        Self { min, mean, max }
    }
}

/// What one optimizer step reports back to the driver.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<S> {
    /// Loss at the parameters the step started from.
    pub loss: S,
    /// Learning rates used for the committed update.
    pub lr: LrStats<S>,
    /// Miss flag, when probing was requested and the optimizer adapts its rate.
    pub miss: Option<bool>,
}

/// Any of the supported optimizers with its state.
#[derive(Clone, Debug)]
pub enum Optimizer<S> {
    Classic {
        rule: Rule,
        hyper: ClassicHyper<S>,
        state: ClassicState<S>,
    },
    Hd {
        cfg: HdConfig<S>,
        state: HdState<S>,
    },
    Dsa {
        cfg: DsaConfig<S>,
        state: DsaState<S>,
    },
}

impl<S: Scalar> Optimizer<S> {
    pub fn classic(rule: Rule, hyper: ClassicHyper<S>, params: &ParamSet<S>) -> Self {
        Optimizer::Classic {
            rule,
            hyper,
            state: ClassicState::new(rule, params),
        }
    }

    pub fn hd(cfg: HdConfig<S>) -> Self {
        Optimizer::Hd {
            state: HdState::new(&cfg),
            cfg,
        }
    }

    pub fn dsa(cfg: DsaConfig<S>, params: &ParamSet<S>) -> Result<Self> {
        cfg.validate()?;
        Ok(Optimizer::Dsa {
            state: DsaState::new(&cfg, params),
            cfg,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Classic { rule, .. } => rule.name(),
            Optimizer::Hd { .. } => "hd",
            Optimizer::Dsa { .. } => "dsa",
        }
    }

    /// One step. `probe` is ignored by the classic rules, which never adapt a rate.
    pub fn step(
        &mut self,
        params: &mut ParamSet<S>,
        oracle: &dyn GradOracle<S>,
        probe: Option<&mut MissStats>,
    ) -> Result<StepOutcome<S>> {
        match self {
            Optimizer::Classic { rule, hyper, state } => {
                let eval = checked_evaluate(oracle, params, "gradient")?;
                classic_step(*rule, params, &eval.grads, state, hyper)?;
                Ok(StepOutcome {
                    loss: eval.loss,
                    lr: LrStats::uniform(hyper.lr),
                    miss: None,
                })
            }
            Optimizer::Hd { cfg, state } => hd_step(params, oracle, state, cfg, probe),
            Optimizer::Dsa { cfg, state } => dsa_step(params, oracle, state, cfg, probe),
        }
    }
}
