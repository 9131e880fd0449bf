use crate::error::Result;
use crate::optim::{checked_evaluate, miss_probe, GradOracle, LrStats, MissStats, Rates, StepOutcome};
use crate::params::ParamSet;
use crate::scalar::Scalar;

/// Hypergradient descent on plain SGD with one global learning rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HdConfig<S> {
    /// Initial learning rate.
    pub alpha0: S,
    /// Step size of the learning rate.
    pub beta: S,
}

impl<S: Scalar> Default for HdConfig<S> {
    fn default() -> Self {
        Self {
            alpha0: S::lit(0.1),
            beta: S::lit(0.01),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HdState<S> {
    alpha: S,
    prev_grad: Option<ParamSet<S>>,
    steps: u64,
}

impl<S: Scalar> HdState<S> {
    pub fn new(cfg: &HdConfig<S>) -> Self {
        Self {
            alpha: cfg.alpha0,
            prev_grad: None,
            steps: 0,
        }
    }

    /// Current learning rate. Not clamped; it may go negative.
    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// One hypergradient step.
///
/// `alpha <- alpha + beta * <g_t, g_{t-1}>` (skipped on the first call), then
/// `w <- w - alpha * g_t`. The dot product runs over every parameter value.
pub fn hd_step<S: Scalar>(
    params: &mut ParamSet<S>,
    oracle: &dyn GradOracle<S>,
    state: &mut HdState<S>,
    cfg: &HdConfig<S>,
    probe: Option<&mut MissStats>,
) -> Result<StepOutcome<S>> {
    let eval = checked_evaluate(oracle, params, "gradient")?;
    let grad = eval.grads;
    let alpha_before = state.alpha;
    if let Some(prev) = &state.prev_grad {
        state.alpha += cfg.beta * grad.dot(prev)?;
    }
    let alpha = state.alpha;

    let miss = match probe {
        Some(stats) => {
            let miss = miss_probe(
                params,
                &grad,
                &Rates::Global(alpha_before),
                &Rates::Global(alpha),
                oracle,
            )?;
            stats.record(miss);
            Some(miss)
        }
        None => None,
    };

    for (w, &g) in params.iter_values_mut().zip(grad.iter_values()) {
        *w -= alpha * g;
    }
    state.prev_grad = Some(grad);
    state.steps += 1;

    Ok(StepOutcome {
        loss: eval.loss,
        lr: LrStats::uniform(alpha),
        miss,
    })
}
