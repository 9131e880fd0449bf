use crate::error::{Error, Result};
use crate::optim::{GradOracle, LrStats};
use crate::params::ParamSet;
use crate::scalar::Scalar;

/// Learning rates for a step: one global value or one per parameter element.
#[derive(Clone, Debug, PartialEq)]
pub enum Rates<S> {
    Global(S),
    PerElement(ParamSet<S>),
}

impl<S: Scalar> Rates<S> {
    pub fn stats(&self) -> LrStats<S> {
        match self {
            Rates::Global(lr) => LrStats::uniform(*lr),
            Rates::PerElement(lrs) => LrStats::from_values(lrs.iter_values()),
        }
    }
}

/// `params - rates * direction`, elementwise.
pub fn apply_step<S: Scalar>(
    params: &ParamSet<S>,
    rates: &Rates<S>,
    direction: &ParamSet<S>,
) -> Result<ParamSet<S>> {
    match rates {
        Rates::Global(lr) => params.zip_map(direction, |w, d| w - *lr * d),
        Rates::PerElement(lrs) => {
            let scaled = lrs.zip_map(direction, |lr, d| lr * d)?;
            params.zip_map(&scaled, |w, s| w - s)
        }
    }
}

/// Did adapting the rate from `before` to `after` make this step worse?
///
/// Compares `L = f(W - before * dir)` with `L_adapt = f(W - after * dir)` and
/// reports a miss when `L_adapt > L` strictly. Read-only: nothing is committed.
pub fn miss_probe<S: Scalar>(
    params: &ParamSet<S>,
    direction: &ParamSet<S>,
    before: &Rates<S>,
    after: &Rates<S>,
    oracle: &dyn GradOracle<S>,
) -> Result<bool> {
    let plain = oracle.loss(&apply_step(params, before, direction)?)?;
    let adapted = oracle.loss(&apply_step(params, after, direction)?)?;
    if !plain.is_finite() || !adapted.is_finite() {
        return Err(Error::NonFinite {
            primitive: "miss_probe",
        });
    }
    Ok(adapted > plain)
}

/// Running count of misses over probed steps.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MissStats {
    misses: usize,
    flags: Vec<bool>,
}

impl MissStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, miss: bool) {
        self.misses += usize::from(miss);
        self.flags.push(miss);
    }

    /// `M`, the number of misses.
    pub fn misses(&self) -> usize {
        self.misses
    }

    /// `T`, the number of probed steps.
    pub fn steps(&self) -> usize {
        self.flags.len()
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// `M / (T - 1)` for `T > 1`, else 0, capped at 1 (a DSA run can miss on
    /// every step, first included).
    pub fn rate(&self) -> f64 {
        match self.steps() {
            0 | 1 => 0.0,
            t => (self.misses as f64 / (t - 1) as f64).min(1.0),
        }
    }
}
