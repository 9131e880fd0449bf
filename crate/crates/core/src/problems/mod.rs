//! Objectives: every cost function the benchmarks optimize.
//!
//! Each objective records its loss on a [`Tape`], so gradients always come
//! from the autodiff module. [`ObjectiveOracle`] binds an objective to a
//! fixed batch and exposes it as a [`GradOracle`].

mod mlp;
mod quadratic;
mod regression;

pub use mlp::{Activation, Mlp, MlpSpec, PAPER_HIDDEN};
pub use quadratic::{Quadratic, ScalarSquare};
pub use regression::{MinibatchTrap, SumRegression};

use crate::autodiff::{Tape, Var};
use crate::data::Batch;
use crate::error::Result;
use crate::optim::{Evaluation, GradOracle};
use crate::params::ParamSet;
use crate::rng::Rng;
use crate::scalar::Scalar;

pub trait Objective<S: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    /// Fresh parameters drawn from the objective's initializer.
    fn init_params(&self, rng: &mut Rng) -> Result<ParamSet<S>>;

    /// Records the loss on `tape`. `params` are leaf handles in parameter order.
    /// `batch = None` means the objective's own full data set (if it has one).
    fn record_loss(&self, tape: &mut Tape<S>, params: &[Var], batch: Option<&Batch<S>>) -> Result<Var>;

    /// Analytic minimizer, when known.
    fn optimum(&self) -> Option<ParamSet<S>> {
        None
    }
}

fn record<S: Scalar>(
    objective: &dyn Objective<S>,
    params: &ParamSet<S>,
    batch: Option<&Batch<S>>,
) -> Result<(Tape<S>, Vec<Var>, Var)> {
    let mut tape = Tape::new();
    let vars = params
        .tensors()
        .iter()
        .map(|t| tape.leaf(t.clone()))
        .collect::<Result<Vec<_>>>()?;
    let loss = objective.record_loss(&mut tape, &vars, batch)?;
    Ok((tape, vars, loss))
}

/// Loss and gradients via one forward and one reverse pass.
pub fn evaluate<S: Scalar>(
    objective: &dyn Objective<S>,
    params: &ParamSet<S>,
    batch: Option<&Batch<S>>,
) -> Result<Evaluation<S>> {
    let (mut tape, vars, loss) = record(objective, params, batch)?;
    let value = tape.value(loss).item()?;
    tape.backward(loss)?;
    let mut grads = ParamSet::new();
    for ((name, t), v) in params.names().iter().zip(params.tensors()).zip(vars) {
        let g = tape.grad(v).expect("backward fills every node").to_vec();
        grads.push(name.clone(), t.with_data(g)?);
    }
    Ok(Evaluation { loss: value, grads })
}

/// Loss only (forward pass).
pub fn loss<S: Scalar>(
    objective: &dyn Objective<S>,
    params: &ParamSet<S>,
    batch: Option<&Batch<S>>,
) -> Result<S> {
    let (tape, _, loss) = record(objective, params, batch)?;
    tape.value(loss).item()
}

/// An objective with its batch fixed for the duration of a step.
#[derive(Clone, Copy)]
pub struct ObjectiveOracle<'a, S: Scalar> {
    objective: &'a dyn Objective<S>,
    batch: Option<&'a Batch<S>>,
}

impl<'a, S: Scalar> ObjectiveOracle<'a, S> {
    pub fn new(objective: &'a dyn Objective<S>, batch: Option<&'a Batch<S>>) -> Self {
        Self { objective, batch }
    }
}

impl<S: Scalar> GradOracle<S> for ObjectiveOracle<'_, S> {
    fn evaluate(&self, params: &ParamSet<S>) -> Result<Evaluation<S>> {
        evaluate(self.objective, params, self.batch)
    }

    fn loss(&self, params: &ParamSet<S>) -> Result<S> {
        loss(self.objective, params, self.batch)
    }
}
