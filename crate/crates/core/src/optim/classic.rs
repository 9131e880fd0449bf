use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::scalar::Scalar;

/// The fixed-rate baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Sgd,
    Momentum,
    AdaGrad,
    AdaDelta,
    RmsProp,
    Adam,
    AdamW,
    Adamax,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::Sgd,
        Rule::Momentum,
        Rule::AdaGrad,
        Rule::AdaDelta,
        Rule::RmsProp,
        Rule::Adam,
        Rule::AdamW,
        Rule::Adamax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Sgd => "sgd",
            Rule::Momentum => "momentum",
            Rule::AdaGrad => "adagrad",
            Rule::AdaDelta => "adadelta",
            Rule::RmsProp => "rmsprop",
            Rule::Adam => "adam",
            Rule::AdamW => "adamw",
            Rule::Adamax => "adamax",
        }
    }

    /// Conventional defaults for the rule (learning rates as used in the benchmarks).
    pub fn default_hyper<S: Scalar>(self) -> ClassicHyper<S> {
        let base = ClassicHyper {
            lr: S::lit(0.001),
            momentum: S::lit(0.9),
            decay: S::lit(0.99),
            beta1: S::lit(0.9),
            beta2: S::lit(0.999),
            eps: S::lit(1e-8),
            weight_decay: S::zero(),
        };
        match self {
            Rule::Sgd => ClassicHyper {
                lr: S::lit(0.1),
                ..base
            },
            Rule::Momentum => ClassicHyper {
                lr: S::lit(0.1),
                ..base
            },
            Rule::AdaGrad => ClassicHyper {
                lr: S::lit(0.01),
                eps: S::lit(1e-10),
                ..base
            },
            Rule::RmsProp => ClassicHyper {
                lr: S::lit(0.01),
                ..base
            },
            Rule::AdaDelta => ClassicHyper {
                lr: S::one(),
                decay: S::lit(0.9),
                eps: S::lit(1e-6),
                ..base
            },
            Rule::Adam => base,
            Rule::AdamW => ClassicHyper {
                weight_decay: S::lit(0.01),
                ..base
            },
            Rule::Adamax => ClassicHyper {
                lr: S::lit(0.002),
                ..base
            },
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown optimizer rule `{s}`")))
    }
}

/// Hyperparameters for the classic rules; each rule reads only the fields it uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicHyper<S> {
    pub lr: S,
    /// Momentum coefficient `mu`.
    pub momentum: S,
    /// Squared-gradient decay (RMSProp, AdaDelta).
    pub decay: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    /// Decoupled weight decay (AdamW only).
    pub weight_decay: S,
}

/// Per-element buffers for one classic rule.
///
/// | rule      | `first`              | `second`                 |
/// |-----------|----------------------|--------------------------|
/// | momentum  | velocity             | -                        |
/// | adagrad   | sum of squares       | -                        |
/// | rmsprop   | mean square          | -                        |
/// | adadelta  | mean square gradient | mean square update       |
/// | adam(w)   | first moment         | second moment            |
/// | adamax    | first moment         | infinity norm            |
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassicState<S> {
    rule: Option<Rule>,
    step: u64,
    first: Vec<Vec<S>>,
    second: Vec<Vec<S>>,
}

impl<S: Scalar> ClassicState<S> {
    pub fn new(rule: Rule, params: &ParamSet<S>) -> Self {
        let zeros: Vec<Vec<S>> = params
            .tensors()
            .iter()
            .map(|t| vec![S::zero(); t.len()])
            .collect();
        Self {
            rule: Some(rule),
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first(&self) -> &[Vec<S>] {
        &self.first
    }

    pub fn second(&self) -> &[Vec<S>] {
        &self.second
    }
}

/// Applies one update of `rule` to `params` in place.
pub fn classic_step<S: Scalar>(
    rule: Rule,
    params: &mut ParamSet<S>,
    grads: &ParamSet<S>,
    state: &mut ClassicState<S>,
    hyper: &ClassicHyper<S>,
) -> Result<()> {
    match state.rule {
        None => return Err(Error::State("classic state is uninitialized".into())),
        Some(r) if r != rule => {
            return Err(Error::State(format!(
                "state was built for {r}, stepping with {rule}"
            )))
        }
        _ => {}
    }
    params.check_layout(grads, rule.name())?;
    let fits = state.first.len() == params.len()
        && params
            .tensors()
            .iter()
            .zip(&state.first)
            .all(|(t, b)| t.len() == b.len());
    if !fits {
        return Err(Error::State("buffer shapes do not match parameters".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite {
            primitive: "gradient",
        });
    }

    state.step += 1;
    let t = state.step;
    let one = S::one();
    let h = *hyper;

    for (k, (param, grad)) in params
        .tensors_mut()
        .iter_mut()
        .zip(grads.tensors())
        .enumerate()
    {
        let first = &mut state.first[k];
        let second = &mut state.second[k];
        let w = param.data_mut();
        let g = grad.data();
        match rule {
            Rule::Sgd => {
                for (w, &g) in w.iter_mut().zip(g) {
                    *w -= h.lr * g;
                }
            }
            Rule::Momentum => {
                for ((w, &g), v) in w.iter_mut().zip(g).zip(first.iter_mut()) {
                    *v = h.momentum * *v - h.lr * g;
                    *w += *v;
                }
            }
            Rule::AdaGrad => {
                for ((w, &g), acc) in w.iter_mut().zip(g).zip(first.iter_mut()) {
                    *acc += g * g;
                    *w -= h.lr * g / (acc.sqrt() + h.eps);
                }
            }
            Rule::RmsProp => {
                for ((w, &g), sq) in w.iter_mut().zip(g).zip(first.iter_mut()) {
                    *sq = h.decay * *sq + (one - h.decay) * g * g;
                    *w -= h.lr * g / (sq.sqrt() + h.eps);
                }
            }
            Rule::AdaDelta => {
                for (((w, &g), sq), acc) in w
                    .iter_mut()
                    .zip(g)
                    .zip(first.iter_mut())
                    .zip(second.iter_mut())
                {
                    *sq = h.decay * *sq + (one - h.decay) * g * g;
                    let delta = (*acc + h.eps).sqrt() / (*sq + h.eps).sqrt() * g;
                    *acc = h.decay * *acc + (one - h.decay) * delta * delta;
                    *w -= h.lr * delta;
                }
            }
            Rule::Adam | Rule::AdamW => {
                let bc1 = one - h.beta1.powi(t as i32);
                let bc2 = one - h.beta2.powi(t as i32);
                let decay = if rule == Rule::AdamW {
                    one - h.lr * h.weight_decay
                } else {
                    one
                };
                for (((w, &g), m), v) in w
                    .iter_mut()
                    .zip(g)
                    .zip(first.iter_mut())
                    .zip(second.iter_mut())
                {
                    if rule == Rule::AdamW {
                        *w *= decay;
                    }
                    *m = h.beta1 * *m + (one - h.beta1) * g;
                    *v = h.beta2 * *v + (one - h.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *w -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
                }
            }
            Rule::Adamax => {
                let step = h.lr / (one - h.beta1.powi(t as i32));
                for (((w, &g), m), u) in w
                    .iter_mut()
                    .zip(g)
                    .zip(first.iter_mut())
                    .zip(second.iter_mut())
                {
                    *m = h.beta1 * *m + (one - h.beta1) * g;
                    *u = (h.beta2 * *u).max(g.abs() + h.eps);
                    *w -= step * *m / *u;
                }
            }
        }
    }
    Ok(())
}
