use crate::autodiff::{kaiming_uniform, Tape, Tensor, Var};
use crate::data::{Batch, Targets};
use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::problems::Objective;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Hidden widths of the benchmark network.
pub const PAPER_HIDDEN: [usize; 4] = [32, 64, 256, 128];

const PRELU_INIT: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Prelu,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, classes: usize) -> Self {
        Self {
            input_dim,
            hidden: PAPER_HIDDEN.to_vec(),
            classes,
        }
    }

    /// Hidden layers alternate sigmoid and PReLU, starting with sigmoid.
    pub fn activation(layer: usize) -> Activation {
        if layer % 2 == 0 {
            Activation::Sigmoid
        } else {
            Activation::Prelu
        }
    }

    fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(self.classes))
            .collect()
    }

    /// Weights, biases and one slope per PReLU layer.
    pub fn param_count(&self) -> usize {
        let w = self.widths();
        let dense: usize = w.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
        let slopes = (0..self.hidden.len())
            .filter(|&l| Self::activation(l) == Activation::Prelu)
            .count();
        dense + slopes
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.classes < 2 || self.hidden.contains(&0) {
            return Err(Error::invalid(format!("bad network shape {self:?}")));
        }
        Ok(())
    }
}

/// Fully connected classifier trained with mean NLL on log-softmax outputs.
///
/// Weights are stored `[in, out]` and applied as `x W + b`.
#[derive(Clone, Debug)]
pub struct Mlp {
    spec: MlpSpec,
    name: String,
}

impl Mlp {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let name = format!("mlp({}->{:?}->{})", spec.input_dim, spec.hidden, spec.classes);
        Ok(Self { spec, name })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    fn forward<S: Scalar>(&self, tape: &mut Tape<S>, params: &[Var], inputs: &Tensor<S>) -> Result<Var> {
        match inputs.dims2() {
            Some((n, d)) if d == self.spec.input_dim && n > 0 => {}
            _ => {
                return Err(Error::ShapeMismatch {
                    primitive: "mlp",
                    left: inputs.shape().to_vec(),
                    right: vec![self.spec.input_dim],
                })
            }
        }
        if params.len() != self.layout().len() {
            return Err(Error::invalid(format!(
                "mlp expects {} parameter tensors, got {}",
                self.layout().len(),
                params.len()
            )));
        }
        let mut p = params.iter().copied();
        let mut h = tape.leaf(inputs.clone())?;
        for layer in 0..=self.spec.hidden.len() {
            let (w, b) = (p.next().expect("weight"), p.next().expect("bias"));
            let z = tape.matmul(h, w)?;
            h = tape.add_bias(z, b)?;
            if layer == self.spec.hidden.len() {
                break;
            }
            h = match MlpSpec::activation(layer) {
                Activation::Sigmoid => tape.sigmoid(h)?,
                Activation::Prelu => tape.prelu(h, p.next().expect("slope"))?,
            };
        }
        tape.log_softmax(h)
    }

    /// `(name, shape, fan_in)` of every parameter tensor in order; slopes have fan-in 0.
    fn layout(&self) -> Vec<(String, Vec<usize>, usize)> {
        let w = self.spec.widths();
        let mut out = Vec::new();
        for (l, pair) in w.windows(2).enumerate() {
            let (i, o) = (pair[0], pair[1]);
            out.push((format!("fc{}.weight", l + 1), vec![i, o], i));
            out.push((format!("fc{}.bias", l + 1), vec![o], i));
            if l < self.spec.hidden.len() && MlpSpec::activation(l) == Activation::Prelu {
                out.push((format!("prelu{}.slope", l + 1), vec![1], 0));
            }
        }
        out
    }

    /// Row-wise log-probabilities.
    pub fn log_probs<S: Scalar>(&self, params: &ParamSet<S>, inputs: &Tensor<S>) -> Result<Tensor<S>> {
        let mut tape = Tape::new();
        let vars = params
            .tensors()
            .iter()
            .map(|t| tape.leaf(t.clone()))
            .collect::<Result<Vec<_>>>()?;
        let out = self.forward(&mut tape, &vars, inputs)?;
        Ok(tape.take(out))
    }

    /// Arg-max class per row; ties go to the lowest index.
    pub fn predict<S: Scalar>(&self, params: &ParamSet<S>, inputs: &Tensor<S>) -> Result<Vec<usize>> {
        let lp = self.log_probs(params, inputs)?;
        Ok(lp
            .data()
            .chunks(self.spec.classes)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, S::neg_infinity()), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect())
    }
}

impl<S: Scalar> Objective<S> for Mlp {
    fn name(&self) -> &str {
        &self.name
    }

    fn init_params(&self, rng: &mut Rng) -> Result<ParamSet<S>> {
        let mut params = ParamSet::new();
        for (name, shape, fan_in) in self.layout() {
            let t = if name.ends_with(".slope") {
                Tensor::full(shape, S::lit(PRELU_INIT))
            } else if name.ends_with(".bias") {
                Tensor::zeros(shape)
            } else {
                kaiming_uniform(shape, fan_in, rng)?
            };
            params.push(name, t);
        }
        Ok(params)
    }

    fn record_loss(&self, tape: &mut Tape<S>, params: &[Var], batch: Option<&Batch<S>>) -> Result<Var> {
        let batch = batch.ok_or_else(|| Error::invalid("mlp loss needs a batch"))?;
        let Targets::Classes(labels) = &batch.targets else {
            return Err(Error::invalid("mlp loss needs class labels"));
        };
        let lp = self.forward(tape, params, &batch.inputs)?;
        tape.nll(lp, labels)
    }
}
