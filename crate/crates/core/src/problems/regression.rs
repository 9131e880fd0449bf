use crate::autodiff::{kaiming_uniform, Tape, Tensor, Var};
use crate::data::{Batch, Targets};
use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::problems::Objective;
use crate::rng::{Rng, Stream};
use crate::scalar::Scalar;

fn squared_residuals<S: Scalar>(
    tape: &mut Tape<S>,
    w: Var,
    batch: &Batch<S>,
) -> Result<Var> {
    let Targets::Values(y) = &batch.targets else {
        return Err(Error::invalid("regression needs real-valued targets"));
    };
    let x = tape.leaf(batch.inputs.clone())?;
    let y = tape.leaf(y.clone())?;
    let pred = tape.matmul(x, w)?;
    let r = tape.sub(pred, y)?;
    tape.square(r)
}

/// Linear regression without bias onto `y = sum(x)`: mean squared error over
/// rows of `x ~ U[0, 1)^dim`. The minimizer is the all-ones weight vector.
#[derive(Clone, Debug)]
pub struct SumRegression<S> {
    data: Batch<S>,
}

impl<S: Scalar> SumRegression<S> {
    pub const SAMPLES: usize = 10_000;
    pub const DIM: usize = 4;

    /// The standard 10 000 x 4 problem, drawn from the data stream of `seed`.
    pub fn standard(seed: u64) -> Result<Self> {
        Self::generate(Self::SAMPLES, Self::DIM, &mut Rng::stream(seed, Stream::Data))
    }

    pub fn generate(samples: usize, dim: usize, rng: &mut Rng) -> Result<Self> {
        if samples == 0 || dim == 0 {
            return Err(Error::invalid("sum regression needs samples > 0 and dim > 0"));
        }
        let mut xs = Vec::with_capacity(samples * dim);
        let mut ys = Vec::with_capacity(samples);
        for _ in 0..samples {
            let row: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
            ys.push(S::lit(row.iter().sum()));
            xs.extend(row.into_iter().map(S::lit));
        }
        Self::from_batch(Batch {
            inputs: Tensor::matrix(samples, dim, xs)?,
            targets: Targets::Values(Tensor::matrix(samples, 1, ys)?),
        })
    }

    pub fn from_batch(data: Batch<S>) -> Result<Self> {
        match (&data.targets, data.inputs.dims2()) {
            (Targets::Values(y), Some((n, _))) if y.dims2() == Some((n, 1)) && n > 0 => Ok(Self { data }),
            _ => Err(Error::invalid("sum regression: inputs [n, d] and targets [n, 1] required")),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.inputs.shape()[1]
    }

    pub fn data(&self) -> &Batch<S> {
        &self.data
    }

    pub fn params(w: Vec<S>) -> ParamSet<S> {
        let n = w.len();
        ParamSet::new().with("w", Tensor::matrix(n, 1, w).expect("column vector"))
    }
}

impl<S: Scalar> Objective<S> for SumRegression<S> {
    fn name(&self) -> &str {
        "sum_regression"
    }

    fn init_params(&self, rng: &mut Rng) -> Result<ParamSet<S>> {
        let d = self.dim();
        Ok(ParamSet::new().with("w", kaiming_uniform(vec![d, 1], d, rng)?))
    }

    fn record_loss(&self, tape: &mut Tape<S>, params: &[Var], batch: Option<&Batch<S>>) -> Result<Var> {
        let batch = batch.unwrap_or(&self.data);
        let rows = batch.len();
        let sq = squared_residuals(tape, params[0], batch)?;
        let total = tape.sum(sq)?;
        tape.scale(total, S::one() / S::from_usize(rows).expect("row count fits scalar"))
    }

    fn optimum(&self) -> Option<ParamSet<S>> {
        Some(Self::params(vec![S::one(); self.dim()]))
    }
}

/// One weight, two single-sample batches `(x=1, y=2)` and `(x=1, y=3)`,
/// summed squared error. Alternating between the batches pulls the weight
/// toward 2 and 3 in turn; the full-batch optimum is 2.5 with loss 0.5.
#[derive(Clone, Debug)]
pub struct MinibatchTrap<S> {
    a: Batch<S>,
    b: Batch<S>,
    full: Batch<S>,
}

impl<S: Scalar> Default for MinibatchTrap<S> {
    fn default() -> Self {
        let batch = |ys: &[f64]| Batch {
            inputs: Tensor::from_f64(vec![ys.len(), 1], &vec![1.0; ys.len()]).expect("column"),
            targets: Targets::Values(Tensor::from_f64(vec![ys.len(), 1], ys).expect("column")),
        };
        Self {
            a: batch(&[2.0]),
            b: batch(&[3.0]),
            full: batch(&[2.0, 3.0]),
        }
    }
}

impl<S: Scalar> MinibatchTrap<S> {
    pub fn batch_a(&self) -> &Batch<S> {
        &self.a
    }

    pub fn batch_b(&self) -> &Batch<S> {
        &self.b
    }

    pub fn full_batch(&self) -> &Batch<S> {
        &self.full
    }

    pub fn params(w: S) -> ParamSet<S> {
        SumRegression::params(vec![w])
    }
}

impl<S: Scalar> Objective<S> for MinibatchTrap<S> {
    fn name(&self) -> &str {
        "minibatch_trap"
    }

    fn init_params(&self, rng: &mut Rng) -> Result<ParamSet<S>> {
        Ok(ParamSet::new().with("w", kaiming_uniform(vec![1, 1], 1, rng)?))
    }

    fn record_loss(&self, tape: &mut Tape<S>, params: &[Var], batch: Option<&Batch<S>>) -> Result<Var> {
        let sq = squared_residuals(tape, params[0], batch.unwrap_or(&self.full))?;
        tape.sum(sq)
    }

    fn optimum(&self) -> Option<ParamSet<S>> {
        Some(Self::params(S::lit(2.5)))
    }
}
