use crate::autodiff::{kaiming_uniform, Tape, Tensor, Var};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::problems::Objective;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// `a * w1^2 + b * w2^2` over a single parameter `w` of length 2.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic<S> {
    a: S,
    b: S,
    start: Option<[S; 2]>,
    name: String,
}

impl<S: Scalar> Quadratic<S> {
    pub fn new(a: S, b: S) -> Result<Self> {
        if !(a > S::zero() && b > S::zero()) {
            return Err(Error::invalid(format!(
                "quadratic coefficients must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self {
            a,
            b,
            start: None,
            name: format!("quadratic({a},{b})"),
        })
    }

    /// Fixed starting point instead of a random draw.
    pub fn with_start(mut self, w1: S, w2: S) -> Self {
        self.start = Some([w1, w2]);
        self
    }

    pub fn coefficients(&self) -> (S, S) {
        (self.a, self.b)
    }

    pub fn params(w1: S, w2: S) -> ParamSet<S> {
        ParamSet::from_vec("w", vec![w1, w2])
    }
}

impl<S: Scalar> Objective<S> for Quadratic<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn init_params(&self, rng: &mut Rng) -> Result<ParamSet<S>> {
        match self.start {
            Some([w1, w2]) => Ok(Self::params(w1, w2)),
            None => Ok(ParamSet::new().with("w", kaiming_uniform(vec![2], 1, rng)?)),
        }
    }

    fn record_loss(&self, tape: &mut Tape<S>, params: &[Var], _batch: Option<&Batch<S>>) -> Result<Var> {
        let coef = tape.leaf(Tensor::vector(vec![self.a, self.b]))?;
        let sq = tape.square(params[0])?;
        let weighted = tape.mul(coef, sq)?;
        tape.sum(weighted)
    }

    fn optimum(&self) -> Option<ParamSet<S>> {
        Some(Self::params(S::zero(), S::zero()))
    }
}

/// `x^2` over a single scalar parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarSquare<S> {
    start: S,
}

impl<S: Scalar> Default for ScalarSquare<S> {
    fn default() -> Self {
        Self { start: S::one() }
    }
}

impl<S: Scalar> ScalarSquare<S> {
    pub fn with_start(start: S) -> Self {
        Self { start }
    }

    pub fn params(x: S) -> ParamSet<S> {
        ParamSet::from_vec("x", vec![x])
    }
}

impl<S: Scalar> Objective<S> for ScalarSquare<S> {
    fn name(&self) -> &str {
        "scalar_square"
    }

    fn init_params(&self, _rng: &mut Rng) -> Result<ParamSet<S>> {
        Ok(Self::params(self.start))
    }

    fn record_loss(&self, tape: &mut Tape<S>, params: &[Var], _batch: Option<&Batch<S>>) -> Result<Var> {
        let sq = tape.square(params[0])?;
        tape.sum(sq)
    }

    fn optimum(&self) -> Option<ParamSet<S>> {
        Some(Self::params(S::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::evaluate;

    #[test]
    fn quadratic_1_95_at_minus_one_one() {
        let q = Quadratic::new(1.0, 95.0).unwrap();
        let e = evaluate(&q, &Quadratic::params(-1.0, 1.0), None).unwrap();
        assert_eq!(e.loss, 96.0);
        assert_eq!(e.grads.to_flat(), vec![-2.0, 190.0]);
    }

    #[test]
    fn quadratic_optimum_is_flat() {
        let q = Quadratic::new(1.0, 1000.0).unwrap();
        let e = evaluate(&q, &q.optimum().unwrap(), None).unwrap();
        assert_eq!(e.loss, 0.0);
        assert_eq!(e.grads.to_flat(), vec![0.0, 0.0]);
    }

    #[test]
    fn quadratic_fig_start() {
        let q = Quadratic::<f64>::new(1.0, 1000.0).unwrap();
        let e = evaluate(&q, &Quadratic::<f64>::params(-0.06, 0.001), None).unwrap();
        assert!((e.loss - 0.0046).abs() < 1e-15);
        let g = e.grads.to_flat();
        assert!((g[0] + 0.12).abs() < 1e-15 && (g[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_rejects_non_positive() {
        assert!(Quadratic::new(0.0, 1.0).is_err());
        assert!(Quadratic::new(1.0, -2.0).is_err());
    }

    #[test]
    fn scalar_square_values() {
        let s = ScalarSquare::default();
        let e = evaluate(&s, &ScalarSquare::params(1.0), None).unwrap();
        assert_eq!((e.loss, e.grads.to_flat()), (1.0, vec![2.0]));
        let e = evaluate(&s, &ScalarSquare::params(0.0), None).unwrap();
        assert_eq!((e.loss, e.grads.to_flat()), (0.0, vec![0.0]));
    }
}
