use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Negative-slope parameter of the uniform Kaiming initializer used for every layer.
pub const KAIMING_A: f64 = 2.236_067_977_499_79;

/// Half-width of the Kaiming uniform distribution: `gain * sqrt(3 / fan_in)`
/// with `gain = sqrt(2 / (1 + a^2))`.
pub fn kaiming_bound(fan_in: usize, a: f64) -> Result<f64> {
    if fan_in == 0 {
        return Err(Error::invalid("kaiming init: fan_in must be at least 1"));
    }
    let gain = (2.0 / (1.0 + a * a)).sqrt();
    Ok(gain * (3.0 / fan_in as f64).sqrt())
}

/// I.i.d. uniform values on `(-b, b)`, `b = kaiming_bound(fan_in, KAIMING_A)`,
/// which simplifies to `1 / sqrt(fan_in)`.
pub fn kaiming_uniform<S: Scalar>(
    shape: Vec<usize>,
    fan_in: usize,
    rng: &mut Rng,
) -> Result<Tensor<S>> {
    let bound = kaiming_bound(fan_in, KAIMING_A)?;
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| S::lit(rng.uniform(-bound, bound)))
        .collect();
    Tensor::new(shape, data)
}
