//! Central finite differences, used as an independent check on the tape.

use crate::error::Result;
use crate::params::ParamSet;
use crate::scalar::Scalar;

/// Denominator floor for [`relative_error`]; below it the error is absolute.
pub const RELATIVE_FLOOR: f64 = 1e-4;

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate, via loss evaluations only.
pub fn central_differences<S, F>(params: &ParamSet<S>, step: f64, loss: F) -> Result<ParamSet<S>>
where
    S: Scalar,
    F: Fn(&ParamSet<S>) -> Result<S>,
{
    let h = S::lit(step);
    let two_h = h + h;
    let mut probe = params.clone();
    let mut out = params.zeros_like();
    for t in 0..params.len() {
        for i in 0..params.tensors()[t].len() {
            let x = params.tensors()[t].data()[i];
            probe.tensors_mut()[t].data_mut()[i] = x + h;
            let up = loss(&probe)?;
            probe.tensors_mut()[t].data_mut()[i] = x - h;
            let down = loss(&probe)?;
            probe.tensors_mut()[t].data_mut()[i] = x;
            out.tensors_mut()[t].data_mut()[i] = (up - down) / two_h;
        }
    }
    Ok(out)
}

/// Central differences at selected `(tensor, element)` coordinates only.
pub fn central_differences_at<S, F>(
    params: &ParamSet<S>,
    step: f64,
    coords: &[(usize, usize)],
    loss: F,
) -> Result<Vec<S>>
where
    S: Scalar,
    F: Fn(&ParamSet<S>) -> Result<S>,
{
    let h = S::lit(step);
    let mut probe = params.clone();
    coords
        .iter()
        .map(|&(t, i)| {
            let x = params.tensors()[t].data()[i];
            probe.tensors_mut()[t].data_mut()[i] = x + h;
            let up = loss(&probe)?;
            probe.tensors_mut()[t].data_mut()[i] = x - h;
            let down = loss(&probe)?;
            probe.tensors_mut()[t].data_mut()[i] = x;
            Ok((up - down) / (h + h))
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Largest [`relative_error`] over all coordinates.
pub fn max_relative_error<S: Scalar>(analytic: &ParamSet<S>, numeric: &ParamSet<S>) -> Result<f64> {
    analytic.check_layout(numeric, "gradcheck")?;
    Ok(analytic
        .iter_values()
        .zip(numeric.iter_values())
        .map(|(a, n)| relative_error(a.to_f64_lossy(), n.to_f64_lossy()))
        .fold(0.0, f64::max))
}
