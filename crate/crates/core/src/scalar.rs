//! Floating-point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the tape, optimizers and objectives can compute with.
///
/// Implemented for `f32` and `f64`. Double precision is the default
/// everywhere in the harness: sign decisions on products of gradients
/// around `1e-6` are unreliable in single precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Short type name used in error messages and telemetry.
    const NAME: &'static str;

    /// `C = alpha * A * B + beta * C` for row/column strided matrices.
    ///
    /// `A` is `m x k`, `B` is `k x n`, `C` is `m x n`. Strides are in elements.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        a_strides: (isize, isize),
        b: &[Self],
        b_strides: (isize, isize),
        beta: Self,
        c: &mut [Self],
        c_strides: (isize, isize),
    );

    /// Converts an `f64` literal. Panics only for values the type cannot represent at all.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

fn check_extent(len: usize, rows: usize, cols: usize, strides: (isize, isize), what: &str) {
    if rows == 0 || cols == 0 {
        return;
    }
    let last = (rows as isize - 1) * strides.0 + (cols as isize - 1) * strides.1;
    assert!(
        strides.0 >= 0 && strides.1 >= 0 && (last as usize) < len,
        "gemm operand {what} out of bounds: {rows}x{cols} with strides {strides:?} over {len} elements"
    );
}

macro_rules! impl_scalar {
    ($ty:ty, $name:literal, $gemm:path) => {
        impl Scalar for $ty {
            const NAME: &'static str = $name;

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                a_strides: (isize, isize),
                b: &[Self],
                b_strides: (isize, isize),
                beta: Self,
                c: &mut [Self],
                c_strides: (isize, isize),
            ) {
                check_extent(a.len(), m, k, a_strides, "A");
                check_extent(b.len(), k, n, b_strides, "B");
                check_extent(c.len(), m, n, c_strides, "C");
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: every index reachable through the strides was bounds-checked above.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        a_strides.0,
                        a_strides.1,
                        b.as_ptr(),
                        b_strides.0,
                        b_strides.1,
                        beta,
                        c.as_mut_ptr(),
                        c_strides.0,
                        c_strides.1,
                    );
                }
            }
        }
    };
}

impl_scalar!(f64, "f64", matrixmultiply::dgemm);
impl_scalar!(f32, "f32", matrixmultiply::sgemm);
