use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Floating-point scalar for every numeric kernel: `f32` or `f64`.
///
/// The shipped pipelines run at `f64` (see the `Real` alias at the crate
/// root); `f32` exists for callers that accept the precision trade.
pub trait Scalar:
    Float + FromPrimitive + NumAssignOps + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for converting an `f64` constant into the working scalar.
#[inline]
pub fn real<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("finite f64 constant converts to any Scalar")
}

/// Count-to-scalar conversion, for means and rates.
#[inline]
pub fn real_of<F: Scalar>(n: usize) -> F {
    F::from_usize(n).expect("usize converts to any Scalar")
}
