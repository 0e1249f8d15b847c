use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the signal-side routines (transforms, wavelet and
/// Allan-type variances) are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Terms per leaf of the pairwise summation tree.
pub const LEAF: usize = 128;

/// Streaming pairwise summation. Leaves of [`LEAF`] consecutive terms are
/// summed in order and leaf sums merged like a binary counter, so a stream
/// fed leaf by leaf gives the same bits as [`sum`] over the whole slice.
#[derive(Debug, Clone)]
pub struct PairwiseAcc<F> {
    stack: Vec<(F, u32)>,
}

impl<F: Scalar> Default for PairwiseAcc<F> {
    fn default() -> Self {
        PairwiseAcc { stack: Vec::new() }
    }
}

impl<F: Scalar> PairwiseAcc<F> {
    /// Adds the sum of one leaf.
    #[inline]
    pub fn push_leaf(&mut self, leaf: F) {
        let mut v = leaf;
        let mut level = 0;
        while let Some(&(top, l)) = self.stack.last() {
            if l != level {
                break;
            }
            self.stack.pop();
            v = top + v;
            level += 1;
        }
        self.stack.push((v, level));
    }

    pub fn total(&self) -> F {
        self.stack.iter().rev().fold(F::zero(), |acc, &(v, _)| v + acc)
    }
}

/// Sum of squares with pairwise accumulation, so f32 signals of 10^6 samples
/// keep their precision.
pub fn sum_sq<F: Scalar>(xs: &[F]) -> F {
    let mut acc = PairwiseAcc::default();
    for leaf in xs.chunks(LEAF) {
        acc.push_leaf(leaf.iter().fold(F::zero(), |a, &x| a + x * x));
    }
    acc.total()
}

/// Plain pairwise sum.
pub fn sum<F: Scalar>(xs: &[F]) -> F {
    let mut acc = PairwiseAcc::default();
    for leaf in xs.chunks(LEAF) {
        acc.push_leaf(leaf.iter().fold(F::zero(), |a, &x| a + x));
    }
    acc.total()
}

pub(crate) fn check_finite<F: Scalar>(xs: &[F]) -> crate::Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(crate::Error::NonFinite(i)),
        None => Ok(()),
    }
}
