//! Numeric abstraction shared by observation tensors, Q-tables and evaluation statistics.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("finite conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Population mean and standard deviation (ddof = 0). Empty input gives zeros.
pub fn mean_std<T: Scalar>(values: &[T]) -> (T, T) {
    if values.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = T::of_usize(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basic() {
        let (m, s) = mean_std(&[1.0f64, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        let (m, s) = mean_std::<f32>(&[]);
        assert_eq!((m, s), (0.0, 0.0));
    }
}
