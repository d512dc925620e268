//! Numeric abstraction shared by the measures, the offset fit and the classifier.
//!
//! Compressed sizes are integers; everything derived from them (ratios,
//! regression coefficients, averages) is computed in a [`Scalar`]. Floating
//! point types give fast approximate results, rational types give exact ones.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A field-like number type usable for dissimilarities and line fits.
pub trait Scalar:
    Num + FromPrimitive + ToPrimitive + PartialOrd + Clone + Debug + Send + Sync
{
    /// Largest integral value not greater than `self`.
    fn floor_value(&self) -> Self;

    fn from_size(size: u64) -> Self {
        Self::from_u64(size).expect("compressed size representable in scalar type")
    }

    /// Rounds half-up to the nearest integer, saturating into `i64`.
    fn round_half_up(&self) -> i64 {
        let half = Self::one() / (Self::one() + Self::one());
        let v = (self.clone() + half).floor_value();
        v.to_i64().unwrap_or(if v < Self::zero() { i64::MIN } else { i64::MAX })
    }
}

impl Scalar for f32 {
    fn floor_value(&self) -> Self {
        self.floor()
    }
}

impl Scalar for f64 {
    fn floor_value(&self) -> Self {
        self.floor()
    }
}

impl Scalar for Ratio<i64> {
    fn floor_value(&self) -> Self {
        self.floor()
    }
}

impl Scalar for BigRational {
    fn floor_value(&self) -> Self {
        self.floor()
    }
}

/// Exact rational from an integer ratio.
pub fn exact(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_half_up_matches_for_all_types() {
        for (v, want) in [(44.5, 45), (44.49, 44), (-0.5, 0), (0.0, 0), (45.0, 45)] {
            assert_eq!(v.round_half_up(), want, "{v}");
            assert_eq!((v as f32).round_half_up(), want, "{v}");
        }
        assert_eq!(exact(89, 2).round_half_up(), 45);
        assert_eq!(exact(-1, 2).round_half_up(), 0);
        assert_eq!(exact(-3, 2).round_half_up(), -1);
        assert_eq!(Ratio::new(179i64, 4).round_half_up(), 45);
    }
}
