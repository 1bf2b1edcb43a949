//! Scalar abstraction for the numeric core.
//!
//! Everything downstream of the raw confusion counts (metric values, feature
//! matrices, perturbation noise, model weights) is generic over a floating
//! scalar so the same code runs in `f32` or `f64`. The experiment harness and
//! CLI instantiate `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating scalar usable throughout the library: ordinary float arithmetic
/// plus uniform/Gaussian sampling support.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// One standard-normal draw.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Conversion from an `f64` literal (tolerances, defaults).
    fn from_f64_lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Conversion from a count. Exact for counts below the mantissa width.
    fn from_count(v: u64) -> Self {
        Self::from_u64(v).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Scalar for f64 {
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_both<F: Scalar>(rng: &mut ChaCha8Rng) -> (F, F) {
        (F::sample_unit(rng), F::sample_standard_normal(rng))
    }

    #[test]
    fn f32_and_f64_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (u32v, z32v) = sample_both::<f32>(&mut rng);
        let (u64v, z64v) = sample_both::<f64>(&mut rng);
        assert!((0.0..1.0).contains(&u32v));
        assert!((0.0..1.0).contains(&u64v));
        assert!(z32v.is_finite() && z64v.is_finite());
    }

    #[test]
    fn count_conversion_is_exact() {
        assert_eq!(f64::from_count(1_000_003), 1_000_003.0);
        assert_eq!(f32::from_count(1024), 1024.0);
    }
}
