//! Scalar abstraction. The numeric kernels are generic over [`Real`], which is
//! implemented for `f32` and `f64`; the crate root exports `f64` aliases for
//! the common types.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, NumCast};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar with the extras the estimators need beyond
/// [`num_traits::Float`]: constant conversion, uniform and standard-normal
/// draws, and the normal CDF.
pub trait Real:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, rounding to the nearest representable value.
    fn of(x: f64) -> Self {
        NumCast::from(x).expect("constant not representable")
    }

    /// Widens to `f64` (exact for both supported scalars).
    fn as_f64(self) -> f64;

    /// One standard-normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Standard normal CDF `Φ`.
    fn norm_cdf(self) -> Self;

    /// Standard normal density `φ`.
    fn norm_pdf(self) -> Self {
        let half = Self::of(0.5);
        Self::of(1.0 / (2.0 * std::f64::consts::PI).sqrt()) * (-half * self * self).exp()
    }

    /// Validation tolerance for masses that must sum to one: `1e-12` in `f64`,
    /// loosened for narrower scalars and for long sums.
    fn mass_tolerance(terms: usize) -> Self {
        let rounding = Self::epsilon() * Self::of(32.0) * Self::of(terms.max(1) as f64);
        Self::of(1e-12).max(rounding)
    }
}

impl Real for f64 {
    fn as_f64(self) -> f64 {
        self
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn norm_cdf(self) -> Self {
        0.5 * statrs::function::erf::erfc(-self / std::f64::consts::SQRT_2)
    }
}

impl Real for f32 {
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }

    fn norm_cdf(self) -> Self {
        (self as f64).norm_cdf() as f32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_cdf_reference_values() {
        assert!((0.0f64.norm_cdf() - 0.5).abs() < 1e-15);
        // Φ(1) and Φ(-1), tabulated to 7 digits.
        assert!((1.0f64.norm_cdf() - 0.841_344_7).abs() < 1e-7);
        assert!(((-1.0f64).norm_cdf() - 0.158_655_3).abs() < 1e-7);
        // Deep tail stays accurate through erfc.
        assert!(((-8.0f64).norm_cdf() - 6.220_960_574_271_78e-16).abs() < 1e-21);
    }

    #[test]
    fn norm_pdf_matches_density() {
        let x = 0.7f64;
        let expect = (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((x.norm_pdf() - expect).abs() < 1e-16);
    }

    #[test]
    fn f32_routes_through_f64() {
        assert!((1.0f32.norm_cdf() - 0.841_344_7_f32).abs() < 1e-6);
        assert_eq!(f32::of(0.25), 0.25f32);
    }
}
