//! Floating-point scalar abstraction shared by the dense kernels and models.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar usable by the linear-algebra kernels and the models: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, saturating to the nearest representable value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative pivot threshold below which a column counts as numerically dependent.
    ///
    /// `1e-12` for `f64`; widened to `100·eps` for narrower types.
    #[inline]
    fn rank_tolerance() -> Self {
        let hundred_eps = Self::epsilon() * Self::lit(100.0);
        hundred_eps.max(Self::lit(1e-12))
    }

    /// Tolerance for orthonormality checks on bases (`1e-10` for `f64`).
    #[inline]
    fn ortho_tolerance() -> Self {
        (Self::epsilon() * Self::lit(1e6)).max(Self::lit(1e-10))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
