//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Relative tolerances used by the linear algebra kernel and the predicates
/// built on top of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum relative anti-Hermitian part accepted when building a
    /// [`HermitianMatrix`](crate::linalg::HermitianMatrix).
    pub hermitian: f64,
    /// Relative reconstruction error accepted from eigensolvers.
    pub eig: f64,
    /// Eigenvalues in `[-psd, 0)` (relative) are treated as zero.
    pub psd: f64,
    /// Trace-preservation residual accepted by channel checks.
    pub tp: f64,
    /// Singular values below `rank * sigma_max` are dropped.
    pub rank: f64,
}

/// Real floating point type the crate is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    /// Tolerances appropriate for the precision of this type.
    fn tolerances() -> Tolerances;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn tolerances() -> Tolerances {
        Tolerances {
            hermitian: 1e-10,
            eig: 1e-10,
            psd: 1e-9,
            tp: 1e-9,
            rank: 1e-9,
        }
    }
}

impl Real for f32 {
    fn tolerances() -> Tolerances {
        Tolerances {
            hermitian: 1e-4,
            eig: 1e-4,
            psd: 1e-4,
            tp: 1e-4,
            rank: 1e-4,
        }
    }
}
