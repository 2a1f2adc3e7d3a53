//! Scalar abstraction for the kernel math.
//!
//! Everything numeric in this crate is generic over [`Real`] so the same
//! operator code runs in `f32` or `f64`. The two thresholds live on the trait
//! because they are precision-dependent: the `f64` dead-row cutoff of 1e-300
//! underflows to zero in `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Probabilities are clamped to at most `1 - prob_epsilon()` before
    /// `log1p` so log-space products stay finite.
    fn prob_epsilon() -> Self;

    /// Unnormalized row mass below this counts as a vanished row: refinement
    /// falls back instead of dividing, decoding marks the position dead.
    fn dead_mass() -> Self;

    /// How far a validated row's sum may stray from 1. Wider for `f32`: each
    /// stored entry already carries ~1e-7 of representation error.
    fn row_sum_tol() -> Self;

    /// Lossy conversion from `f64`; all random draws happen in `f64` so that
    /// the generated streams are identical across scalar types.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }
}

impl Real for f64 {
    fn prob_epsilon() -> Self {
        1e-12
    }

    fn dead_mass() -> Self {
        1e-300
    }

    fn row_sum_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn prob_epsilon() -> Self {
        1e-6
    }

    fn dead_mass() -> Self {
        1e-30
    }

    fn row_sum_tol() -> Self {
        1e-4
    }
}
