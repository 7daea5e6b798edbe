//! Scalar abstraction shared by the kernel, chaos and distribution code.
//!
//! Everything that only needs field arithmetic is generic over [`Scalar`], so
//! the same routines run on `f64`, `f32` and exact big rationals. Quantities
//! that need square roots (norms, the analytic inequalities) require
//! [`Real`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Exact rational scalar.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + NumAssign
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic on this type is free of rounding.
    const EXACT: bool;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self^k` by repeated multiplication.
    fn powu(&self, k: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc *= self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
}

impl Scalar for f32 {
    const EXACT: bool = false;
}

impl Scalar for BigRational {
    const EXACT: bool = true;
}

/// Floating-point scalars.
pub trait Real: Scalar + Float {}

impl Real for f64 {}
impl Real for f32 {}

/// Exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact integer as a rational.
pub fn rational_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// `|a - b| <= rel * max(|a|, |b|, 1)`.
pub fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= rel * scale
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Default relative tolerance for floating-point identities.
pub const IDENTITY_TOL: f64 = 1e-9;
