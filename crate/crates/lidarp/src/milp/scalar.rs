use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Arithmetic the simplex needs.  `f64` compares with tolerances, rationals
/// compare exactly.
pub trait Scalar: Clone + Debug + PartialOrd + Send + Sync + 'static {
    const EXACT: bool;

    fn nil() -> Self;
    fn unit() -> Self;
    fn from_big(v: &BigRational) -> Self;
    fn to_big(&self) -> BigRational;
    fn approx(&self) -> f64;

    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn magnitude(&self) -> Self;

    /// Primal feasibility tolerance.
    fn feas_tol() -> Self;
    /// Reduced-cost tolerance.
    fn dual_tol() -> Self;
    /// Smallest magnitude accepted as a pivot.
    fn pivot_tol() -> Self;

    fn is_exact_zero(&self) -> bool;

    fn is_tiny(&self) -> bool {
        self.magnitude() <= Self::pivot_tol()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn nil() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn from_big(v: &BigRational) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }
    fn to_big(&self) -> BigRational {
        BigRational::from_f64(*self).unwrap_or_else(BigRational::zero)
    }
    fn approx(&self) -> f64 {
        *self
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn magnitude(&self) -> Self {
        f64::abs(*self)
    }
    fn feas_tol() -> Self {
        1e-9
    }
    fn dual_tol() -> Self {
        1e-9
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn from_big(v: &BigRational) -> Self {
        v.clone()
    }
    fn to_big(&self) -> BigRational {
        self.clone()
    }
    fn approx(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }
    fn feas_tol() -> Self {
        Zero::zero()
    }
    fn dual_tol() -> Self {
        Zero::zero()
    }
    fn pivot_tol() -> Self {
        Zero::zero()
    }
    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}
