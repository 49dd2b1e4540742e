//! Scalar fields underlying every other module.
//!
//! [`Exact`] is a Gaussian rational: real and imaginary parts are
//! arbitrary-precision rationals, kept in canonical form (reduced, positive
//! denominator) by `num`. All coherency-sign and determinant identities are
//! checked on the nose in this mode. [`Approx`] is a complex double used by
//! the sampled-connection computations, where residuals are compared against
//! the tolerance carried by [`ScalarMode`].

use std::fmt;

use num::rational::BigRational;
use num::{BigInt, ToPrimitive, Zero as _};

use crate::error::Error;
use crate::Result;

/// Tolerance used by approximate-mode residual checks unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Selects exact or approximate arithmetic for a whole computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarMode {
    Exact,
    Approx { tolerance: f64 },
}

impl ScalarMode {
    pub fn approx_default() -> Self {
        ScalarMode::Approx {
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    /// Residual threshold for this mode. Exact mode admits no residual.
    pub fn tolerance(&self) -> f64 {
        match self {
            ScalarMode::Exact => 0.0,
            ScalarMode::Approx { tolerance } => *tolerance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ScalarMode::Approx { tolerance } = self {
            if !(*tolerance > 0.0) || !tolerance.is_finite() {
                return Err(Error::input("approx tolerance must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Common interface of the two scalar fields.
///
/// `dist` is the metric used by all residual checks: for [`Approx`] it is
/// the complex modulus of the difference, for [`Exact`] it is `0.0` on
/// equality and `+inf` otherwise, so an exact mismatch fails every finite
/// tolerance.
pub trait Scalar:
    Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(v: i64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Result<Self>;

    fn is_zero(&self) -> bool;

    /// Magnitude used for pivot selection. Exact scalars only distinguish
    /// zero from nonzero; any nonzero exact pivot is as good as any other.
    fn pivot_mag(&self) -> f64;

    /// Residual metric, see trait docs.
    fn dist(&self, rhs: &Self) -> f64;

    /// Integer power with the convention `x^0 = 1`; negative exponents
    /// invert first. Zero base with non-positive exponent is a domain error.
    fn powi(&self, k: i64) -> Result<Self> {
        if self.is_zero() {
            if k > 0 {
                return Ok(Self::zero());
            }
            return Err(Error::domain("zero base with non-positive exponent"));
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        Ok(acc)
    }

    fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.mul(&rhs.inv()?))
    }
}

/// Integer power of a nonzero scalar; `cpow(a, 0) = 1`, `cpow(a, -k) = 1/cpow(a, k)`.
pub fn cpow<S: Scalar>(a: &S, k: i64) -> Result<S> {
    a.powi(k)
}

/// Gaussian rational: `re + im·i` with arbitrary-precision rational parts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Exact {
    pub re: BigRational,
    pub im: BigRational,
}

impl Exact {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Exact { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Exact {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    /// re/im as a reduced fraction `p/q`, `q > 0`.
    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::domain("zero denominator"));
        }
        Ok(Exact {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        })
    }

    pub fn i() -> Self {
        Exact::from_ints(0, 1)
    }

    pub fn conj(&self) -> Self {
        Exact {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Nearest complex double; exact for dyadic rationals in range.
    pub fn to_approx(&self) -> Approx {
        Approx::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}i", self.re, self.im)
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;

    fn zero() -> Self {
        Exact::from_ints(0, 0)
    }
    fn one() -> Self {
        Exact::from_ints(1, 0)
    }
    fn from_int(v: i64) -> Self {
        Exact::from_ints(v, 0)
    }

    fn add(&self, rhs: &Self) -> Self {
        Exact {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        Exact {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        Exact {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
    fn neg(&self) -> Self {
        Exact {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn inv(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return Err(Error::domain("inverse of zero"));
        }
        Ok(Exact {
            re: &self.re / &n,
            im: -&self.im / &n,
        })
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn pivot_mag(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }

    fn dist(&self, rhs: &Self) -> f64 {
        if self == rhs {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Complex double scalar. Stored values are kept finite; operations that
/// could overflow report a domain error at the call site that notices.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Approx {
    pub re: f64,
    pub im: f64,
}

impl Approx {
    pub fn new(re: f64, im: f64) -> Self {
        Approx { re, im }
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Self {
        Approx::new(self.re, -self.im)
    }

    pub fn scale(&self, t: f64) -> Self {
        Approx::new(self.re * t, self.im * t)
    }
}

impl fmt::Display for Approx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}i", self.re, self.im)
    }
}

impl Scalar for Approx {
    const EXACT: bool = false;

    fn zero() -> Self {
        Approx::new(0.0, 0.0)
    }
    fn one() -> Self {
        Approx::new(1.0, 0.0)
    }
    fn from_int(v: i64) -> Self {
        Approx::new(v as f64, 0.0)
    }

    fn add(&self, rhs: &Self) -> Self {
        Approx::new(self.re + rhs.re, self.im + rhs.im)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Approx::new(self.re - rhs.re, self.im - rhs.im)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Approx::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
    fn neg(&self) -> Self {
        Approx::new(-self.re, -self.im)
    }

    fn inv(&self) -> Result<Self> {
        let n = self.re * self.re + self.im * self.im;
        if n == 0.0 {
            return Err(Error::domain("inverse of zero"));
        }
        Ok(Approx::new(self.re / n, -self.im / n))
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn pivot_mag(&self) -> f64 {
        self.abs()
    }

    fn dist(&self, rhs: &Self) -> f64 {
        (self.re - rhs.re).hypot(self.im - rhs.im)
    }
}
