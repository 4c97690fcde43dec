//! Exact Gaussian rationals.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex number `re + i·im` with arbitrary-precision rational parts.
///
/// `BigRational` keeps both parts reduced with positive denominators, so
/// structural equality is numerical equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scalar {
    re: BigRational,
    im: BigRational,
}

impl Default for Scalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl Scalar {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Self::real(BigRational::from_integer(v))
    }

    /// `p/q` as a real scalar. Panics if `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn real(re: BigRational) -> Self {
        Self {
            re,
            im: BigRational::zero(),
        }
    }

    pub fn complex(re: Scalar, im: Scalar) -> Self {
        // re + i*im for two scalars that are expected to be real
        &re + &(&Scalar::i() * &im)
    }

    pub fn re(&self) -> &BigRational {
        &self.re
    }

    pub fn im(&self) -> &BigRational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// |z|², always real.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Singular("division by the zero scalar".into()));
        }
        if self.im.is_zero() {
            return Ok(Self::real(self.re.recip()));
        }
        let n = self.norm_sqr();
        Ok(Self {
            re: &self.re / &n,
            im: -(&self.im / &n),
        })
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// Multiply by a machine integer.
    pub fn mul_int(&self, k: i64) -> Self {
        if k == 1 {
            return self.clone();
        }
        let k = BigRational::from_integer(BigInt::from(k));
        Self {
            re: if self.re.is_zero() {
                BigRational::zero()
            } else {
                &self.re * &k
            },
            im: if self.im.is_zero() {
                BigRational::zero()
            } else {
                &self.im * &k
            },
        }
    }

    pub fn mul_bigint(&self, k: &BigInt) -> Self {
        let k = BigRational::from_integer(k.clone());
        Self {
            re: if self.re.is_zero() {
                BigRational::zero()
            } else {
                &self.re * &k
            },
            im: if self.im.is_zero() {
                BigRational::zero()
            } else {
                &self.im * &k
            },
        }
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, e: i32) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Scalar::one();
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// Real part rendered as `p/q` (or `p` for integers).
    pub fn re_string(&self) -> String {
        rational_to_string(&self.re)
    }

    pub fn im_string(&self) -> String {
        rational_to_string(&self.im)
    }

    /// Inverse of [`Scalar::re_string`] / [`Scalar::im_string`].
    pub fn from_parts_str(re: &str, im: &str) -> Result<Self> {
        Ok(Self {
            re: parse_rational(re)?,
            im: parse_rational(im)?,
        })
    }
}

pub fn rational_to_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        let q = BigInt::from_str(q.trim()).map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("{s}: zero denominator")));
        }
        Ok(BigRational::new(p, q))
    } else {
        let p = BigInt::from_str(s).map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        Ok(BigRational::from_integer(p))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", rational_to_string(&self.re)),
            (true, false) => write!(f, "{}*i", rational_to_string(&self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                write!(
                    f,
                    "{}{}{}*i",
                    rational_to_string(&self.re),
                    sign,
                    rational_to_string(&self.im.abs())
                )
            }
        }
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        // most coefficients are purely real or purely imaginary
        let zero = BigRational::zero;
        let rr = if self.re.is_zero() || rhs.re.is_zero() {
            zero()
        } else {
            &self.re * &rhs.re
        };
        let ii = if self.im.is_zero() || rhs.im.is_zero() {
            zero()
        } else {
            &self.im * &rhs.im
        };
        let ri = if self.re.is_zero() || rhs.im.is_zero() {
            zero()
        } else {
            &self.re * &rhs.im
        };
        let ir = if self.im.is_zero() || rhs.re.is_zero() {
            zero()
        } else {
            &self.im * &rhs.re
        };
        Scalar {
            re: rr - ii,
            im: ri + ir,
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        &self + &rhs
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        if !rhs.re.is_zero() {
            self.re += &rhs.re;
        }
        if !rhs.im.is_zero() {
            self.im += &rhs.im;
        }
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        if !rhs.re.is_zero() {
            self.re -= &rhs.re;
        }
        if !rhs.im.is_zero() {
            self.im -= &rhs.im;
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v)
    }
}

/// Wire form of a scalar: both parts as exact `p/q` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarRepr {
    pub re: String,
    pub im: String,
}

impl From<&Scalar> for ScalarRepr {
    fn from(s: &Scalar) -> Self {
        Self {
            re: s.re_string(),
            im: s.im_string(),
        }
    }
}

impl TryFrom<&ScalarRepr> for Scalar {
    type Error = Error;
    fn try_from(r: &ScalarRepr) -> Result<Self> {
        Scalar::from_parts_str(&r.re, &r.im)
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScalarRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ScalarRepr::deserialize(d)?;
        Scalar::try_from(&repr).map_err(serde::de::Error::custom)
    }
}
