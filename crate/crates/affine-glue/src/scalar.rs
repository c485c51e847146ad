//! Exact arbitrary-precision rational scalars and points of `Q^n`.
//!
//! All geometry in this crate is exact; there is no floating point anywhere
//! in the core. Scalars are kept in canonical form (positive denominator,
//! reduced fraction) by `num-rational`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact rational number `p/q` in lowest terms with `q > 0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(BigRational);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar(BigRational::one())
    }

    pub fn from_int(v: i64) -> Self {
        Scalar(BigRational::from_integer(BigInt::from(v)))
    }

    /// `p/q`. Panics when `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Scalar(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Scalar {
        Scalar(self.0.abs())
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Smallest power of two strictly greater than `self`.
    pub fn next_power_of_two(&self) -> Scalar {
        let mut p = Scalar::one();
        while p <= *self {
            p = &p * &Scalar::from_int(2);
        }
        p
    }

    /// 2^-k for the power-of-two radius schedules.
    pub fn pow2_neg(k: u32) -> Scalar {
        Scalar(BigRational::new(BigInt::one(), BigInt::from(2u32).pow(k)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Parses `"p/q"` or `"p"`. Returns the value and whether the input was
    /// already canonical (reduced, positive denominator).
    pub fn parse(s: &str) -> Result<(Scalar, bool), String> {
        let s = s.trim();
        let (ns, ds) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let n = BigInt::from_str(ns.trim()).map_err(|e| format!("bad numerator {ns:?}: {e}"))?;
        let d = BigInt::from_str(ds.trim()).map_err(|e| format!("bad denominator {ds:?}: {e}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        let v = Scalar(BigRational::new(n.clone(), d.clone()));
        let canonical = v.numer() == &n && v.denom() == &d;
        Ok((v, canonical))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                Scalar((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                Scalar((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                Scalar((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-&self.0)
    }
}

/// A point of `Q^n`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point(pub Vec<Scalar>);

impl Point {
    pub fn origin(n: usize) -> Point {
        Point(vec![Scalar::zero(); n])
    }

    pub fn from_ints(coords: &[i64]) -> Point {
        Point(coords.iter().map(|&c| Scalar::from_int(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.0
    }

    pub fn add(&self, other: &Point) -> Point {
        assert_eq!(self.dim(), other.dim());
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Point) -> Point {
        assert_eq!(self.dim(), other.dim());
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, s: &Scalar) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    /// Linear interpolation `self + t * (other - self)`.
    pub fn lerp(&self, other: &Point, t: &Scalar) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + &(t * &(b - a)))
                .collect(),
        )
    }

    /// Concatenates coordinates: `self × other`.
    pub fn concat(&self, other: &Point) -> Point {
        let mut c = self.0.clone();
        c.extend(other.0.iter().cloned());
        Point(c)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Taxicab distance `Σ |p_i - q_i|`.
pub fn taxicab(p: &Point, q: &Point) -> Result<Scalar, crate::kernel::KernelError> {
    if p.dim() != q.dim() {
        return Err(crate::kernel::KernelError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    Ok(p.0
        .iter()
        .zip(&q.0)
        .fold(Scalar::zero(), |acc, (a, b)| acc + (a - b).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_canonicalize() {
        let (v, canonical) = Scalar::parse("2/4").unwrap();
        assert_eq!(v, Scalar::ratio(1, 2));
        assert!(!canonical);
        let (v, canonical) = Scalar::parse("-3/6").unwrap();
        assert_eq!(v, Scalar::ratio(-1, 2));
        assert!(!canonical);
        let (v, canonical) = Scalar::parse("7").unwrap();
        assert_eq!(v, Scalar::from_int(7));
        assert!(canonical);
        assert!(Scalar::parse("1/0").is_err());
    }

    #[test]
    fn display_lowest_terms() {
        assert_eq!(Scalar::ratio(10, 27).to_string(), "10/27");
        assert_eq!(Scalar::ratio(4, 2).to_string(), "2");
        assert_eq!(Scalar::ratio(-1, 2).to_string(), "-1/2");
    }

    #[test]
    fn taxicab_examples() {
        let p = Point::from_ints(&[1, 2]);
        let q = Point::from_ints(&[4, 0]);
        assert_eq!(taxicab(&p, &q).unwrap(), Scalar::from_int(5));
        assert_eq!(taxicab(&p, &p).unwrap(), Scalar::zero());
        let o = Point::from_ints(&[0, 0]);
        let r = Point::from_ints(&[1, 2]);
        assert_eq!(taxicab(&o, &r).unwrap(), Scalar::from_int(3));
        assert!(taxicab(&p, &Point::from_ints(&[1])).is_err());
    }

    #[test]
    fn next_power_of_two() {
        assert_eq!(Scalar::from_int(5).next_power_of_two(), Scalar::from_int(8));
        assert_eq!(Scalar::from_int(8).next_power_of_two(), Scalar::from_int(16));
        assert_eq!(Scalar::ratio(1, 2).next_power_of_two(), Scalar::from_int(1));
    }
}
