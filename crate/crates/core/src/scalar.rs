//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! Everything that can run at more than one precision is written against
//! [`Real`]. `f32` and `f64` implement it directly; [`Mp`] wraps an MPFR float
//! whose mantissa width is fixed at compile time, so that `Zero`/`One` and the
//! other constructor-style traits have a well-defined precision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use rug::float::Constant;
use rug::Float;

/// Real scalar field used by the generic algorithms.
pub trait Real:
    Num
    + Signed
    + Clone
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Width of the significand in bits.
    const MANTISSA_BITS: u32;

    /// Converts an `f64` literal. The conversion is exact for every type
    /// at least as wide as `f64`.
    fn of(x: f64) -> Self;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn pi() -> Self;
    fn is_finite(&self) -> bool;

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits every Real")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Unit roundoff, `2^(1 - MANTISSA_BITS)`.
    fn epsilon() -> Self {
        let mut e = Self::one();
        let half = Self::of(0.5);
        for _ in 1..Self::MANTISSA_BITS {
            e *= half.clone();
        }
        e
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base.clone();
            }
            base = base.clone() * base;
            k >>= 1;
        }
        acc
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

macro_rules! impl_real_prim {
    ($t:ty, $bits:expr) => {
        impl Real for $t {
            const MANTISSA_BITS: u32 = $bits;
            fn of(x: f64) -> Self {
                x as $t
            }
            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }
            fn ln(&self) -> Self {
                <$t>::ln(*self)
            }
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn sin(&self) -> Self {
                <$t>::sin(*self)
            }
            fn cos(&self) -> Self {
                <$t>::cos(*self)
            }
            fn pi() -> Self {
                std::f64::consts::PI as $t
            }
            fn is_finite(&self) -> bool {
                <$t>::is_finite(*self)
            }
            fn epsilon() -> Self {
                <$t>::EPSILON
            }
        }
    };
}

impl_real_prim!(f64, 53);
impl_real_prim!(f32, 24);

/// MPFR float with a `BITS`-bit significand.
#[derive(Clone)]
pub struct Mp<const BITS: u32>(Float);

impl<const BITS: u32> Mp<BITS> {
    pub fn from_float(x: Float) -> Self {
        if x.prec() == BITS {
            Mp(x)
        } else {
            Mp(Float::with_val(BITS, x))
        }
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }
}

impl<const BITS: u32> fmt::Debug for Mp<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp<{}>({})", BITS, self.0.to_string_radix(10, Some(24)))
    }
}

impl<const BITS: u32> fmt::Display for Mp<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => f.write_str(&self.0.to_string_radix(10, Some(p.max(1)))),
            None => f.write_str(&self.0.to_string_radix(10, Some(24))),
        }
    }
}

impl<const BITS: u32> PartialEq for Mp<BITS> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl<const BITS: u32> PartialOrd for Mp<BITS> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! mp_binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl<const BITS: u32> $tr for Mp<BITS> {
            type Output = Self;
            fn $m(self, rhs: Self) -> Self {
                Mp($tr::$m(self.0, &rhs.0))
            }
        }
        impl<'a, const BITS: u32> $tr<&'a Mp<BITS>> for Mp<BITS> {
            type Output = Self;
            fn $m(self, rhs: &'a Self) -> Self {
                Mp($tr::$m(self.0, &rhs.0))
            }
        }
        impl<const BITS: u32> $atr for Mp<BITS> {
            fn $am(&mut self, rhs: Self) {
                $atr::$am(&mut self.0, &rhs.0);
            }
        }
    };
}

mp_binop!(Add, add, AddAssign, add_assign);
mp_binop!(Sub, sub, SubAssign, sub_assign);
mp_binop!(Mul, mul, MulAssign, mul_assign);
mp_binop!(Div, div, DivAssign, div_assign);

impl<const BITS: u32> Rem for Mp<BITS> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        let q = Float::with_val(BITS, &self.0 / &rhs.0).trunc();
        Mp(self.0 - q * &rhs.0)
    }
}

impl<const BITS: u32> Neg for Mp<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        Mp(-self.0)
    }
}

impl<const BITS: u32> Zero for Mp<BITS> {
    fn zero() -> Self {
        Mp(Float::new(BITS))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<const BITS: u32> One for Mp<BITS> {
    fn one() -> Self {
        Mp(Float::with_val(BITS, 1))
    }
}

impl<const BITS: u32> Num for Mp<BITS> {
    type FromStrRadixErr = rug::float::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(Mp(Float::with_val(BITS, parsed)))
    }
}

impl<const BITS: u32> Signed for Mp<BITS> {
    fn abs(&self) -> Self {
        Mp(self.0.clone().abs())
    }
    fn abs_sub(&self, other: &Self) -> Self {
        if self.0 <= other.0 {
            Self::zero()
        } else {
            Mp(Float::with_val(BITS, &self.0 - &other.0))
        }
    }
    fn signum(&self) -> Self {
        if self.0.is_zero() {
            Self::zero()
        } else {
            Mp(self.0.clone().signum())
        }
    }
    fn is_positive(&self) -> bool {
        self.0.is_sign_positive() && !self.0.is_zero()
    }
    fn is_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }
}

impl<const BITS: u32> FromPrimitive for Mp<BITS> {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Mp(Float::with_val(BITS, n)))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Mp(Float::with_val(BITS, n)))
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(Mp(Float::with_val(BITS, x)))
    }
}

impl<const BITS: u32> ToPrimitive for Mp<BITS> {
    fn to_i64(&self) -> Option<i64> {
        let x = self.0.to_f64();
        (x.is_finite() && x.abs() < 9.2e18).then(|| x.trunc() as i64)
    }
    fn to_u64(&self) -> Option<u64> {
        let x = self.0.to_f64();
        (x.is_finite() && x > -1.0 && x < 1.8e19).then(|| x.trunc() as u64)
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0.to_f64())
    }
}

impl<const BITS: u32> Real for Mp<BITS> {
    const MANTISSA_BITS: u32 = BITS;
    fn of(x: f64) -> Self {
        Mp(Float::with_val(BITS, x))
    }
    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }
    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }
    fn sin(&self) -> Self {
        Mp(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        Mp(self.0.clone().cos())
    }
    fn pi() -> Self {
        Mp(Float::with_val(BITS, Constant::Pi))
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

/// `e^z` for a complex argument over any [`Real`].
pub fn cexp<T: Real>(z: &Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    Complex::new(m.clone() * z.im.cos(), m * z.im.sin())
}

/// Modulus `|z|`.
pub fn cabs<T: Real>(z: &Complex<T>) -> T {
    (z.re.clone() * z.re.clone() + z.im.clone() * z.im.clone()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_matches_mantissa() {
        assert_eq!(<f64 as Real>::epsilon(), f64::EPSILON);
        let e = <Mp<256> as Real>::epsilon();
        let expect = Float::with_val(256, Float::i_exp(1, -255));
        assert_eq!(e.0, expect);
    }

    #[test]
    fn mp_arithmetic_and_functions() {
        type M = Mp<256>;
        let two = M::of(2.0);
        let s = two.sqrt();
        let back = s.clone() * s;
        assert!((back - M::of(2.0)).abs() < M::of(1e-70));
        let pi = M::pi();
        assert!(pi.sin().abs() < M::of(1e-70));
        assert!((M::one().exp().ln() - M::one()).abs() < M::of(1e-70));
        assert_eq!(M::of(7.0) % M::of(3.0), M::of(1.0));
        assert_eq!((-M::of(3.5)).abs(), M::of(3.5));
        assert!((-M::of(3.5)).is_negative());
        assert_eq!(M::of(0.1).to_f64_lossy(), 0.1);
    }

    #[test]
    fn powi_by_squaring() {
        assert_eq!(3.0f64.powi(5) as f64, Real::powi(&3.0f64, 5));
        assert_eq!(Real::powi(&Mp::<128>::of(2.0), 10), Mp::<128>::of(1024.0));
    }

    #[test]
    fn complex_exponential() {
        let z = Complex::new(0.0f64, std::f64::consts::PI);
        let e = cexp(&z);
        assert!((e.re + 1.0).abs() < 1e-15 && e.im.abs() < 1e-15);
        assert!((cabs(&Complex::new(3.0f64, 4.0)) - 5.0).abs() < 1e-15);
    }
}
