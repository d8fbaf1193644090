//! Extended-precision phase arithmetic.
//!
//! Quantum phases in this crate routinely reach 10^20 to 10^40 radians while
//! the observables only depend on the phase modulo 2π. An `f64` at 10^20 has
//! an ulp of roughly 10^4, so every phase is accumulated as an exact binary
//! rational (`mantissa * 2^exponent`, big-integer mantissa) and only rounded
//! to `f64` after reduction.
//!
//! Products and sums of doubles are exact. Division keeps [`DIV_BITS`]
//! significant bits (about 154 decimal digits). Reduction divides by a 2π
//! constant pinned from a 200-digit decimal expansion of π, so the remainder
//! is exact relative to that constant and the only error is
//! `|k| * |2π_pinned - 2π|`, far below 10^-60 rad for phases up to 10^50 rad.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Significant bits kept by a rounded division.
pub const DIV_BITS: u64 = 512;

/// Mantissas wider than this are rounded back to this many bits.
pub const MAX_BITS: u64 = 2048;

/// Largest phase magnitude accepted by [`reduce_mod_2pi`].
pub const MAX_PHASE_RAD: f64 = 1e50;

/// Maximum number of factors accepted by [`phase_from_product`].
pub const MAX_FACTORS: usize = 8;

/// π to 200 decimal places.
pub const PI_DIGITS: &str = "3.\
14159265358979323846264338327950288419716939937510\
58209749445923078164062862089986280348253421170679\
82148086513282306647093844609550582231725359408128\
48111745028410270193852110555964462294895493038196";

/// Exact binary rational `mant * 2^exp` with a big-integer mantissa.
///
/// Values are kept normalized (odd mantissa, or zero with exponent 0), so
/// structural equality is value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Extended {
    mant: BigInt,
    exp: i64,
}

impl Default for Extended {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Debug for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Extended({})", self.to_decimal_string(40))
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(17).max(1);
        f.write_str(&self.to_decimal_string(digits))
    }
}

fn decode_f64(x: f64) -> (i64, i64) {
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), biased - 1075)
    };
    (if negative { -m } else { m }, e)
}

/// `x * 2^e` without intermediate overflow of the scale factor.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    let up = 2f64.powi(1000);
    let down = 2f64.powi(-1000);
    while e > 1000 && x.is_finite() {
        x *= up;
        e -= 1000;
    }
    while e < -1000 && x != 0.0 {
        x *= down;
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Round `m / 2^s` to the nearest integer, ties away from zero.
fn round_shift(m: &BigInt, s: u64) -> BigInt {
    if s == 0 {
        return m.clone();
    }
    let half = BigInt::one() << (s - 1);
    let mag = (m.abs() + half) >> s;
    if m.is_negative() {
        -mag
    } else {
        mag
    }
}

impl Extended {
    pub fn zero() -> Self {
        Self {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    fn normalized(mant: BigInt, exp: i64) -> Self {
        if mant.is_zero() {
            return Self::zero();
        }
        let tz = mant.trailing_zeros().unwrap_or(0);
        let (mut mant, mut exp) = (mant >> tz, exp + tz as i64);
        let bits = mant.bits();
        if bits > MAX_BITS {
            let s = bits - MAX_BITS;
            mant = round_shift(&mant, s);
            exp += s as i64;
            let tz = mant.trailing_zeros().unwrap_or(0);
            mant >>= tz;
            exp += tz as i64;
        }
        Self { mant, exp }
    }

    /// Exact conversion; `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let (m, e) = decode_f64(x);
        Some(Self::normalized(BigInt::from(m), e))
    }

    /// Exact conversion of a value already known to be finite.
    ///
    /// # Panics
    /// On NaN or infinity.
    pub fn exact(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("non-finite value {x} in extended arithmetic"))
    }

    pub fn from_int(n: i64) -> Self {
        Self::normalized(BigInt::from(n), 0)
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::normalized(n, 0)
    }

    /// Parses a decimal literal such as `-1.0000000000000000000000001e-8`.
    ///
    /// Integers and values with non-negative decimal exponent are exact;
    /// everything else is rounded to [`DIV_BITS`] significant bits.
    pub fn from_decimal_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("not a decimal number: {s:?}"));
        let t = s.trim();
        let (neg, t) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (mantissa, exp10) = match t.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = t[i + 1..].parse().map_err(|_| bad())?;
                (&t[..i], e)
            }
            None => (t, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits: String = format!("{int_part}{frac_part}");
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let mut n = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        if neg {
            n = -n;
        }
        let e10 = exp10 - frac_part.len() as i64;
        if e10.unsigned_abs() > 100_000 {
            return Err(bad());
        }
        let ten = BigInt::from(10);
        if e10 >= 0 {
            Ok(Self::from_bigint(n * num_traits::pow(ten, e10 as usize)))
        } else {
            let den = Self::from_bigint(num_traits::pow(ten, (-e10) as usize));
            Ok(Self::from_bigint(n) / den)
        }
    }

    /// `(mantissa, exponent)` with `self = mantissa * 2^exponent`.
    pub fn parts(&self) -> (&BigInt, i64) {
        (&self.mant, self.exp)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Multiplication by `2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            mant: self.mant.clone(),
            exp: self.exp + k,
        }
    }

    /// Index of the bit just above the most significant one: `|x| < 2^top`.
    fn top(&self) -> i64 {
        self.exp + self.mant.bits() as i64
    }

    /// Correctly rounded (to nearest) conversion to `f64`.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let mag = self.mant.magnitude();
        let (top, shift) = if bits > 64 {
            let shift = bits - 64;
            let mut top = (mag >> shift).to_u64().unwrap_or(u64::MAX);
            // sticky bit so that the u64 -> f64 rounding sees discarded bits
            if mag.trailing_zeros().unwrap_or(0) < shift {
                top |= 1;
            }
            (top, shift as i64)
        } else {
            (mag.to_u64().unwrap_or(u64::MAX), 0)
        };
        let v = ldexp(top as f64, self.exp + shift);
        if self.mant.is_negative() {
            -v
        } else {
            v
        }
    }

    /// Nearest integer, ties away from zero.
    pub fn round_to_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            self.mant.clone() << self.exp as u64
        } else {
            round_shift(&self.mant, (-self.exp) as u64)
        }
    }

    /// Largest integer `q` with `q * divisor <= self`. `divisor` must be positive.
    pub fn div_floor(&self, divisor: &Extended) -> BigInt {
        assert!(divisor.signum() > 0, "div_floor needs a positive divisor");
        let shift = self.exp - divisor.exp;
        if shift >= 0 {
            (self.mant.clone() << shift as u64).div_floor(&divisor.mant)
        } else {
            self.mant.div_floor(&(divisor.mant.clone() << (-shift) as u64))
        }
    }

    pub fn checked_div(&self, rhs: &Extended) -> Option<Extended> {
        if rhs.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        let want = DIV_BITS as i64 + rhs.mant.bits() as i64 - self.mant.bits() as i64;
        let k = want.max(0) as u64;
        let num = self.mant.clone() << k;
        let (mut q, r) = num.div_rem(&rhs.mant);
        if (r.abs() << 1u32) >= rhs.mant.abs() {
            if num.sign() == rhs.mant.sign() {
                q += 1;
            } else {
                q -= 1;
            }
        }
        Some(Self::normalized(q, self.exp - rhs.exp - k as i64))
    }

    /// Decimal rendering with `sig` significant digits (rounded).
    pub fn to_decimal_string(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let sig = sig.max(1);
        let approx = self.to_f64().abs();
        let mut est = if approx.is_finite() && approx > 0.0 {
            approx.log10().floor() as i64
        } else {
            (self.top() as f64 * std::f64::consts::LOG10_2).floor() as i64
        };
        let ten = BigInt::from(10);
        loop {
            let k = sig as i64 - 1 - est;
            let scaled = if k >= 0 {
                self * &Self::from_bigint(num_traits::pow(ten.clone(), k as usize))
            } else {
                self / &Self::from_bigint(num_traits::pow(ten.clone(), (-k) as usize))
            };
            let q = scaled.round_to_bigint();
            let digits = q.magnitude().to_string();
            if digits.len() > sig {
                est += 1;
                continue;
            }
            if digits.len() < sig {
                est -= 1;
                continue;
            }
            let sign = if q.is_negative() { "-" } else { "" };
            let (head, tail) = digits.split_at(1);
            return if tail.is_empty() {
                format!("{sign}{head}e{est}")
            } else {
                format!("{sign}{head}.{tail}e{est}")
            };
        }
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Extended {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl Neg for &Extended {
    type Output = Extended;
    fn neg(self) -> Extended {
        Extended {
            mant: -self.mant.clone(),
            exp: self.exp,
        }
    }
}

impl Neg for Extended {
    type Output = Extended;
    fn neg(self) -> Extended {
        Extended {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Add for &Extended {
    type Output = Extended;
    fn add(self, rhs: &Extended) -> Extended {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        // an addend entirely below the rounding precision of the other is dropped
        let gap = self.top() - rhs.top();
        if gap > MAX_BITS as i64 + 2 {
            return self.clone();
        }
        if -gap > MAX_BITS as i64 + 2 {
            return rhs.clone();
        }
        let (hi, lo) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mant = (hi.mant.clone() << (hi.exp - lo.exp) as u64) + &lo.mant;
        Extended::normalized(mant, lo.exp)
    }
}

impl Sub for &Extended {
    type Output = Extended;
    fn sub(self, rhs: &Extended) -> Extended {
        self + &(-rhs)
    }
}

impl Mul for &Extended {
    type Output = Extended;
    fn mul(self, rhs: &Extended) -> Extended {
        Extended::normalized(&self.mant * &rhs.mant, self.exp + rhs.exp)
    }
}

/// Rounded to [`DIV_BITS`] significant bits.
///
/// # Panics
/// On division by zero.
impl Div for &Extended {
    type Output = Extended;
    fn div(self, rhs: &Extended) -> Extended {
        self.checked_div(rhs).expect("extended division by zero")
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Extended {
            type Output = Extended;
            fn $m(self, rhs: Extended) -> Extended { (&self).$m(&rhs) }
        }
        impl $tr<&Extended> for Extended {
            type Output = Extended;
            fn $m(self, rhs: &Extended) -> Extended { (&self).$m(rhs) }
        }
        impl $tr<Extended> for &Extended {
            type Output = Extended;
            fn $m(self, rhs: Extended) -> Extended { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl std::iter::Sum for Extended {
    fn sum<I: Iterator<Item = Extended>>(iter: I) -> Self {
        iter.fold(Extended::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for Extended {
    fn product<I: Iterator<Item = Extended>>(iter: I) -> Self {
        iter.fold(Extended::one(), |a, b| a * b)
    }
}

/// The pinned π, rounded to [`DIV_BITS`] bits.
pub fn pi() -> &'static Extended {
    static PI: OnceLock<Extended> = OnceLock::new();
    PI.get_or_init(|| Extended::from_decimal_str(PI_DIGITS).expect("pinned π parses"))
}

/// Exactly twice [`pi`].
pub fn two_pi() -> &'static Extended {
    static TWO_PI: OnceLock<Extended> = OnceLock::new();
    TWO_PI.get_or_init(|| pi().mul_pow2(1))
}

/// A phase in radians held as an [`Extended`] value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrecisePhase(Extended);

impl PrecisePhase {
    pub fn zero() -> Self {
        Self(Extended::zero())
    }

    pub fn new(radians: Extended) -> Self {
        Self(radians)
    }

    pub fn from_f64(radians: f64) -> Result<Self> {
        Extended::from_f64(radians)
            .map(Self)
            .ok_or_else(|| Error::InvalidInput(format!("non-finite phase {radians}")))
    }

    /// The internal 2π constant as a phase.
    pub fn two_pi() -> Self {
        Self(two_pi().clone())
    }

    /// The internal π constant as a phase.
    pub fn pi() -> Self {
        Self(pi().clone())
    }

    pub fn radians(&self) -> &Extended {
        &self.0
    }

    pub fn into_radians(self) -> Extended {
        self.0
    }

    /// Unreduced value rounded to `f64`.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn scale(&self, k: &Extended) -> Self {
        Self(&self.0 * k)
    }

    pub fn reduce_mod_2pi(&self) -> Result<f64> {
        reduce_mod_2pi(self)
    }

    /// Reduced into `[-π, π)`.
    pub fn reduce_signed(&self) -> Result<f64> {
        let (r, two_pi) = reduce_exact(self)?;
        let centered = if r >= *pi() { r - two_pi } else { r };
        Ok(centered.to_f64())
    }
}

impl Add for PrecisePhase {
    type Output = PrecisePhase;
    fn add(self, rhs: PrecisePhase) -> PrecisePhase {
        PrecisePhase(self.0 + rhs.0)
    }
}

impl Add for &PrecisePhase {
    type Output = PrecisePhase;
    fn add(self, rhs: &PrecisePhase) -> PrecisePhase {
        PrecisePhase(&self.0 + &rhs.0)
    }
}

impl Sub for PrecisePhase {
    type Output = PrecisePhase;
    fn sub(self, rhs: PrecisePhase) -> PrecisePhase {
        PrecisePhase(self.0 - rhs.0)
    }
}

impl Sub for &PrecisePhase {
    type Output = PrecisePhase;
    fn sub(self, rhs: &PrecisePhase) -> PrecisePhase {
        PrecisePhase(&self.0 - &rhs.0)
    }
}

impl Neg for PrecisePhase {
    type Output = PrecisePhase;
    fn neg(self) -> PrecisePhase {
        PrecisePhase(-self.0)
    }
}

/// Exact product of up to [`MAX_FACTORS`] finite doubles.
pub fn phase_from_product(factors: &[f64]) -> Result<PrecisePhase> {
    if factors.is_empty() || factors.len() > MAX_FACTORS {
        return Err(Error::InvalidInput(format!(
            "expected 1..={MAX_FACTORS} factors, got {}",
            factors.len()
        )));
    }
    let mut acc = Extended::one();
    for &f in factors {
        let x = Extended::from_f64(f)
            .ok_or_else(|| Error::InvalidInput(format!("non-finite factor {f}")))?;
        acc = acc * x;
    }
    Ok(PrecisePhase(acc))
}

fn reduce_exact(phase: &PrecisePhase) -> Result<(Extended, &'static Extended)> {
    let approx = phase.0.to_f64().abs();
    if approx > MAX_PHASE_RAD {
        return Err(Error::Range(approx));
    }
    let tp = two_pi();
    let k = phase.0.div_floor(tp);
    let r = &phase.0 - &(Extended::from_bigint(k) * tp);
    debug_assert!(r.signum() >= 0 && r < *tp);
    Ok((r, tp))
}

/// Remainder of `phase` modulo the pinned 2π, in `[0, 2π)`.
///
/// The quotient is found by exact big-integer floor division, so the
/// remainder is exact before the final rounding to `f64`.
pub fn reduce_mod_2pi(phase: &PrecisePhase) -> Result<f64> {
    let (r, _) = reduce_exact(phase)?;
    Ok(r.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext(x: f64) -> Extended {
        Extended::exact(x)
    }

    #[test]
    fn f64_round_trip() {
        for x in [1.0, -2.5, 1e-300, 5e-324, 1.7976931348623157e308, 0.1, -3.0e20] {
            assert_eq!(ext(x).to_f64(), x);
        }
        assert!(Extended::from_f64(f64::NAN).is_none());
        assert!(Extended::from_f64(f64::INFINITY).is_none());
    }

    #[test]
    fn identity_and_zero_factor() {
        assert_eq!(phase_from_product(&[1.0]).unwrap().to_f64(), 1.0);
        assert!(phase_from_product(&[2.0, 0.0, 5.0]).unwrap().radians().is_zero());
    }

    #[test]
    fn product_rejects_bad_input() {
        assert!(matches!(
            phase_from_product(&[1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(phase_from_product(&[1.0; 9]).is_err());
        assert!(phase_from_product(&[]).is_err());
    }

    #[test]
    fn reduce_trivial_points() {
        assert_eq!(reduce_mod_2pi(&PrecisePhase::zero()).unwrap(), 0.0);
        assert!(reduce_mod_2pi(&PrecisePhase::two_pi()).unwrap().abs() < 1e-30);
        let big = PrecisePhase::pi().scale(&Extended::from_decimal_str("1e25").unwrap());
        let r = reduce_mod_2pi(&big).unwrap();
        assert!(r.abs() < 1e-10, "{r}");
    }

    #[test]
    fn reduce_negative_lands_in_range() {
        let r = reduce_mod_2pi(&PrecisePhase::from_f64(-1.0).unwrap()).unwrap();
        assert!((r - (std::f64::consts::TAU - 1.0)).abs() < 1e-15);
        let s = PrecisePhase::from_f64(-1.0).unwrap().reduce_signed().unwrap();
        assert!((s + 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduce_range_error() {
        let p = PrecisePhase::from_f64(1e51).unwrap();
        assert!(matches!(reduce_mod_2pi(&p), Err(Error::Range(_))));
        assert!(reduce_mod_2pi(&PrecisePhase::from_f64(1e50).unwrap()).is_ok());
    }

    #[test]
    fn division_is_close() {
        let q = ext(1.0) / ext(3.0);
        let back = &q * &ext(3.0);
        let err = (back - ext(1.0)).abs();
        assert!(err < ext(1e-150));
    }

    #[test]
    fn decimal_parse_and_print() {
        let x = Extended::from_decimal_str("1.00000000000000000000000001e-8").unwrap();
        let d = &x - &Extended::from_decimal_str("1e-8").unwrap();
        assert!((d.to_f64() - 1e-34).abs() < 1e-48);
        assert_eq!(Extended::from_decimal_str("-12.5").unwrap().to_f64(), -12.5);
        assert_eq!(ext(1234.5).to_decimal_string(5), "1.2345e3");
        assert_eq!(ext(-0.015625).to_decimal_string(3), "-1.56e-2");
        assert!(Extended::from_decimal_str("1e").is_err());
        assert!(Extended::from_decimal_str("abc").is_err());
        assert!(Extended::from_decimal_str(".").is_err());
    }

    #[test]
    fn ordering() {
        assert!(ext(1.0) < ext(2.0));
        assert!(ext(-1e300) < ext(1e-300));
        assert_eq!(ext(0.5).cmp(&ext(0.5)), Ordering::Equal);
    }
}
