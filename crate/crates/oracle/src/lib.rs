//! Reference arithmetic for tests.
//!
//! Everything here is exact rational arithmetic on `BigRational`, with π
//! generated from Machin's formula. None of it shares code with the
//! `massosc` phase kernel, which pins π from a decimal string and works on
//! dyadic big floats.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::sync::OnceLock;

/// Decimal digits carried by [`pi`].
pub const PI_DIGITS: usize = 120;

/// `arctan(1/x) * scale` by its Taylor series, in integers.
fn arctan_inv(x: i64, scale: &BigInt) -> BigInt {
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut power = scale / &x;
    let mut sum = BigInt::zero();
    let mut n = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * n + 1);
        if n.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        n += 1;
    }
    sum
}

/// π to [`PI_DIGITS`] digits: `16 arctan(1/5) - 4 arctan(1/239)`.
pub fn pi() -> &'static BigRational {
    static PI: OnceLock<BigRational> = OnceLock::new();
    PI.get_or_init(|| {
        let guard = 20;
        let scale = num_traits::pow(BigInt::from(10), PI_DIGITS + guard);
        let v = arctan_inv(5, &scale) * 16 - arctan_inv(239, &scale) * 4;
        BigRational::new(v, scale)
    })
}

pub fn two_pi() -> BigRational {
    pi() * BigInt::from(2)
}

/// Exact value of a finite double.
pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

pub fn product(xs: &[f64]) -> BigRational {
    xs.iter().fold(BigRational::one(), |acc, &x| acc * rat(x))
}

/// `x mod 2π` in `[0, 2π)`, rounded to a double.
pub fn reduce_mod_2pi(x: &BigRational) -> f64 {
    let tp = two_pi();
    let k = (x / &tp).floor();
    let r = x - k * tp;
    r.to_f64().expect("reduced value fits a double")
}

/// Relative difference `|a - b| / |b|` as a double.
pub fn rel_diff(a: &BigRational, b: &BigRational) -> f64 {
    if b.is_zero() {
        return a.abs().to_f64().unwrap_or(f64::INFINITY);
    }
    ((a - b) / b).abs().to_f64().unwrap_or(f64::INFINITY)
}

/// `n` significant decimal digits of `x` (truncated), for digit comparisons.
pub fn decimal_digits(x: &BigRational, n: usize) -> String {
    let mut v = x.abs();
    let ten = BigRational::from_integer(BigInt::from(10));
    let one = BigRational::one();
    if v.is_zero() {
        return "0".repeat(n);
    }
    while v >= ten {
        v /= &ten;
    }
    while v < one {
        v *= &ten;
    }
    let scaled = v * BigRational::from_integer(num_traits::pow(BigInt::from(10), n - 1));
    scaled.floor().to_integer().to_string()
}

/// Period of a uniformly sampled signal from the peak of its discrete-time
/// Fourier transform, refined by golden-section search between neighbouring
/// bins. `spacing` is the sample distance.
pub fn fitted_period(ys: &[f64], spacing: f64) -> f64 {
    let n = ys.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, y) in ys.iter().enumerate() {
            let a = std::f64::consts::TAU * f * k as f64;
            re += (y - mean) * a.cos();
            im += (y - mean) * a.sin();
        }
        re * re + im * im
    };
    let nf = n as f64;
    let best = (1..n / 2)
        .max_by(|&a, &b| power(a as f64 / nf).total_cmp(&power(b as f64 / nf)))
        .expect("at least four samples");
    let (mut lo, mut hi) = ((best as f64 - 1.0) / nf, (best as f64 + 1.0) / nf);
    let g = 0.618_033_988_749_895;
    for _ in 0..100 {
        let a = hi - (hi - lo) * g;
        let b = lo + (hi - lo) * g;
        if power(a) < power(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    spacing / (0.5 * (lo + hi))
}
