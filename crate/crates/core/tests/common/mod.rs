#![allow(dead_code)]

use massosc::{Constants, ExperimentConfig, Extended, ParticleSpec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::f64::consts::FRAC_PI_4;

pub const K: Constants = Constants::CODATA2018;

pub fn to_rat(x: &Extended) -> BigRational {
    let (m, e) = x.parts();
    let two = BigInt::from(2);
    if e >= 0 {
        BigRational::from_integer(m * num_traits::pow(two, e as usize))
    } else {
        BigRational::new(m.clone(), num_traits::pow(two, (-e) as usize))
    }
}

pub fn pow2(e: i32) -> BigRational {
    let mut r = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    for _ in 0..e.unsigned_abs() {
        r = if e > 0 { r * &two } else { r / &two };
    }
    r
}

pub fn planck_spec() -> ParticleSpec {
    ParticleSpec::new(1e-8, 1e-25, FRAC_PI_4)
}

/// Lab flight time 0.1 s at γ = 1e4, so the baseline is 0.1 v.
pub fn planck_config() -> ExperimentConfig {
    let v = massosc::model::speed_from_gamma(&K, 1e4).unwrap();
    ExperimentConfig {
        separation: 1e-15,
        baseline: 0.1 * v,
        gamma: 1e4,
        background_mass: 6e24,
        background_distance: 1e7,
        initial_spread: None,
    }
}

pub fn neutrino_spec() -> ParticleSpec {
    ParticleSpec::new(1e-38, 1e-38, FRAC_PI_4)
}

/// Smallest circular distance between two angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let d = (a - b).rem_euclid(t);
    d.min(t - d)
}
