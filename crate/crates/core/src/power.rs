//! Number of detected pairs needed to tell the gravitationally shifted
//! oscillation from the unshifted one.
//!
//! Each trial draws `n` affected pairs and `n` unaffected particles exactly
//! as [`simulate_events`](crate::observables::simulate_events) does for one
//! bin (double hits first, then single hits, from substream `trial` of the
//! seed), then applies a pooled two-proportion z-test to the two hit rates.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::evolution::{phase_bundle_at, proper_time_at};
use crate::exec::{map_indexed, Exec};
use crate::model::{Constants, ExperimentConfig, ParticleSpec};
use crate::observables::{probability_period, survival_isolated, DoubleHitModel};
use crate::phasekernel::Extended;
use crate::rng;

/// Reduced gravitational phases at or below this are treated as zero.
pub const MIN_RESOLVABLE_PHASE: f64 = 1e-6;

pub const METHOD: &str = "two-proportion z-test; doubling then bisection over n";

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOptions {
    pub trials: usize,
    /// Fraction of trials that must reject the null hypothesis.
    pub power: f64,
    /// Give up beyond this many pairs per population.
    pub max_n: u64,
    /// Measurement baseline; the configured baseline when `None`.
    pub baseline: Option<Extended>,
    pub model: DoubleHitModel,
    pub exec: Exec,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            power: 0.9,
            max_n: 1 << 48,
            baseline: None,
            model: DoubleHitModel::ShiftedPair,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub n_required: u64,
    pub confidence: f64,
    /// `|Φ_G|` reduced into `[0, π]` at the measurement baseline.
    pub phase_resolution_rad: f64,
    pub trials: usize,
    /// Fraction of trials rejecting at `n_required`.
    pub power: f64,
    pub method: String,
    pub p_affected: f64,
    pub p_unaffected: f64,
    pub baseline_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PowerOutcome {
    Resolved(PowerEstimate),
    NotResolvable {
        phase_resolution_rad: f64,
        reason: String,
    },
}

fn z_critical(confidence: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(0.5 * (1.0 + confidence))
}

fn rejects(k1: u64, k2: u64, n: u64, z_crit: f64) -> bool {
    let nf = n as f64;
    let pooled = (k1 + k2) as f64 / (2.0 * nf);
    let var = pooled * (1.0 - pooled) * 2.0 / nf;
    if var <= 0.0 {
        return false;
    }
    let z = (k1 as f64 - k2 as f64).abs() / nf / var.sqrt();
    z > z_crit
}

/// Counts `(affected hits, unaffected hits)` of one trial.
pub fn trial_counts(p_affected: f64, p_unaffected: f64, n: u64, seed: u64, trial: u64) -> (u64, u64) {
    let mut rng = rng::substream(seed, trial);
    let draw = |p: f64, rng: &mut _| {
        Binomial::new(n, p.clamp(0.0, 1.0))
            .expect("probability clamped into [0, 1]")
            .sample(rng)
    };
    let k1 = draw(p_affected, &mut rng);
    let k2 = draw(p_unaffected, &mut rng);
    (k1, k2)
}

/// Fraction of `trials` seeded trials whose z-test rejects at size `n`.
pub fn empirical_power(
    p_affected: f64,
    p_unaffected: f64,
    n: u64,
    confidence: f64,
    seed: u64,
    trials: usize,
    exec: Exec,
) -> f64 {
    let z = z_critical(confidence);
    let hits = map_indexed(exec, trials, |t| {
        let (k1, k2) = trial_counts(p_affected, p_unaffected, n, seed, t as u64);
        rejects(k1, k2, n, z)
    });
    hits.iter().filter(|&&h| h).count() as f64 / trials as f64
}

/// Smallest `n` reaching the target power for two known hit probabilities,
/// with the power achieved there; `None` if `max_n` is not enough.
pub fn required_events_for_rates(
    p_affected: f64,
    p_unaffected: f64,
    confidence: f64,
    seed: u64,
    opts: &PowerOptions,
) -> Result<Option<(u64, f64)>> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput(format!("confidence {confidence} outside (0, 1)")));
    }
    if opts.trials == 0 || !(opts.power > 0.0 && opts.power <= 1.0) {
        return Err(Error::InvalidInput("need trials >= 1 and power in (0, 1]".into()));
    }
    let power_at = |n: u64| {
        empirical_power(p_affected, p_unaffected, n, confidence, seed, opts.trials, opts.exec)
    };
    let mut hi = 1u64;
    let mut hi_power = power_at(hi);
    while hi_power < opts.power {
        if hi >= opts.max_n {
            return Ok(None);
        }
        hi = (hi * 2).min(opts.max_n);
        hi_power = power_at(hi);
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let p = power_at(mid);
        if p >= opts.power {
            hi = mid;
            hi_power = p;
        } else {
            lo = mid;
        }
    }
    Ok(Some((hi, hi_power)))
}

/// Pairs needed to separate the double-hit rate of gravitationally coupled
/// pairs from the single-hit rate of uncoupled particles at the measurement
/// baseline.
pub fn required_events(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    confidence: f64,
    seed: u64,
    opts: &PowerOptions,
) -> Result<PowerOutcome> {
    let baseline = match &opts.baseline {
        Some(l) => l.clone(),
        None => Extended::exact(config.baseline),
    };
    let d = config.separation;
    let tau = proper_time_at(consts, config.gamma, &baseline)?;
    let bundle = phase_bundle_at(consts, spec, d, tau.clone())?;
    let resolution = bundle.phi_g.reduce_signed()?.abs();
    if resolution <= MIN_RESOLVABLE_PHASE {
        return Ok(PowerOutcome::NotResolvable {
            phase_resolution_rad: resolution,
            reason: format!(
                "reduced gravitational phase {resolution:e} rad is below {MIN_RESOLVABLE_PHASE:e} rad"
            ),
        });
    }
    let p_affected = opts.model.probability(consts, spec, d, &tau)?;
    let p_unaffected = survival_isolated(consts, spec, &tau)?;
    match required_events_for_rates(p_affected, p_unaffected, confidence, seed, opts)? {
        Some((n_required, power)) => Ok(PowerOutcome::Resolved(PowerEstimate {
            n_required,
            confidence,
            phase_resolution_rad: resolution,
            trials: opts.trials,
            power,
            method: METHOD.to_string(),
            p_affected,
            p_unaffected,
            baseline_m: baseline.to_f64(),
        })),
        None => Ok(PowerOutcome::NotResolvable {
            phase_resolution_rad: resolution,
            reason: format!(
                "hit rates {p_affected} and {p_unaffected} not separable with {} pairs",
                opts.max_n
            ),
        }),
    }
}

/// The baseline within one probability period after `near` where the two
/// hit rates differ most, sampled on `samples` points.
pub fn max_contrast_baseline(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    near: &Extended,
    model: DoubleHitModel,
    samples: usize,
) -> Result<Extended> {
    let period = Extended::exact(probability_period(consts, spec, config.gamma));
    let step = period / Extended::from_int(samples.max(1) as i64);
    let mut best = (near.clone(), -1.0);
    for k in 0..samples.max(1) {
        let l = near + &(&step * &Extended::from_int(k as i64));
        let tau = proper_time_at(consts, config.gamma, &l)?;
        let gap = (model.probability(consts, spec, config.separation, &tau)?
            - survival_isolated(consts, spec, &tau)?)
        .abs();
        if gap > best.1 {
            best = (l, gap);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_values() {
        assert!((z_critical(0.95) - 1.959964).abs() < 1e-5);
        assert!((z_critical(0.99) - 2.575829).abs() < 1e-5);
    }

    #[test]
    fn full_swing_needs_few_pairs() {
        let opts = PowerOptions::default();
        let (n, p) = required_events_for_rates(1.0, 0.0, 0.95, 1, &opts).unwrap().unwrap();
        assert_eq!(n, 2);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn identical_rates_never_resolve() {
        let opts = PowerOptions {
            max_n: 1 << 12,
            trials: 50,
            ..Default::default()
        };
        assert_eq!(required_events_for_rates(0.4, 0.4, 0.95, 3, &opts).unwrap(), None);
    }

    #[test]
    fn bad_confidence() {
        let opts = PowerOptions::default();
        assert!(required_events_for_rates(0.1, 0.2, 1.0, 0, &opts).is_err());
        assert!(required_events_for_rates(0.1, 0.2, 0.0, 0, &opts).is_err());
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let seq = PowerOptions {
            exec: Exec::Sequential,
            ..Default::default()
        };
        let par = PowerOptions::default();
        let a = required_events_for_rates(0.55, 0.45, 0.95, 17, &seq).unwrap();
        let b = required_events_for_rates(0.55, 0.45, 0.95, 17, &par).unwrap();
        assert_eq!(a, b);
    }
}
