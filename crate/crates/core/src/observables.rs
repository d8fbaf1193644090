//! Detection-side quantities: survival probabilities, the oscillation
//! wavelength, out-of-phase baselines, and seeded detector event counts.

use std::io::Write;

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::entanglement;
use crate::error::{Error, Result};
use crate::evolution::{
    phase_bundle_at, proper_time_at, relative_pair_phases, two_particle_amplitudes,
    TwoParticleAmplitudes,
};
use crate::exec::{try_map_indexed, Exec};
use crate::export::num;
use crate::model::{gamma_speed, Constants, ExperimentConfig, ParticleSpec};
use crate::phasekernel::{Extended, PrecisePhase};
use crate::rng;

fn sin_sqr_reduced(phase: &PrecisePhase) -> Result<f64> {
    let s = phase.reduce_mod_2pi()?.sin();
    Ok(s * s)
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// `1 - sin²(2θ) sin²(Δm c² τ / 2ħ)` for a lone particle.
pub fn survival_isolated(consts: &Constants, spec: &ParticleSpec, tau: &Extended) -> Result<f64> {
    if tau.signum() < 0 {
        return Err(Error::InvalidInput("negative evolution time".into()));
    }
    let c = Extended::exact(consts.c());
    let phi = spec.dm_ext() * &c * &c * tau / &Extended::exact(consts.hbar()).mul_pow2(1);
    let s = sin_sqr_reduced(&PrecisePhase::new(phi))?;
    Ok(clamp_prob(1.0 - spec.mixing_amplitude() * s))
}

/// The closed-form pair probability `1 - sin²(2θ) sin²(Φ + Φ_G)`, with the
/// gravitational phase added in full to the free oscillation phase.
pub fn survival_shifted_pair(
    consts: &Constants,
    spec: &ParticleSpec,
    d: f64,
    tau: &Extended,
) -> Result<f64> {
    let b = phase_bundle_at(consts, spec, d, tau.clone())?;
    let s = sin_sqr_reduced(&(b.phi + b.phi_g))?;
    Ok(clamp_prob(1.0 - spec.mixing_amplitude() * s))
}

/// `|<ν1 ν1|ψ>|²` for an arbitrary pair state.
pub fn joint_flavour_probability(state: &TwoParticleAmplitudes, theta: f64) -> f64 {
    let w = [theta.cos(), theta.sin()];
    let mut amp = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            amp += state.a[i][j] * (w[i] * w[j]);
        }
    }
    clamp_prob(amp.norm_sqr())
}

/// `<ν1| ρ_A |ν1>` with `ρ_A` the reduced state of the first particle.
pub fn marginal_flavour_probability(state: &TwoParticleAmplitudes, theta: f64) -> Result<f64> {
    let rho = entanglement::reduce(state)?;
    let (c1, c2) = (theta.cos(), theta.sin());
    let m = rho.matrix();
    let p = c1 * c1 * m[0][0].re + c2 * c2 * m[1][1].re + 2.0 * c1 * c2 * m[0][1].re;
    Ok(clamp_prob(p))
}

/// Probability that both members of the evolved pair are detected as `ν1`.
pub fn survival_exact_joint(
    consts: &Constants,
    spec: &ParticleSpec,
    d: f64,
    tau: &Extended,
) -> Result<f64> {
    let st = two_particle_amplitudes(consts, spec, d, tau)?;
    Ok(joint_flavour_probability(&st, spec.theta))
}

/// Probability that one member of the evolved pair is detected as `ν1`,
/// whatever happens to its partner.
pub fn survival_exact_marginal(
    consts: &Constants,
    spec: &ParticleSpec,
    d: f64,
    tau: &Extended,
) -> Result<f64> {
    let st = two_particle_amplitudes(consts, spec, d, tau)?;
    marginal_flavour_probability(&st, spec.theta)
}

/// Closed form of [`survival_exact_marginal`]: the partner in `|m_j>` shifts
/// the oscillation argument by half of `G m_j Δm τ / (d ħ)`.
pub fn survival_marginal_closed_form(
    consts: &Constants,
    spec: &ParticleSpec,
    d: f64,
    tau: &Extended,
) -> Result<f64> {
    let (p12, p22) = relative_pair_phases(consts, spec, d, tau)?;
    // branch j = 1: E21 - E11 = p12; branch j = 2: E22 - E12 = p22 - p12
    let half = |p: &PrecisePhase| -> Result<f64> {
        let s = (p.reduce_mod_2pi()? / 2.0).sin();
        Ok(s * s)
    };
    let s1 = half(&p12)?;
    let s2 = half(&(&p22 - &p12))?;
    let (c1, c2) = spec.weights();
    Ok(clamp_prob(
        1.0 - spec.mixing_amplitude() * (c1 * c1 * s1 + c2 * c2 * s2),
    ))
}

/// `λ = 2π c γ / ω` with `ω = Δm c² / (2ħ)`, i.e. `4π ħ γ / (Δm c)`.
///
/// This is the lab length over which the flavour amplitude `sin(ωτ)`
/// completes a cycle; the detection probability, which goes as `sin²`,
/// repeats over [`probability_period`].
pub fn oscillation_wavelength(consts: &Constants, spec: &ParticleSpec, gamma: f64) -> f64 {
    let omega = spec.dm * consts.c() * consts.c() / (2.0 * consts.hbar());
    2.0 * std::f64::consts::PI * consts.c() * gamma / omega
}

/// Lab-frame spatial period of the lone-particle survival probability,
/// `π γ v / ω = λ v / (2c)`.
pub fn probability_period(consts: &Constants, spec: &ParticleSpec, gamma: f64) -> f64 {
    let omega = spec.dm * consts.c() * consts.c() / (2.0 * consts.hbar());
    std::f64::consts::PI * gamma_speed(consts, gamma) / omega
}

/// A baseline at which the gravitational phase is `(n + ½) π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutOfPhaseBaseline {
    pub n: u32,
    pub baseline_m: f64,
    /// `Φ_G` recomputed at `baseline_m`.
    pub phi_g_rad: f64,
}

/// Baseline `L_n` at which `Φ_G = (n + ½) π`, in extended precision.
pub fn out_of_phase_baseline_exact(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    n: u32,
) -> Result<Extended> {
    let coupling = Extended::exact(consts.g()) * spec.m1_ext() * spec.dm_ext();
    if coupling.is_zero() {
        return Err(Error::InvalidInput(
            "no gravitational phase: G m1 Δm is zero".into(),
        ));
    }
    let d = config.separation;
    let unit = PrecisePhase::pi().into_radians()
        * Extended::exact(d)
        * Extended::exact(consts.hbar())
        * Extended::exact(gamma_speed(consts, config.gamma))
        / coupling;
    Ok(unit * Extended::from_int(2 * n as i64 + 1).mul_pow2(-1))
}

/// `L_n = (n + ½) π d ħ γ v / (G m1 Δm)` for `n = 0..=n_max`.
pub fn out_of_phase_baselines(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    n_max: u32,
) -> Result<Vec<OutOfPhaseBaseline>> {
    let d = config.separation;
    (0..=n_max)
        .map(|n| {
            let baseline_m = out_of_phase_baseline_exact(consts, spec, config, n)?.to_f64();
            let tau = proper_time_at(consts, config.gamma, &Extended::exact(baseline_m))?;
            let phi_g_rad = phase_bundle_at(consts, spec, d, tau)?.phi_g.to_f64();
            Ok(OutOfPhaseBaseline {
                n,
                baseline_m,
                phi_g_rad,
            })
        })
        .collect()
}

/// Evenly spaced extended-precision points `start + k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrid {
    pub start: Extended,
    pub step: Extended,
    pub points: usize,
}

impl LinearGrid {
    /// `points` values from `min` to `max` inclusive.
    pub fn span(min: Extended, max: Extended, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidInput(format!(
                "a range needs at least 2 points, got {points}"
            )));
        }
        if max <= min {
            return Err(Error::InvalidInput("range maximum must exceed minimum".into()));
        }
        let step = (&max - &min) / Extended::from_int(points as i64 - 1);
        Ok(Self {
            start: min,
            step,
            points,
        })
    }

    pub fn point(&self, k: usize) -> Extended {
        &self.start + &(&self.step * &Extended::from_int(k as i64))
    }
}

/// All four detection probabilities at one baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub baseline_m: f64,
    pub p_isolated: f64,
    pub p_shifted_pair: f64,
    pub p_joint: f64,
    pub p_marginal: f64,
}

pub fn survival_curve(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    baselines: &LinearGrid,
    exec: Exec,
) -> Result<Vec<CurvePoint>> {
    let d = config.separation;
    try_map_indexed(exec, baselines.points, |k| {
        let l = baselines.point(k);
        let tau = proper_time_at(consts, config.gamma, &l)?;
        Ok(CurvePoint {
            baseline_m: l.to_f64(),
            p_isolated: survival_isolated(consts, spec, &tau)?,
            p_shifted_pair: survival_shifted_pair(consts, spec, d, &tau)?,
            p_joint: survival_exact_joint(consts, spec, d, &tau)?,
            p_marginal: survival_exact_marginal(consts, spec, d, &tau)?,
        })
    })
}

pub fn write_curve_csv<W: Write>(out: &mut W, curve: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(out, "L_m,P_isolated,P_paper_pair,P_joint,P_marginal")?;
    for p in curve {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(p.baseline_m),
            num(p.p_isolated),
            num(p.p_shifted_pair),
            num(p.p_joint),
            num(p.p_marginal)
        )?;
    }
    Ok(())
}

/// How a gravitationally coupled pair registers at the detector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoubleHitModel {
    /// Both partners detected as `ν1`.
    #[default]
    Joint,
    /// One partner detected as `ν1`, partner unconstrained.
    Marginal,
    /// The closed-form pair probability of [`survival_shifted_pair`].
    ShiftedPair,
}

impl DoubleHitModel {
    pub fn probability(
        self,
        consts: &Constants,
        spec: &ParticleSpec,
        d: f64,
        tau: &Extended,
    ) -> Result<f64> {
        match self {
            Self::Joint => survival_exact_joint(consts, spec, d, tau),
            Self::Marginal => survival_exact_marginal(consts, spec, d, tau),
            Self::ShiftedPair => survival_shifted_pair(consts, spec, d, tau),
        }
    }
}

/// Inputs of an event simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPlan {
    /// Bin centres (lab baselines).
    pub bins: LinearGrid,
    pub n_pairs: u64,
    /// Share of emitted pairs whose partners travel together.
    pub affected_fraction: f64,
    pub seed: u64,
    pub model: DoubleHitModel,
}

impl EventPlan {
    /// `n_bins` bins of width `d` starting at the configured baseline,
    /// half of the pairs affected.
    pub fn detector_bins(config: &ExperimentConfig, n_bins: usize, n_pairs: u64, seed: u64) -> Self {
        let width = Extended::exact(config.separation);
        Self {
            bins: LinearGrid {
                start: Extended::exact(config.baseline) + width.mul_pow2(-1),
                step: width,
                points: n_bins,
            },
            n_pairs,
            affected_fraction: 0.5,
            seed,
            model: DoubleHitModel::Joint,
        }
    }
}

/// Detector counts in one baseline bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSample {
    pub bin: usize,
    /// Bin centre as the nearest double; the exact centre is `plan.bins.point(bin)`.
    pub l_bin_m: f64,
    pub n_pairs_emitted: u64,
    /// Pairs whose partners travelled together, `round(fraction * n_pairs)`.
    pub n_affected: u64,
    pub n_double_hits: u64,
    pub n_single_hits: u64,
    pub rng_seed: u64,
}

fn binomial<R: rand::Rng>(n: u64, p: f64, rng: &mut R) -> Result<u64> {
    let dist = Binomial::new(n, clamp_prob(p))
        .map_err(|e| Error::InvalidInput(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Draws double hits for affected pairs and single hits for unaffected
/// particles in every bin. Bin `k` uses substream `k` of the seed.
pub fn simulate_events(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    plan: &EventPlan,
    exec: Exec,
) -> Result<Vec<EventSample>> {
    if plan.bins.points == 0 || plan.n_pairs == 0 {
        return Err(Error::InvalidInput("need at least one bin and one pair".into()));
    }
    if !(0.0..=1.0).contains(&plan.affected_fraction) {
        return Err(Error::InvalidInput(format!(
            "affected fraction {} outside [0, 1]",
            plan.affected_fraction
        )));
    }
    let n_affected = (plan.affected_fraction * plan.n_pairs as f64).round() as u64;
    let n_affected = n_affected.min(plan.n_pairs);
    let d = config.separation;
    try_map_indexed(exec, plan.bins.points, |k| {
        let l = plan.bins.point(k);
        let tau = proper_time_at(consts, config.gamma, &l)?;
        let p_double = plan.model.probability(consts, spec, d, &tau)?;
        let p_single = survival_isolated(consts, spec, &tau)?;
        let mut rng = rng::substream(plan.seed, k as u64);
        let n_double_hits = binomial(n_affected, p_double, &mut rng)?;
        let n_single_hits = binomial(plan.n_pairs - n_affected, p_single, &mut rng)?;
        Ok(EventSample {
            bin: k,
            l_bin_m: l.to_f64(),
            n_pairs_emitted: plan.n_pairs,
            n_affected,
            n_double_hits,
            n_single_hits,
            rng_seed: plan.seed,
        })
    })
}

pub fn write_events_csv<W: Write>(out: &mut W, events: &[EventSample]) -> std::io::Result<()> {
    writeln!(out, "L_bin_m,n_pairs,n_double,n_single")?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{}",
            num(e.l_bin_m),
            e.n_pairs_emitted,
            e.n_double_hits,
            e.n_single_hits
        )?;
    }
    Ok(())
}
