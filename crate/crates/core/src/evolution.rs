//! Free and gravitationally coupled evolution of the mass components.
//!
//! Convention: every mass component evolves as `exp(-i E τ / ħ)` over the
//! rest-frame duration `τ`. Two-particle amplitudes are stored relative to
//! the `|m1 m1>` component, whose phase is a global phase.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{gamma_speed, Constants, ExperimentConfig, ParticleSpec};
use crate::phasekernel::{Extended, PrecisePhase};

/// Rest-frame duration for a lab baseline `L`: `τ = L / (γ v)`.
pub fn proper_time(consts: &Constants, config: &ExperimentConfig) -> Result<Extended> {
    let baseline = Extended::from_f64(config.baseline)
        .ok_or_else(|| Error::InvalidInput("non-finite baseline".into()))?;
    proper_time_at(consts, config.gamma, &baseline)
}

/// [`proper_time`] for an extended-precision baseline.
pub fn proper_time_at(consts: &Constants, gamma: f64, baseline: &Extended) -> Result<Extended> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(Error::InvalidInput(format!("Lorentz factor {gamma} < 1")));
    }
    if baseline.is_zero() {
        return Ok(Extended::zero());
    }
    let gv = gamma_speed(consts, gamma);
    if gv == 0.0 {
        return Err(Error::InvalidInput(
            "a pair at rest (gamma = 1) never covers a nonzero baseline".into(),
        ));
    }
    Ok(baseline / &Extended::exact(gv))
}

/// Lab baseline covered during rest-frame time `tau`.
pub fn baseline_for(consts: &Constants, gamma: f64, tau: &Extended) -> Extended {
    tau * &Extended::exact(gamma_speed(consts, gamma))
}

fn check_tau(tau: &Extended) -> Result<()> {
    if tau.signum() < 0 {
        return Err(Error::InvalidInput("negative evolution time".into()));
    }
    Ok(())
}

fn check_separation(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::SingularSeparation)
    }
}

fn unit(phase: &PrecisePhase, sign: f64) -> Result<Complex64> {
    let r = phase.reduce_mod_2pi()?;
    Ok(Complex64::from_polar(1.0, sign * r))
}

/// Amplitudes on `|m1>`, `|m2>` of a particle created as the flavour state.
pub fn single_particle_state(
    consts: &Constants,
    spec: &ParticleSpec,
    tau: &Extended,
) -> Result<[Complex64; 2]> {
    check_tau(tau)?;
    let (c1, c2) = spec.weights();
    let c = Extended::exact(consts.c());
    let hbar = Extended::exact(consts.hbar());
    let rest_phase = |m: Extended| PrecisePhase::new(m * &c * &c * tau / &hbar);
    Ok([
        unit(&rest_phase(spec.m1_ext()), -1.0)? * c1,
        unit(&rest_phase(spec.m2_ext()), -1.0)? * c2,
    ])
}

/// Pure two-particle state in the `|m_i> ⊗ |m_j>` basis; `a[i][j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoParticleAmplitudes {
    pub a: [[Complex64; 2]; 2],
}

impl TwoParticleAmplitudes {
    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self {
            a: [[a11, a12], [a21, a22]],
        }
    }

    /// Real amplitudes `(a11, a12, a21, a22)`.
    pub fn from_real(a: [f64; 4]) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self::new(c(a[0]), c(a[1]), c(a[2]), c(a[3]))
    }

    /// Flavour-weighted state `c_i c_j exp(-i phases[i][j])`.
    pub fn from_phases(theta: f64, phases: [[f64; 2]; 2]) -> Self {
        let w = [theta.cos(), theta.sin()];
        let mut a = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] = Complex64::from_polar(w[i] * w[j], -phases[i][j]);
            }
        }
        Self { a }
    }

    /// Tensor product of two one-particle states.
    pub fn product(x: [Complex64; 2], y: [Complex64; 2]) -> Self {
        Self::new(x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        let mut a = self.a;
        a.iter_mut().flatten().for_each(|z| *z *= k);
        Self { a }
    }
}

/// Exact phases of `α12/α11` and `α22/α11` over rest-frame time `tau`.
///
/// `E_ij = (m_i + m_j) c² + G m_i m_j / d`; the differences from `E_11` are
/// formed algebraically so that no 10^40-rad absolute phase is ever built.
pub fn relative_pair_phases(
    consts: &Constants,
    spec: &ParticleSpec,
    d: f64,
    tau: &Extended,
) -> Result<(PrecisePhase, PrecisePhase)> {
    check_separation(d)?;
    check_tau(tau)?;
    let c = Extended::exact(consts.c());
    let c2 = &c * &c;
    let g = Extended::exact(consts.g());
    let d = Extended::exact(d);
    let hbar = Extended::exact(consts.hbar());
    let m1 = spec.m1_ext();
    let dm = spec.dm_ext();

    // E12 - E11 = Δm c² + G m1 Δm / d
    let e12 = &dm * &c2 + &(&g * &m1 * &dm) / &d;
    // E22 - E11 = 2 Δm c² + G Δm (2 m1 + Δm) / d
    let e22 = (&dm * &c2).mul_pow2(1) + &(&g * &dm * &(m1.mul_pow2(1) + &dm)) / &d;
    let scale = |e: Extended| PrecisePhase::new(e * tau / &hbar);
    Ok((scale(e12), scale(e22)))
}

/// The evolved pair state `Σ c_i c_j α_ij |m_i m_j>` with `α11` factored out.
pub fn two_particle_amplitudes(
    consts: &Constants,
    spec: &ParticleSpec,
    d: f64,
    tau: &Extended,
) -> Result<TwoParticleAmplitudes> {
    let (p12, p22) = relative_pair_phases(consts, spec, d, tau)?;
    let (c1, c2) = spec.weights();
    let a11 = Complex64::new(c1 * c1, 0.0);
    let a12 = unit(&p12, -1.0)? * (c1 * c2);
    let a22 = unit(&p22, -1.0)? * (c2 * c2);
    Ok(TwoParticleAmplitudes::new(a11, a12, a12, a22))
}

/// Phases accumulated over one rest-frame duration.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBundle {
    /// Free oscillation phase `Δm c² τ / (2ħ)`.
    pub phi: PrecisePhase,
    /// Gravitational phase `G m1 Δm τ / (d ħ)`.
    pub phi_g: PrecisePhase,
    /// Entangling phase `G Δm² τ / (d ħ)`.
    pub phi_e: PrecisePhase,
    pub tau: Extended,
}

pub fn phase_bundle(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
) -> Result<PhaseBundle> {
    let tau = proper_time(consts, config)?;
    phase_bundle_at(consts, spec, config.separation, tau)
}

pub fn phase_bundle_at(
    consts: &Constants,
    spec: &ParticleSpec,
    d: f64,
    tau: Extended,
) -> Result<PhaseBundle> {
    check_separation(d)?;
    check_tau(&tau)?;
    let c = Extended::exact(consts.c());
    let g = Extended::exact(consts.g());
    let hbar = Extended::exact(consts.hbar());
    let d_hbar = Extended::exact(d) * &hbar;
    let m1 = spec.m1_ext();
    let dm = spec.dm_ext();

    let phi = &dm * &c * &c * &tau / &hbar.mul_pow2(1);
    let g_dm_tau = &g * &dm * &tau;
    let phi_g = &g_dm_tau * &m1 / &d_hbar;
    let phi_e = &g_dm_tau * &dm / &d_hbar;
    Ok(PhaseBundle {
        phi: PrecisePhase::new(phi),
        phi_g: PrecisePhase::new(phi_g),
        phi_e: PrecisePhase::new(phi_e),
        tau,
    })
}
