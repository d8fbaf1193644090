//! Physical constants, particle and experiment descriptions, validation and
//! the JSON config format.

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result, Violation};
use crate::phasekernel::Extended;

/// Gravitational constant, reduced Planck constant and speed of light (SI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    g: f64,
    hbar: f64,
    c: f64,
}

impl Constants {
    pub const CODATA2018: Constants = Constants {
        g: 6.67430e-11,
        hbar: 1.054571817e-34,
        c: 2.99792458e8,
    };

    pub const VERSION_TAG: &'static str = "CODATA2018";

    /// CODATA 2018 with `G = 0`: switches the gravitational coupling off.
    pub const fn without_gravity() -> Constants {
        Constants {
            g: 0.0,
            ..Self::CODATA2018
        }
    }

    pub const fn g(&self) -> f64 {
        self.g
    }

    pub const fn hbar(&self) -> f64 {
        self.hbar
    }

    pub const fn c(&self) -> f64 {
        self.c
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::CODATA2018
    }
}

/// Two-mass-state particle: lighter mass `m1`, splitting `dm = m2 - m1`, and
/// the mixing angle between the flavour and mass bases.
///
/// The splitting is stored directly because in the interesting regimes it is
/// far below the resolution of `m1` as a double (10^-25 kg on 10^-8 kg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec {
    pub m1: f64,
    pub dm: f64,
    pub theta: f64,
}

impl ParticleSpec {
    pub fn new(m1: f64, dm: f64, theta: f64) -> Self {
        Self { m1, dm, theta }
    }

    /// From both masses. `m2 - m1` is taken in double precision, so use
    /// [`ParticleSpec::new`] when the splitting is below the ulp of `m1`.
    pub fn from_masses(m1: f64, m2: f64, theta: f64) -> Self {
        Self::new(m1, m2 - m1, theta)
    }

    pub fn m1_ext(&self) -> Extended {
        Extended::exact(self.m1)
    }

    pub fn dm_ext(&self) -> Extended {
        Extended::exact(self.dm)
    }

    /// `m1 + dm`, exact.
    pub fn m2_ext(&self) -> Extended {
        self.m1_ext() + self.dm_ext()
    }

    pub fn m2(&self) -> f64 {
        self.m2_ext().to_f64()
    }

    /// Flavour-state weights `(cos θ, sin θ)` on `|m1>`, `|m2>`.
    pub fn weights(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    /// `sin²(2θ)`, the oscillation amplitude.
    pub fn mixing_amplitude(&self) -> f64 {
        let s = (2.0 * self.theta).sin();
        s * s
    }
}

/// Geometry and kinematics of the source/detector arrangement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Pair separation, also the source and detector size (m).
    pub separation: f64,
    /// Source to detector distance in the lab frame (m).
    pub baseline: f64,
    /// Lorentz factor of the pair.
    pub gamma: f64,
    /// Nearby background mass (kg). Zero means none.
    pub background_mass: f64,
    /// Distance to the background mass (m).
    pub background_distance: f64,
    /// Initial wave-packet width (m); `None` selects the optimal width.
    pub initial_spread: Option<f64>,
}

pub fn speed_from_gamma(consts: &Constants, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(Error::InvalidInput(format!("Lorentz factor {gamma} < 1")));
    }
    // √((1 - 1/γ)(1 + 1/γ)) never rounds above 1, unlike √(γ² - 1) / γ
    let beta = ((gamma - 1.0) / gamma * (1.0 + 1.0 / gamma)).sqrt().min(1.0);
    Ok(consts.c * beta)
}

/// `γ v = c √(γ² - 1)`, factored to avoid cancellation near `γ = 1`.
pub(crate) fn gamma_speed(consts: &Constants, gamma: f64) -> f64 {
    consts.c * ((gamma - 1.0) * (gamma + 1.0)).sqrt()
}

/// `c - v = c / (γ² (1 + v/c))`, accurate when `v` is close to `c`.
pub fn speed_deficit(consts: &Constants, gamma: f64) -> Result<f64> {
    let v = speed_from_gamma(consts, gamma)?;
    Ok(consts.c / (gamma * gamma * (1.0 + v / consts.c)))
}

fn positive(out: &mut Vec<Violation>, field: &'static str, value: f64) {
    if !(value.is_finite() && value > 0.0) {
        out.push(Violation {
            field,
            value,
            reason: "must be finite and strictly positive",
        });
    }
}

/// Checks every invariant and returns the inputs unchanged, or the complete
/// list of violations.
pub fn validate(
    spec: ParticleSpec,
    config: ExperimentConfig,
) -> Result<(ParticleSpec, ExperimentConfig)> {
    let mut v = Vec::new();
    positive(&mut v, "m1_kg", spec.m1);
    if !(spec.dm.is_finite() && spec.dm > 0.0) {
        v.push(Violation {
            field: "dm_kg",
            value: spec.dm,
            reason: "mass splitting m2 - m1 must be positive",
        });
    }
    if !(spec.theta.is_finite() && (0.0..=std::f64::consts::FRAC_PI_2).contains(&spec.theta)) {
        v.push(Violation {
            field: "theta_rad",
            value: spec.theta,
            reason: "mixing angle must lie in [0, pi/2]",
        });
    }
    positive(&mut v, "d_m", config.separation);
    positive(&mut v, "L_m", config.baseline);
    if !(config.gamma.is_finite() && config.gamma >= 1.0) {
        v.push(Violation {
            field: "gamma",
            value: config.gamma,
            reason: "Lorentz factor must be >= 1",
        });
    }
    if !(config.background_mass.is_finite() && config.background_mass >= 0.0) {
        v.push(Violation {
            field: "M_kg",
            value: config.background_mass,
            reason: "background mass must be finite and non-negative",
        });
    }
    positive(&mut v, "R_m", config.background_distance);
    if let Some(delta) = config.initial_spread {
        positive(&mut v, "delta_m", delta);
    }
    if v.is_empty() {
        Ok((spec, config))
    } else {
        Err(Error::Validation(v))
    }
}

/// A particle and an experiment, as read from or written to a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub particle: ParticleSpec,
    pub experiment: ExperimentConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct ConfigIn {
    m1_kg: Box<RawValue>,
    #[serde(default)]
    m2_kg: Option<Box<RawValue>>,
    #[serde(default)]
    dm_kg: Option<Box<RawValue>>,
    theta_rad: f64,
    d_m: f64,
    L_m: f64,
    gamma: f64,
    M_kg: f64,
    R_m: f64,
    #[serde(default)]
    delta_m: Option<f64>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ConfigOut<'a> {
    m1_kg: f64,
    m2_kg: &'a RawValue,
    theta_rad: f64,
    d_m: f64,
    L_m: f64,
    gamma: f64,
    M_kg: f64,
    R_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_m: Option<f64>,
}

fn raw_decimal(raw: &RawValue, key: &str) -> Result<Extended> {
    let text = raw.get().trim().trim_matches('"');
    Extended::from_decimal_str(text).map_err(|_| Error::Config(format!("{key}: not a number")))
}

impl Setup {
    pub fn new(particle: ParticleSpec, experiment: ExperimentConfig) -> Self {
        Self {
            particle,
            experiment,
        }
    }

    /// Parses the JSON config. Mass literals are read as exact decimals, so
    /// `m2_kg` may differ from `m1_kg` below double resolution; `dm_kg` may
    /// be given instead of `m2_kg`. Unknown keys are rejected. The result is
    /// not validated.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ConfigIn =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let m1 = raw_decimal(&raw.m1_kg, "m1_kg")?;
        let dm = match (&raw.m2_kg, &raw.dm_kg) {
            (Some(m2), None) => (raw_decimal(m2, "m2_kg")? - &m1).to_f64(),
            (None, Some(dm)) => raw_decimal(dm, "dm_kg")?.to_f64(),
            _ => {
                return Err(Error::Config(
                    "exactly one of m2_kg and dm_kg is required".into(),
                ))
            }
        };
        Ok(Self {
            particle: ParticleSpec::new(m1.to_f64(), dm, raw.theta_rad),
            experiment: ExperimentConfig {
                separation: raw.d_m,
                baseline: raw.L_m,
                gamma: raw.gamma,
                background_mass: raw.M_kg,
                background_distance: raw.R_m,
                initial_spread: raw.delta_m,
            },
        })
    }

    /// Serializes with `m2_kg` written to 40 significant digits, so that
    /// reading the document back recovers `dm`.
    pub fn to_json(&self) -> Result<String> {
        // the reader subtracts the decimal m1 literal, not the double
        let m1_literal = Extended::from_decimal_str(&format!("{:e}", self.particle.m1))?;
        let m2 = (m1_literal + self.particle.dm_ext()).to_decimal_string(40);
        let m2 = RawValue::from_string(m2).map_err(|e| Error::Config(e.to_string()))?;
        let out = ConfigOut {
            m1_kg: self.particle.m1,
            m2_kg: &m2,
            theta_rad: self.particle.theta,
            d_m: self.experiment.separation,
            L_m: self.experiment.baseline,
            gamma: self.experiment.gamma,
            M_kg: self.experiment.background_mass,
            R_m: self.experiment.background_distance,
            delta_m: self.experiment.initial_spread,
        };
        serde_json::to_string_pretty(&out).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(self) -> Result<Self> {
        validate(self.particle, self.experiment).map(|(p, e)| Self::new(p, e))
    }
}
