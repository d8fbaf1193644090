//! Loading the JSON config and applying command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use clap::Args;
use massosc::{Extended, Setup};
use serde_json::value::RawValue;

use crate::UsageError;

/// Per-field overrides. Flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Lighter rest mass (kg), as an exact decimal
    #[arg(long = "m1-kg", value_name = "DECIMAL", allow_hyphen_values = true)]
    m1: Option<String>,
    /// Heavier rest mass (kg), as an exact decimal
    #[arg(long = "m2-kg", value_name = "DECIMAL", allow_hyphen_values = true, conflicts_with = "dm")]
    m2: Option<String>,
    /// Mass splitting m2 - m1 (kg), instead of --m2-kg
    #[arg(long = "dm-kg", value_name = "DECIMAL", allow_hyphen_values = true)]
    dm: Option<String>,
    #[arg(long = "theta-rad", allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Pair separation and detector size (m)
    #[arg(long = "d-m", allow_negative_numbers = true)]
    d: Option<f64>,
    /// Source to detector baseline (m)
    #[arg(long = "L-m", allow_negative_numbers = true)]
    baseline: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Background mass (kg)
    #[arg(long = "M-kg", allow_negative_numbers = true)]
    background_mass: Option<f64>,
    /// Distance to the background mass (m)
    #[arg(long = "R-m", allow_negative_numbers = true)]
    background_distance: Option<f64>,
    /// Initial wave-packet width (m)
    #[arg(long = "delta-m", allow_negative_numbers = true)]
    delta: Option<f64>,
}

fn decimal(key: &str, s: &str) -> anyhow::Result<Box<RawValue>> {
    Extended::from_decimal_str(s).map_err(|_| UsageError(format!("--{key}: not a decimal number: {s:?}")))?;
    Ok(RawValue::from_string(serde_json::to_string(s)?)?)
}

fn number(x: f64) -> anyhow::Result<Box<RawValue>> {
    Ok(RawValue::from_string(serde_json::to_string(&x)?)?)
}

impl Overrides {
    fn apply(&self, doc: &mut BTreeMap<String, Box<RawValue>>) -> anyhow::Result<()> {
        if let Some(s) = &self.m1 {
            doc.insert("m1_kg".into(), decimal("m1-kg", s)?);
        }
        if let Some(s) = &self.m2 {
            doc.remove("dm_kg");
            doc.insert("m2_kg".into(), decimal("m2-kg", s)?);
        }
        if let Some(s) = &self.dm {
            doc.remove("m2_kg");
            doc.insert("dm_kg".into(), decimal("dm-kg", s)?);
        }
        let plain = [
            ("theta_rad", self.theta),
            ("d_m", self.d),
            ("L_m", self.baseline),
            ("gamma", self.gamma),
            ("M_kg", self.background_mass),
            ("R_m", self.background_distance),
            ("delta_m", self.delta),
        ];
        for (key, value) in plain {
            if let Some(x) = value {
                doc.insert(key.into(), number(x)?);
            }
        }
        Ok(())
    }
}

/// Reads, overrides and validates. The file itself is never written.
pub fn load(path: &Path, overrides: &Overrides) -> anyhow::Result<Setup> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: BTreeMap<String, Box<RawValue>> = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    overrides.apply(&mut doc)?;
    let merged = serde_json::to_string(&doc).context("re-encoding config")?;
    let setup = Setup::from_json(&merged)?;
    Ok(setup.validate()?)
}
