//! Experimental constraints (wavelength detectability, wave-packet
//! spreading, background masses) and parameter-grid scans over them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::phase_bundle;
use crate::exec::{try_map_indexed, Exec};
use crate::export::num;
use crate::model::{speed_from_gamma, validate, Constants, ExperimentConfig, ParticleSpec};
use crate::observables::oscillation_wavelength;

/// Margin reported when the bound is infinite (no background mass).
pub const MARGIN_CAP: f64 = 1e300;

/// Margins in `[MARGINAL_FLOOR, 1)` count as order-of-magnitude passes.
pub const MARGINAL_FLOOR: f64 = 0.1;

/// Largest number of points a scan may evaluate.
pub const MAX_GRID_POINTS: u128 = 100_000_000;

pub const WEAK_RANGE_NOTE: &str = "weak-interaction range ~1e-18 m is negligible at the \
detector scale d; it is not evaluated as a constraint";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// Fails strictly but within an order of magnitude.
    Marginal,
    Fail,
}

impl Status {
    pub fn from_margin(margin: f64) -> Self {
        if margin > 1.0 {
            Self::Pass
        } else if margin >= MARGINAL_FLOOR {
            Self::Marginal
        } else {
            Self::Fail
        }
    }
}

/// One inequality `lhs < rhs`, with `margin = rhs / lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub status: Status,
}

impl Constraint {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let margin = if rhs.is_infinite() || (lhs == 0.0 && rhs > 0.0) {
            MARGIN_CAP
        } else {
            (rhs / lhs).min(MARGIN_CAP)
        };
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            pass: lhs < rhs,
            status: Status::from_margin(margin),
        }
    }
}

/// Overall outcome of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    Marginal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `d < λ`
    pub wavelength: Constraint,
    /// `spread < d / 2`
    pub spreading: Constraint,
    /// `d² / R² < m1 / M`
    pub background: Constraint,
    pub lambda_m: f64,
    pub phi_rad: f64,
    pub phi_g_rad: f64,
    pub phi_e_rad: f64,
    /// `2 √(ħ L / (γ m1 v))`, the smallest reachable final spread.
    pub optimal_spread_m: f64,
    pub note: String,
}

impl FeasibilityReport {
    pub fn constraints(&self) -> [&Constraint; 3] {
        [&self.wavelength, &self.spreading, &self.background]
    }

    pub fn verdict(&self) -> Verdict {
        let statuses = self.constraints().map(|c| c.status);
        if statuses.contains(&Status::Fail) {
            Verdict::Infeasible
        } else if statuses.contains(&Status::Marginal) {
            Verdict::Marginal
        } else {
            Verdict::Feasible
        }
    }
}

pub fn check_constraints(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
) -> Result<FeasibilityReport> {
    let (spec, config) = validate(*spec, *config)?;
    let d = config.separation;
    let lambda = oscillation_wavelength(consts, &spec, config.gamma);

    let v = speed_from_gamma(consts, config.gamma)?;
    // ħ L / (γ m v): squared optimal spread over four
    let spread_scale = consts.hbar() * config.baseline / (config.gamma * spec.m1 * v);
    let optimal = 2.0 * spread_scale.sqrt();
    let spread = match config.initial_spread {
        Some(delta) => delta + spread_scale / delta,
        None => optimal,
    };

    let ratio = d / config.background_distance;
    let bg_rhs = if config.background_mass == 0.0 {
        f64::INFINITY
    } else {
        spec.m1 / config.background_mass
    };

    let b = phase_bundle(consts, &spec, &config)?;
    Ok(FeasibilityReport {
        wavelength: Constraint::new("wavelength_detectability", d, lambda),
        spreading: Constraint::new("wave_packet_spreading", spread, 0.5 * d),
        background: Constraint::new("background_mass", ratio * ratio, bg_rhs),
        lambda_m: lambda,
        phi_rad: b.phi.to_f64(),
        phi_g_rad: b.phi_g.to_f64(),
        phi_e_rad: b.phi_e.to_f64(),
        optimal_spread_m: optimal,
        note: WEAK_RANGE_NOTE.to_string(),
    })
}

/// Parameters that a scan axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    M1,
    Dm,
    Theta,
    D,
    #[serde(rename = "L")]
    L,
    Gamma,
    #[serde(rename = "M")]
    BackgroundMass,
    #[serde(rename = "R")]
    BackgroundDistance,
}

impl ScanParam {
    pub const ALL: [ScanParam; 8] = [
        Self::M1,
        Self::Dm,
        Self::Theta,
        Self::D,
        Self::L,
        Self::Gamma,
        Self::BackgroundMass,
        Self::BackgroundDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::M1 => "m1",
            Self::Dm => "dm",
            Self::Theta => "theta",
            Self::D => "d",
            Self::L => "L",
            Self::Gamma => "gamma",
            Self::BackgroundMass => "M",
            Self::BackgroundDistance => "R",
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Self::M1 => "m1_kg",
            Self::Dm => "dm_kg",
            Self::Theta => "theta_rad",
            Self::D => "d_m",
            Self::L => "L_m",
            Self::Gamma => "gamma",
            Self::BackgroundMass => "M_kg",
            Self::BackgroundDistance => "R_m",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scan parameter {s:?}")))
    }

    pub fn get(self, spec: &ParticleSpec, config: &ExperimentConfig) -> f64 {
        match self {
            Self::M1 => spec.m1,
            Self::Dm => spec.dm,
            Self::Theta => spec.theta,
            Self::D => config.separation,
            Self::L => config.baseline,
            Self::Gamma => config.gamma,
            Self::BackgroundMass => config.background_mass,
            Self::BackgroundDistance => config.background_distance,
        }
    }

    pub fn set(self, spec: &mut ParticleSpec, config: &mut ExperimentConfig, value: f64) {
        match self {
            Self::M1 => spec.m1 = value,
            Self::Dm => spec.dm = value,
            Self::Theta => spec.theta = value,
            Self::D => config.separation = value,
            Self::L => config.baseline = value,
            Self::Gamma => config.gamma = value,
            Self::BackgroundMass => config.background_mass = value,
            Self::BackgroundDistance => config.background_distance = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanAxis {
    pub param: ScanParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl ScanAxis {
    /// Parses `name:min:max:points[:lin|log]`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad axis {s:?}, want name:min:max:points[:lin|log]"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(bad());
        }
        let spacing = match parts.get(4).copied() {
            None | Some("lin") | Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            _ => return Err(bad()),
        };
        Ok(Self {
            param: ScanParam::parse(parts[0])?,
            min: parts[1].parse().map_err(|_| bad())?,
            max: parts[2].parse().map_err(|_| bad())?,
            points: parts[3].parse().map_err(|_| bad())?,
            spacing,
        })
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            return self.max;
        }
        let t = k as f64 / (self.points - 1) as f64;
        match self.spacing {
            Spacing::Linear => self.min + t * (self.max - self.min),
            Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
        }
    }
}

/// Cartesian grid over 1 to 4 axes, row-major in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub axes: Vec<ScanAxis>,
}

impl ScanGrid {
    pub fn new(axes: Vec<ScanAxis>) -> Result<Self> {
        let g = Self { axes };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if !(1..=4).contains(&self.axes.len()) {
            return Err(Error::InvalidInput(format!(
                "a scan needs 1 to 4 axes, got {}",
                self.axes.len()
            )));
        }
        for a in &self.axes {
            if a.points < 2 || a.min >= a.max || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "axis {}: need min < max and at least 2 points",
                    a.param.name()
                )));
            }
            if a.spacing == Spacing::Log && a.min <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "axis {}: log spacing needs a positive minimum",
                    a.param.name()
                )));
            }
        }
        let total = self.total_points();
        if total > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge {
                points: total,
                limit: MAX_GRID_POINTS,
            });
        }
        Ok(())
    }

    pub fn total_points(&self) -> u128 {
        self.axes.iter().map(|a| a.points as u128).product()
    }

    /// Per-axis indices of row `row`; the last axis varies fastest.
    pub fn indices(&self, mut row: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (slot, a) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = row % a.points;
            row /= a.points;
        }
        idx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub m1_kg: f64,
    pub dm_kg: f64,
    pub theta_rad: f64,
    pub d_m: f64,
    #[serde(rename = "L_m")]
    pub l_m: f64,
    pub gamma: f64,
    #[serde(rename = "M_kg")]
    pub big_m_kg: f64,
    #[serde(rename = "R_m")]
    pub r_m: f64,
    pub lambda_m: f64,
    #[serde(rename = "phi_G_rad")]
    pub phi_g_rad: f64,
    #[serde(rename = "phi_E_rad")]
    pub phi_e_rad: f64,
    pub wl_pass: bool,
    pub spread_pass: bool,
    pub bg_pass: bool,
    pub spread_margin: f64,
    pub wl_margin: f64,
    pub bg_margin: f64,
}

impl ScanRow {
    pub fn new(spec: &ParticleSpec, config: &ExperimentConfig, r: &FeasibilityReport) -> Self {
        Self {
            m1_kg: spec.m1,
            dm_kg: spec.dm,
            theta_rad: spec.theta,
            d_m: config.separation,
            l_m: config.baseline,
            gamma: config.gamma,
            big_m_kg: config.background_mass,
            r_m: config.background_distance,
            lambda_m: r.lambda_m,
            phi_g_rad: r.phi_g_rad,
            phi_e_rad: r.phi_e_rad,
            wl_pass: r.wavelength.pass,
            spread_pass: r.spreading.pass,
            bg_pass: r.background.pass,
            spread_margin: r.spreading.margin,
            wl_margin: r.wavelength.margin,
            bg_margin: r.background.margin,
        }
    }
}

/// Point `row` of the grid applied on top of the templates.
pub fn grid_point(
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    grid: &ScanGrid,
    row: usize,
) -> (ParticleSpec, ExperimentConfig) {
    let (mut s, mut c) = (*spec, *config);
    for (axis, k) in grid.axes.iter().zip(grid.indices(row)) {
        axis.param.set(&mut s, &mut c, axis.value(k));
    }
    (s, c)
}

/// One report per grid point, in row-major order.
pub fn scan(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    grid: &ScanGrid,
    exec: Exec,
) -> Result<Vec<ScanRow>> {
    grid.check()?;
    let n = grid.total_points() as usize;
    try_map_indexed(exec, n, |row| {
        let (s, c) = grid_point(spec, config, grid, row);
        let report = check_constraints(consts, &s, &c)?;
        Ok(ScanRow::new(&s, &c, &report))
    })
}

const SCAN_HEADER: &str = "m1_kg,dm_kg,theta_rad,d_m,L_m,gamma,M_kg,R_m,lambda_m,phi_G_rad,\
phi_E_rad,wl_pass,spread_pass,bg_pass,spread_margin,wl_margin,bg_margin";

pub fn write_scan_csv<W: Write>(out: &mut W, rows: &[ScanRow]) -> std::io::Result<()> {
    writeln!(out, "{SCAN_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.m1_kg),
            num(r.dm_kg),
            num(r.theta_rad),
            num(r.d_m),
            num(r.l_m),
            num(r.gamma),
            num(r.big_m_kg),
            num(r.r_m),
            num(r.lambda_m),
            num(r.phi_g_rad),
            num(r.phi_e_rad),
            r.wl_pass,
            r.spread_pass,
            r.bg_pass,
            num(r.spread_margin),
            num(r.wl_margin),
            num(r.bg_margin)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    const K: Constants = Constants::CODATA2018;

    fn reference() -> (ParticleSpec, ExperimentConfig) {
        let v = speed_from_gamma(&K, 1e4).unwrap();
        (
            ParticleSpec::new(1e-8, 1e-25, FRAC_PI_4),
            ExperimentConfig {
                separation: 1e-15,
                baseline: 0.1 * v,
                gamma: 1e4,
                background_mass: 6e24,
                background_distance: 1e7,
                initial_spread: None,
            },
        )
    }

    #[test]
    fn reference_point_report() {
        let (s, c) = reference();
        let r = check_constraints(&K, &s, &c).unwrap();
        assert!(r.wavelength.pass);
        assert!((r.lambda_m / 4.42e-13 - 1.0).abs() < 0.01);
        assert!(r.background.pass);
        assert!((r.background.lhs / 1e-44 - 1.0).abs() < 1e-12);
        assert!((r.background.rhs / (1e-8 / 6e24) - 1.0).abs() < 1e-12);
        assert!(!r.spreading.pass);
        assert_eq!(r.spreading.status, Status::Marginal);
        assert!((r.optimal_spread_m / 6.5e-16 - 1.0).abs() < 0.01);
        assert!((r.spreading.margin - 0.77).abs() < 0.01);
        assert_eq!(r.verdict(), Verdict::Marginal);
        for k in r.constraints() {
            assert_eq!(k.pass, k.lhs < k.rhs);
        }
    }

    #[test]
    fn explicit_spread_uses_full_form() {
        let (s, mut c) = reference();
        let r0 = check_constraints(&K, &s, &c).unwrap();
        let delta = 0.25 * r0.optimal_spread_m;
        c.initial_spread = Some(delta);
        let r = check_constraints(&K, &s, &c).unwrap();
        let scale = r0.optimal_spread_m * r0.optimal_spread_m / 4.0;
        assert!((r.spreading.lhs / (delta + scale / delta) - 1.0).abs() < 1e-12);
        assert!(r.spreading.lhs > r0.spreading.lhs);
    }

    #[test]
    fn no_background_mass() {
        let (s, mut c) = reference();
        c.background_mass = 0.0;
        let r = check_constraints(&K, &s, &c).unwrap();
        assert!(r.background.pass);
        assert_eq!(r.background.margin, MARGIN_CAP);
    }

    #[test]
    fn heavy_splitting_fails_wavelength() {
        let (mut s, c) = reference();
        s.dm = 1e-23;
        let r = check_constraints(&K, &s, &c).unwrap();
        assert!(r.wavelength.pass, "λ = {} at 1e-23 kg", r.lambda_m);
        s.dm = 1e-21;
        let r = check_constraints(&K, &s, &c).unwrap();
        assert!(!r.wavelength.pass);
        assert_eq!(r.verdict(), Verdict::Infeasible);
    }

    #[test]
    fn axis_parsing() {
        let a = ScanAxis::parse("dm:1e-27:1e-23:5:log").unwrap();
        assert_eq!(a.param, ScanParam::Dm);
        assert_eq!(a.spacing, Spacing::Log);
        assert!((a.value(2) / 1e-25 - 1.0).abs() < 1e-12);
        assert_eq!(a.value(4), 1e-23);
        assert!(ScanAxis::parse("dm:1:2").is_err());
        assert!(ScanAxis::parse("mass:1:2:3").is_err());
        assert!(ScanAxis::parse("gamma:1:2:3:cubic").is_err());
    }

    #[test]
    fn grid_checks() {
        let ax = |p, pts| ScanAxis { param: p, min: 1.0, max: 2.0, points: pts, spacing: Spacing::Linear };
        assert!(ScanGrid::new(vec![]).is_err());
        assert!(ScanGrid::new(vec![ax(ScanParam::Gamma, 1)]).is_err());
        assert!(ScanGrid::new(vec![ax(ScanParam::Gamma, 2); 5]).is_err());
        let big = ScanGrid::new(vec![ax(ScanParam::Gamma, 10_000), ax(ScanParam::L, 10_001)]);
        assert!(matches!(big, Err(Error::GridTooLarge { .. })));
        let g = ScanGrid::new(vec![ax(ScanParam::Gamma, 3), ax(ScanParam::L, 4)]).unwrap();
        assert_eq!(g.indices(0), [0, 0]);
        assert_eq!(g.indices(5), [1, 1]);
        assert_eq!(g.indices(11), [2, 3]);
    }
}
