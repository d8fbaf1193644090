//! Entanglement of the pure two-particle state: reduced state, concurrence,
//! negativity and entanglement entropy.

use std::io::Write;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{baseline_for, phase_bundle_at, two_particle_amplitudes, TwoParticleAmplitudes};
use crate::exec::{try_map_indexed, Exec};
use crate::export::num;
use crate::model::{Constants, ExperimentConfig, ParticleSpec};
use crate::observables::LinearGrid;

/// Largest tolerated deviation of `Σ|a_ij|²` from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Eigenvalues down to this far below zero are treated as rounding noise.
pub const EIGEN_CLIP: f64 = 1e-12;

fn check_norm(state: &TwoParticleAmplitudes) -> Result<()> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > NORM_TOLERANCE || !n.is_finite() {
        return Err(Error::InvalidState(format!("state norm² = {n}, expected 1")));
    }
    Ok(())
}

/// `a11 a22 - a12 a21`; its modulus is the product of the Schmidt coefficients.
fn schmidt_det(state: &TwoParticleAmplitudes) -> Complex64 {
    let a = &state.a;
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Density operator of one particle in the mass basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    m: [[Complex64; 2]; 2],
    det: f64,
}

impl ReducedState {
    /// From an explicit Hermitian 2x2 matrix.
    pub fn from_matrix(m: [[Complex64; 2]; 2]) -> Self {
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
        Self { m, det }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    /// `(λ_max, λ_min)`. The smaller one comes from `det / λ_max`, which
    /// keeps its relative accuracy when it is tiny.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.trace();
        let disc = (tr * tr - 4.0 * self.det).max(0.0).sqrt();
        let hi = 0.5 * (tr + disc);
        let lo = if hi > 0.0 { self.det / hi } else { 0.5 * (tr - disc) };
        (hi, lo)
    }

    /// Von Neumann entropy in bits, `0 log 0 = 0`.
    pub fn entropy_bits(&self) -> f64 {
        let (hi, lo) = self.eigenvalues();
        [hi, lo]
            .into_iter()
            .map(|l| if l >= -EIGEN_CLIP { l.clamp(0.0, 1.0) } else { l })
            .filter(|&l| l > 0.0 && l < 1.0)
            .map(|l| -l * l.log2())
            .sum()
    }
}

/// Partial trace over the second particle.
pub fn reduce(state: &TwoParticleAmplitudes) -> Result<ReducedState> {
    check_norm(state)?;
    let a = &state.a;
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            m[i][k] = (0..2).map(|j| a[i][j] * a[k][j].conj()).sum();
        }
    }
    // force exact Hermiticity
    m[0][0].im = 0.0;
    m[1][1].im = 0.0;
    m[1][0] = m[0][1].conj();
    let det = schmidt_det(state).norm_sqr();
    Ok(ReducedState { m, det })
}

/// `2 |a11 a22 - a12 a21|`.
pub fn concurrence(state: &TwoParticleAmplitudes) -> Result<f64> {
    check_norm(state)?;
    Ok((2.0 * schmidt_det(state).norm()).min(1.0))
}

/// Sum of the magnitudes of the negative eigenvalues of the partial
/// transpose of `|ψ><ψ|`.
pub fn negativity(state: &TwoParticleAmplitudes) -> Result<f64> {
    check_norm(state)?;
    let a = &state.a;
    // (ρ^{T_B})_{(ij),(kl)} = a_il conj(a_kj)
    let pt = Matrix4::from_fn(|r, s| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (s / 2, s % 2);
        a[i][l] * a[k][j].conj()
    });
    let eig = pt.symmetric_eigenvalues();
    Ok(eig.iter().filter(|&&x| x < 0.0).map(|x| -x).sum())
}

pub fn entanglement_entropy(state: &TwoParticleAmplitudes) -> Result<f64> {
    Ok(reduce(state)?.entropy_bits())
}

/// Entanglement measures at one proper time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementPoint {
    pub tau_s: f64,
    pub baseline_m: f64,
    pub concurrence: f64,
    pub negativity: f64,
    pub entropy_bits: f64,
    /// `φ_E` reduced into `[0, 2π)`.
    pub phi_e_reduced_rad: f64,
}

pub fn entanglement_trace(
    consts: &Constants,
    spec: &ParticleSpec,
    config: &ExperimentConfig,
    taus: &LinearGrid,
    exec: Exec,
) -> Result<Vec<EntanglementPoint>> {
    let d = config.separation;
    try_map_indexed(exec, taus.points, |k| {
        let tau = taus.point(k);
        let st = two_particle_amplitudes(consts, spec, d, &tau)?;
        let b = phase_bundle_at(consts, spec, d, tau.clone())?;
        Ok(EntanglementPoint {
            tau_s: tau.to_f64(),
            baseline_m: baseline_for(consts, config.gamma, &tau).to_f64(),
            concurrence: concurrence(&st)?,
            negativity: negativity(&st)?,
            entropy_bits: entanglement_entropy(&st)?,
            phi_e_reduced_rad: b.phi_e.reduce_mod_2pi()?,
        })
    })
}

pub fn write_entanglement_csv<W: Write>(
    out: &mut W,
    trace: &[EntanglementPoint],
) -> std::io::Result<()> {
    writeln!(out, "tau_s,L_m,concurrence,negativity,entropy_bits,phi_E_reduced_rad")?;
    for p in trace {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            num(p.tau_s),
            num(p.baseline_m),
            num(p.concurrence),
            num(p.negativity),
            num(p.entropy_bits),
            num(p.phi_e_reduced_rad)
        )?;
    }
    Ok(())
}
