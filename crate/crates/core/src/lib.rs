//! Two neutrino-like particles, each in a superposition of two rest masses,
//! picking up a mutual Newtonian gravitational phase.
//!
//! The crate computes the evolved pair state and its flavour-detection
//! probabilities, quantifies the entanglement the gravitational phase
//! produces, evaluates the experimental constraints for a parameter set and
//! estimates how many detected pairs a measurement would need.
//!
//! All phases are accumulated in [`phasekernel::Extended`] precision and
//! reduced modulo 2π before any trigonometric function sees them.
//!
//! Batch work (curves, event bins, scans, power trials) runs on rayon when
//! the default `parallel` feature is enabled; see [`exec`].

pub mod entanglement;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod export;
pub mod feasibility;
pub mod model;
pub mod observables;
pub mod phasekernel;
pub mod power;
pub mod rng;

pub use error::{Error, Result};
pub use evolution::{PhaseBundle, TwoParticleAmplitudes};
pub use exec::Exec;
pub use feasibility::{FeasibilityReport, ScanGrid};
pub use model::{Constants, ExperimentConfig, ParticleSpec, Setup};
pub use phasekernel::{Extended, PrecisePhase};
