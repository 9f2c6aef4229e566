//! Local adiabatic scheduling for perturbed unordered search.
//!
//! The crate computes the spectrum of the interpolating Hamiltonian
//! `H(s) = (1−s)H(0) + sH(1)` through its secular equation, builds
//! piecewise-linear lower envelopes of the spectral gap from eigenvalue
//! perturbation bounds, synthesizes global and local delay schedules, and
//! integrates the Schrödinger equation along a schedule to measure the
//! success probability.

pub mod bounds;
pub mod evolution;
pub mod hamiltonian;
pub mod instance;
pub mod numeric;
pub mod schedule;
pub mod spectrum;

pub use hamiltonian::{dhds_spectral_norm, wht_rhs, StructuredHamiltonian};
pub use instance::{NoiseModel, ProblemInstance};
