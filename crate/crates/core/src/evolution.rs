//! Schrödinger evolution along a schedule.
//!
//! Each step applies `exp(−i·H(s(t + Δt/2))·Δt)` through a Taylor series on
//! the O(N) structured matvec, with the Hamiltonian shifted by half its norm
//! bound (a global phase) to keep the series short.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::{HamiltonianError, StructuredHamiltonian};
use crate::instance::ProblemInstance;
use crate::schedule::Schedule;
use crate::spectrum::{eigenvector, SpectrumError};

/// Largest allowed `‖H‖·Δt` per step.
pub const MAX_PHASE_PER_STEP: f64 = 0.5;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const DRIFT_BUDGET: f64 = 1e-8;
pub const MAX_TRACE_POINTS: usize = 1024;
/// Step multiplier over [`required_steps`] at which doubling the step count
/// moves the final fidelity by less than `1e−6` in practice.
pub const REFERENCE_REFINEMENT: usize = 64;
pub const MAX_STEPS: usize = 200_000_000;

const TAYLOR_MAX_TERMS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("total time {0} must be finite and non-negative")]
    BadTime(f64),
    #[error("step {step}: norm deviates from 1 by {deviation:e}, exceeding {UNITARITY_TOL:e}")]
    UnitarityViolation { step: usize, deviation: f64 },
    #[error("step {step}: cumulative norm drift {drift:e} exceeds {DRIFT_BUDGET:e}")]
    NormDrift { step: usize, drift: f64 },
    #[error("evolution needs {required} steps, above the limit {MAX_STEPS}")]
    TooManySteps { required: f64 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// Anything that maps physical time to the interpolation parameter.
pub trait SchedulePath {
    fn total_time(&self) -> f64;
    fn s_at(&self, t: f64) -> f64;
}

impl SchedulePath for Schedule {
    fn total_time(&self) -> f64 {
        Schedule::total_time(self)
    }

    fn s_at(&self, t: f64) -> f64 {
        Schedule::s_at(self, t)
    }
}

/// Holds `s` fixed for a given duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenPath {
    pub s: f64,
    pub duration: f64,
}

impl SchedulePath for FrozenPath {
    fn total_time(&self) -> f64 {
        self.duration
    }

    fn s_at(&self, _t: f64) -> f64 {
        self.s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Ground state of `H(0)`.
    pub fn uniform(dim: usize) -> Self {
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            amplitudes: vec![a; dim],
        }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub ground_overlap: Vec<f64>,
    pub norm_drift: Vec<f64>,
    /// Steps actually taken after auto-raising.
    pub steps: usize,
}

impl EvolutionTrace {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }

    fn record(
        &mut self,
        inst: &ProblemInstance,
        state: &[Complex64],
        t: f64,
        s: f64,
        drift: f64,
    ) -> Result<(), EvolutionError> {
        self.t.push(t);
        self.s.push(s);
        self.ground_overlap.push(overlap(state, inst, s)?);
        self.norm_drift.push(drift);
        Ok(())
    }
}

/// `|ψ_u|²` for the marked index `u`.
pub fn fidelity(state: &StateVector, inst: &ProblemInstance) -> f64 {
    state.amplitudes[inst.marked()].norm_sqr()
}

/// `|⟨0;s|ψ⟩|²` against the computed ground state of `H(s)`.
pub fn instantaneous_overlap(
    state: &StateVector,
    inst: &ProblemInstance,
    s: f64,
) -> Result<f64, EvolutionError> {
    overlap(&state.amplitudes, inst, s)
}

fn overlap(state: &[Complex64], inst: &ProblemInstance, s: f64) -> Result<f64, EvolutionError> {
    let v = eigenvector(inst, s, 0)?;
    let amp: Complex64 = v.iter().zip(state).map(|(&a, &z)| z * a).sum();
    Ok(amp.norm_sqr().min(1.0))
}

/// Minimum step count keeping `max(1, f_max)·Δt ≤ 0.5`.
pub fn required_steps(inst: &ProblemInstance, total_time: f64) -> f64 {
    (total_time * inst.f_max().max(1.0) / MAX_PHASE_PER_STEP).ceil()
}

/// Propagates the uniform state along `path` with at least `steps` steps.
pub fn evolve(
    inst: &ProblemInstance,
    path: &dyn SchedulePath,
    steps: usize,
) -> Result<(StateVector, EvolutionTrace), EvolutionError> {
    let total = path.total_time();
    if !(total >= 0.0 && total.is_finite()) {
        return Err(EvolutionError::BadTime(total));
    }
    let dim = inst.dim();
    let mut psi = StateVector::uniform(dim).amplitudes;
    let mut trace = EvolutionTrace::default();
    if total == 0.0 {
        trace.record(inst, &psi, 0.0, path.s_at(0.0), 0.0)?;
        return Ok((StateVector::new(psi), trace));
    }

    let required = required_steps(inst, total);
    if required > MAX_STEPS as f64 {
        return Err(EvolutionError::TooManySteps { required });
    }
    let steps = steps.max(required as usize).max(1);
    trace.steps = steps;
    let dt = total / steps as f64;
    // Sample every `stride` steps plus the final one: at most 1024 points.
    let stride = steps.div_ceil(MAX_TRACE_POINTS - 2).max(1);

    let h = StructuredHamiltonian::new(inst);
    let mut term = vec![Complex64::new(0.0, 0.0); dim];
    let mut work = vec![Complex64::new(0.0, 0.0); dim];
    let mut next = vec![Complex64::new(0.0, 0.0); dim];
    let mut drift = 0.0;
    trace.record(inst, &psi, 0.0, path.s_at(0.0), drift)?;

    for step in 1..=steps {
        let t_mid = (step as f64 - 0.5) * dt;
        let s_mid = path.s_at(t_mid);
        let shift = 0.5 * h.norm_bound(s_mid);
        next.copy_from_slice(&psi);
        term.copy_from_slice(&psi);
        for k in 1..=TAYLOR_MAX_TERMS {
            h.apply_into(s_mid, &term, &mut work)?;
            let factor = Complex64::new(0.0, -dt / k as f64);
            for (w, &x) in work.iter_mut().zip(term.iter()) {
                *w = (*w - x * shift) * factor;
            }
            std::mem::swap(&mut term, &mut work);
            for (n, &x) in next.iter_mut().zip(term.iter()) {
                *n += x;
            }
            if norm(&term) <= 1e-17 {
                break;
            }
        }
        let nrm = norm(&next);
        let deviation = (nrm - 1.0).abs();
        if deviation > UNITARITY_TOL {
            return Err(EvolutionError::UnitarityViolation { step, deviation });
        }
        drift += deviation;
        if drift > DRIFT_BUDGET {
            return Err(EvolutionError::NormDrift { step, drift });
        }
        for (p, &x) in psi.iter_mut().zip(next.iter()) {
            *p = x / nrm;
        }
        if step % stride == 0 || step == steps {
            let t = if step == steps {
                total
            } else {
                step as f64 * dt
            };
            trace.record(inst, &psi, t, path.s_at(t), drift)?;
        }
    }
    Ok((StateVector::new(psi), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{global_schedule_with_norm, local_schedule, ConstantGap};
    use crate::spectrum::GapFunction;
    use approx::assert_relative_eq;

    #[test]
    fn fidelity_examples() {
        let inst = ProblemInstance::new(2, vec![1.0, 0.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(fidelity(&StateVector::basis(4, 1), &inst), 1.0);
        assert_relative_eq!(
            fidelity(&StateVector::uniform(4), &inst),
            0.25,
            max_relative = 1e-15
        );
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let two = StateVector::new(vec![
            Complex64::new(h, 0.0),
            Complex64::new(0.0, h),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        assert_relative_eq!(fidelity(&two, &inst), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn zero_time_returns_initial() {
        let inst = ProblemInstance::unperturbed(3, 0).unwrap();
        let sched = global_schedule_with_norm(1.0, 1.0, 1.0, 3).unwrap();
        let frozen = FrozenPath {
            s: 0.0,
            duration: 0.0,
        };
        let (psi, trace) = evolve(&inst, &frozen, 10).unwrap();
        assert_eq!(psi, StateVector::uniform(8));
        assert_eq!(trace.t, vec![0.0]);
        assert!(sched.total_time() > 0.0);
    }

    #[test]
    fn frozen_at_zero_is_stationary() {
        let inst = ProblemInstance::perturb(
            3,
            2,
            &crate::instance::NoiseModel::UniformInterval {
                low: 1.0,
                high: 3.0,
                seed: 4,
            },
        )
        .unwrap();
        let (psi, trace) = evolve(
            &inst,
            &FrozenPath {
                s: 0.0,
                duration: 7.0,
            },
            500,
        )
        .unwrap();
        assert_relative_eq!(fidelity(&psi, &inst), 1.0 / 8.0, max_relative = 1e-10);
        for o in &trace.ground_overlap {
            assert!((o - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn trace_shape_and_auto_raise() {
        let inst = ProblemInstance::unperturbed(2, 0).unwrap();
        let sched = global_schedule_with_norm(1.0, 1.0, 0.05, 16).unwrap();
        let (_, trace) = evolve(&inst, &sched, 1).unwrap();
        assert!(trace.steps as f64 >= required_steps(&inst, sched.total_time()));
        assert!(trace.t.len() <= MAX_TRACE_POINTS);
        assert!(trace.t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*trace.t.last().unwrap(), sched.total_time());
        assert!(trace
            .ground_overlap
            .iter()
            .all(|&o| (0.0..=1.0).contains(&o)));
        assert!((trace.ground_overlap[0] - 1.0).abs() <= 1e-10);
        assert!(trace.max_norm_drift() <= DRIFT_BUDGET);
    }

    #[test]
    fn slow_local_schedule_reaches_marked_state() {
        let inst = ProblemInstance::unperturbed(4, 3).unwrap();
        let gap = GapFunction::new(&inst);
        let sched = local_schedule(&inst, &gap, 0.05, 256).unwrap();
        let (psi, trace) = evolve(&inst, &sched, 0).unwrap();
        assert!(
            fidelity(&psi, &inst) >= 0.9,
            "fidelity {}",
            fidelity(&psi, &inst)
        );
        let end = instantaneous_overlap(&psi, &inst, 1.0).unwrap();
        assert_relative_eq!(end, fidelity(&psi, &inst), max_relative = 1e-12);
        assert!(trace.max_norm_drift() <= DRIFT_BUDGET);
    }

    #[test]
    fn step_halving_converges() {
        let inst = ProblemInstance::unperturbed(3, 0).unwrap();
        let sched =
            crate::schedule::local_schedule_with_norm(&ConstantGap(0.5), 1.0, 0.5, 128).unwrap();
        let base = required_steps(&inst, sched.total_time()) as usize * REFERENCE_REFINEMENT;
        let (a, _) = evolve(&inst, &sched, base).unwrap();
        let (b, _) = evolve(&inst, &sched, base * 2).unwrap();
        assert!((fidelity(&a, &inst) - fidelity(&b, &inst)).abs() <= 1e-6);
    }
}
