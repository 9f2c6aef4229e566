//! Gap lower bounds from eigenvalue perturbation theory.
//!
//! The Wielandt–Hoffman inequality bounds how far the sorted spectrum of
//! `H(s)` can move between `s` and `s + ds` by the Frobenius norm of
//! `H(s+ds) − H(s)`. When at most one consecutive gap of the final diagonal
//! is wide and `f(z₁) ≥ 1`, this yields a slope bound `m` for the two lowest
//! eigenvalue curves, and from it a three-piece straight-line envelope under
//! `g(s) = λ₁(s) − λ₀(s)`:
//!
//! ```text
//! g₁(s) = 1 − s − m·s              on [0, a],  a = (1 − g_min)/(m + 1)
//! g₂(s) = g_min                    on [a, b],  b = (m + 1 − f(z₁) + g_min)/(m + 1)
//! g₃(s) = m·s − m + f(z₁) − (1−s)  on [b, 1]
//! ```

use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::{dhds_spectral_norm, wht_rhs};
use crate::instance::ProblemInstance;
use crate::numeric::{integrate, QuadError, QuadSettings};
use crate::spectrum::{eigenvalues, SpectrumError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("g_min = {0} must lie in (0, 1)")]
    BadGapMinimum(f64),
    #[error("degenerate envelope: b = {b} < a = {a} (g_min too large for f(z1) = {f1})")]
    Degenerate { a: f64, b: f64, f1: f64 },
    #[error("envelope integral is not finite: {0}")]
    Integral(#[from] QuadError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhtReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `Σ_j (λ_j(s+ds) − λ_j(s))² ≤ ‖H(s+ds) − H(s)‖²_F`.
pub fn wht_check(inst: &ProblemInstance, s: f64, ds: f64) -> Result<WhtReport, SpectrumError> {
    let before = eigenvalues(inst, s)?;
    let after = eigenvalues(inst, s + ds)?;
    let lhs: f64 = before
        .eigenvalues
        .iter()
        .zip(&after.eigenvalues)
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    let rhs = wht_rhs(inst, ds);
    Ok(WhtReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Default width above which a consecutive gap counts as wide: `n/N`.
pub fn default_width_threshold(inst: &ProblemInstance) -> f64 {
    f64::from(inst.n()) / inst.dim() as f64
}

/// Number of consecutive gaps `f(z_i) − f(z_{i−1})`, `i ≥ 1` with
/// `f(z₀) = f(u) = 0`, that are at least `width_threshold` wide.
pub fn classify_q(inst: &ProblemInstance, width_threshold: f64) -> usize {
    let values = &inst.canonical_order().values;
    std::iter::once(0.0)
        .chain(values.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| w[1] - w[0] >= width_threshold)
        .count()
}

/// `m = √((f(z_{N−1})−1)² + 2n + (2/N)Σ_{k=1}^{N−2} f(z_k) − 1)`.
///
/// Requires `f(z₁) ≥ 1`; see [`slope_bound_m_checked`] for the full regime
/// test including the gap count.
pub fn slope_bound_m(inst: &ProblemInstance) -> Result<f64, BoundsError> {
    let f1 = inst.f_first();
    if f1 < 1.0 {
        return Err(BoundsError::UnsupportedRegime(format!("f(z1) = {f1} < 1")));
    }
    let values = &inst.canonical_order().values;
    let dim = inst.dim() as f64;
    let inner: f64 = values[..values.len() - 1].iter().sum();
    let top = inst.f_last() - 1.0;
    Ok((top * top + 2.0 * f64::from(inst.n()) + 2.0 / dim * inner - 1.0).sqrt())
}

/// Regime test: `f(z₁) ≥ 1` and at most one wide consecutive gap.
pub fn check_regime(inst: &ProblemInstance, width_threshold: f64) -> Result<usize, BoundsError> {
    let q = classify_q(inst, width_threshold);
    if q > 1 {
        return Err(BoundsError::UnsupportedRegime(format!(
            "q = {q} consecutive gaps are at least {width_threshold} wide"
        )));
    }
    if inst.f_first() < 1.0 {
        return Err(BoundsError::UnsupportedRegime(format!(
            "f(z1) = {} < 1",
            inst.f_first()
        )));
    }
    Ok(q)
}

pub fn slope_bound_m_checked(
    inst: &ProblemInstance,
    width_threshold: f64,
) -> Result<f64, BoundsError> {
    check_regime(inst, width_threshold)?;
    slope_bound_m(inst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEnvelope {
    pub m: f64,
    pub g_min: f64,
    pub f1: f64,
    pub a: f64,
    pub b: f64,
}

impl GapEnvelope {
    pub fn from_parts(m: f64, f1: f64, g_min: f64) -> Result<Self, BoundsError> {
        if !(g_min > 0.0 && g_min < 1.0) {
            return Err(BoundsError::BadGapMinimum(g_min));
        }
        let a = (1.0 - g_min) / (m + 1.0);
        let b = (m + 1.0 - f1 + g_min) / (m + 1.0);
        if b < a {
            return Err(BoundsError::Degenerate { a, b, f1 });
        }
        Ok(Self { m, g_min, f1, a, b })
    }

    pub fn g1(&self, s: f64) -> f64 {
        1.0 - s - self.m * s
    }

    pub fn g3(&self, s: f64) -> f64 {
        self.m * s - self.m + self.f1 - (1.0 - s)
    }

    /// Active segment at `s`, clamped at zero.
    pub fn eval(&self, s: f64) -> f64 {
        let v = if s <= self.a {
            self.g1(s)
        } else if s <= self.b {
            self.g_min
        } else {
            self.g3(s)
        };
        v.max(0.0)
    }

    /// `∫₀¹ ds / envelope(s)²` by adaptive quadrature split at `a` and `b`.
    pub fn delay_integral(&self) -> Result<f64, QuadError> {
        let r = integrate(
            |s| {
                let g = self.eval(s);
                1.0 / (g * g)
            },
            &[0.0, self.a, self.b, 1.0],
            &QuadSettings::default(),
        )?;
        Ok(r.value)
    }

    /// `(m − f(z₁)) / ((m+1)·g_min²)`.
    pub fn closed_form_delay(&self) -> f64 {
        (self.m - self.f1) / ((self.m + 1.0) * self.g_min * self.g_min)
    }

    pub fn runtime(&self, d_norm: f64) -> Result<RuntimeEstimate, BoundsError> {
        let integral = self.delay_integral()?;
        if !integral.is_finite() {
            return Err(BoundsError::Integral(QuadError::NotConverged {
                value: integral,
                error: f64::INFINITY,
            }));
        }
        Ok(RuntimeEstimate {
            d_norm,
            closed_form: d_norm * self.closed_form_delay(),
            integral: d_norm * integral,
        })
    }
}

/// Builds the envelope for `inst` from a known `g_min`; requires `f(z₁) ≥ 1`.
pub fn envelope(inst: &ProblemInstance, g_min: f64) -> Result<GapEnvelope, BoundsError> {
    let m = slope_bound_m(inst)?;
    GapEnvelope::from_parts(m, inst.f_first(), g_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuntimeEstimate {
    pub d_norm: f64,
    pub closed_form: f64,
    pub integral: f64,
}

impl RuntimeEstimate {
    /// `|integral − closed_form| / integral`.
    pub fn relative_disagreement(&self) -> f64 {
        (self.integral - self.closed_form).abs() / self.integral
    }
}

pub fn runtime_estimate(
    inst: &ProblemInstance,
    g_min: f64,
) -> Result<RuntimeEstimate, BoundsError> {
    let env = envelope(inst, g_min)?;
    env.runtime(dhds_spectral_norm(inst).value)
}
