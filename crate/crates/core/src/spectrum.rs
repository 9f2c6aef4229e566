//! Eigenvalues of `H(s)` through the secular equation.
//!
//! `H(s) = diag(d) − ρ·J` with `ρ = (1−s)/N`, so
//! `det(H − λ) = Π_k (d_k − λ) · w(λ)` where
//! `w(λ) = 1 − ρ Σ_k 1/(d_k − λ)`. `w` is strictly decreasing between poles,
//! which gives exactly one root below the lowest pole and one between each
//! pair of consecutive distinct poles. Tied poles of multiplicity `c`
//! contribute the pole itself as an eigenvalue of multiplicity `c − 1` and a
//! single secular term of weight `c`.
//!
//! Roots are located in coordinates shifted to the nearer pole, where the
//! differences `d_k − d_o = s·(f_k − f_o)` are formed without cancellation.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::instance::{Level, ProblemInstance};
use crate::numeric::golden_section_minimize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("interpolation parameter s = {0} outside [0, 1]")]
    BadParameter(f64),
    #[error("λ = {lambda} lies within 1e-14 of the pole {pole}")]
    PoleProximity { lambda: f64, pole: f64 },
    #[error("secular root {index} at s = {s} is not bracketed (coincident poles)")]
    NotBracketed { s: f64, index: usize },
    #[error("secular root {index} at s = {s} did not converge after {iterations} iterations")]
    NonConvergence {
        s: f64,
        index: usize,
        iterations: usize,
    },
    #[error("eigenvalue {which} at s = {s} is deflated; its eigenvector is not unique")]
    Deflated { s: f64, which: usize },
    #[error("eigenvalue index {which} out of range for N = {dim}")]
    IndexOutOfRange { which: usize, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bound on the normalized secular residual accepted at a root.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_iter: 300,
        }
    }
}

/// A secular root expressed as `λ = d_origin + tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SecularRoot {
    pub origin: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub s: f64,
    /// `λ₀ ≤ … ≤ λ_{k−1}` (all `N` unless a partial spectrum was requested).
    pub eigenvalues: Vec<f64>,
    /// Open bracketing interval of each eigenvalue; deflated eigenvalues
    /// carry the degenerate interval `(pole, pole)`.
    pub intervals: Vec<(f64, f64)>,
    /// Normalized secular residual `|w| / (1 + ρΣ c_g/|d_g − λ|)`; zero for
    /// deflated eigenvalues and the closed-form endpoints.
    pub residuals: Vec<f64>,
    pub deflated: Vec<bool>,
    pub(crate) roots: Vec<Option<SecularRoot>>,
}

impl SpectrumSample {
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

#[derive(Clone, Copy)]
struct Secular<'a> {
    levels: &'a [Level],
    s: f64,
    rho: f64,
}

impl<'a> Secular<'a> {
    fn new(inst: &'a ProblemInstance, s: f64) -> Self {
        Self {
            levels: inst.levels(),
            s,
            rho: (1.0 - s) / inst.dim() as f64,
        }
    }

    fn pole(&self, g: usize) -> f64 {
        1.0 - self.s + self.s * self.levels[g].value
    }

    /// `d_g − d_origin`.
    fn offset(&self, g: usize, origin: usize) -> f64 {
        self.s * (self.levels[g].value - self.levels[origin].value)
    }

    /// `(w, dw/dτ, Σ c_g/|d_g − λ|)` at `λ = d_origin + τ`.
    fn eval(&self, origin: usize, tau: f64) -> (f64, f64, f64) {
        let mut sum = 0.0;
        let mut dsum = 0.0;
        let mut abs_sum = 0.0;
        for (g, level) in self.levels.iter().enumerate() {
            let c = level.count as f64;
            let inv = 1.0 / (self.offset(g, origin) - tau);
            sum += c * inv;
            dsum += c * inv * inv;
            abs_sum += c * inv.abs();
        }
        (1.0 - self.rho * sum, -self.rho * dsum, abs_sum)
    }

    fn residual(&self, root: SecularRoot) -> f64 {
        let (w, _, abs_sum) = self.eval(root.origin, root.tau);
        w.abs() / (1.0 + self.rho * abs_sum)
    }

    /// The root between pole `g − 1` and pole `g` (below pole 0 when `g = 0`).
    fn solve(&self, g: usize, cfg: &SolverConfig) -> Result<SecularRoot, SpectrumError> {
        let not_bracketed = SpectrumError::NotBracketed {
            s: self.s,
            index: g,
        };
        let (origin, mut lo, mut hi) = if g == 0 {
            // Lower end is λ = 0, where w > 0.
            (0, -(1.0 - self.s), 0.0)
        } else {
            let width = self.offset(g, g - 1);
            if width.is_nan() || width <= 0.0 {
                return Err(not_bracketed);
            }
            let mid = 0.5 * width;
            let (w_mid, _, _) = self.eval(g - 1, mid);
            if w_mid == 0.0 {
                return Ok(SecularRoot {
                    origin: g - 1,
                    tau: mid,
                });
            }
            if w_mid > 0.0 {
                (g, -mid, 0.0)
            } else {
                (g - 1, 0.0, mid)
            }
        };
        if hi.is_nan() || lo.is_nan() || hi <= lo {
            return Err(not_bracketed);
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..cfg.max_iter {
            let (w, dw, _) = self.eval(origin, x);
            if w == 0.0 {
                return Ok(SecularRoot { origin, tau: x });
            }
            if w > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            // One-pole rational model a + b/τ matching w and w' at x; its
            // root is exact when the origin pole dominates.
            let b = -dw * x * x;
            let a = w - b / x;
            let mut next = -b / a;
            if !(next > lo && next < hi) {
                next = x - w / dw;
            }
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let scale = next.abs().max(x.abs());
            if (next - x).abs() <= 4.0 * f64::EPSILON * scale
                || (hi - lo) <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs())
                || next == lo
                || next == hi
            {
                let root = SecularRoot { origin, tau: next };
                return self.accept(root, g, cfg);
            }
            x = next;
        }
        Err(SpectrumError::NonConvergence {
            s: self.s,
            index: g,
            iterations: cfg.max_iter,
        })
    }

    fn accept(
        &self,
        root: SecularRoot,
        g: usize,
        cfg: &SolverConfig,
    ) -> Result<SecularRoot, SpectrumError> {
        if self.residual(root) <= cfg.residual_tol {
            Ok(root)
        } else {
            Err(SpectrumError::NonConvergence {
                s: self.s,
                index: g,
                iterations: cfg.max_iter,
            })
        }
    }

    fn value(&self, root: SecularRoot) -> f64 {
        self.pole(root.origin) + root.tau
    }

    fn interval(&self, g: usize) -> (f64, f64) {
        let lo = if g == 0 { 0.0 } else { self.pole(g - 1) };
        (lo, self.pole(g))
    }
}

fn check_s(s: f64) -> Result<(), SpectrumError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(SpectrumError::BadParameter(s))
    }
}

/// `w(λ) = 1 − ((1−s)/N)·Σ_k 1/(d_k(s) − λ)`.
pub fn secular_eval(inst: &ProblemInstance, s: f64, lambda: f64) -> Result<f64, SpectrumError> {
    check_s(s)?;
    let sec = Secular::new(inst, s);
    let mut sum = 0.0;
    for (g, level) in inst.levels().iter().enumerate() {
        let pole = sec.pole(g);
        if (lambda - pole).abs() <= 1e-14 * pole.abs().max(1.0) {
            return Err(SpectrumError::PoleProximity { lambda, pole });
        }
        sum += level.count as f64 / (pole - lambda);
    }
    Ok(1.0 - sec.rho * sum)
}

/// A real number as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }
}

impl std::ops::Mul for SignedLog {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        if self.sign == 0 || other.sign == 0 {
            Self::ZERO
        } else {
            Self {
                sign: self.sign * other.sign,
                ln_abs: self.ln_abs + other.ln_abs,
            }
        }
    }
}

impl std::ops::Neg for SignedLog {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }
}

impl std::ops::Add for SignedLog {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.ln_abs - big.ln_abs).exp();
        let mag = if big.sign == small.sign {
            1.0 + ratio
        } else {
            1.0 - ratio
        };
        if mag == 0.0 {
            return Self::ZERO;
        }
        Self {
            sign: big.sign,
            ln_abs: big.ln_abs + mag.ln(),
        }
    }
}

/// The undivided characteristic polynomial
/// `c(λ) = x₀[P − ρ Σ_j P/x_j] − ρP`, `x₀ = 1−s−λ`, `x_k = 1−s+s f(z_k)−λ`,
/// `P = Π_{k≥1} x_k`, evaluated term by term in sign/log form. O(N²); meant
/// for boundary-sign checks at small N.
pub fn char_poly_eval(inst: &ProblemInstance, s: f64, lambda: f64) -> SignedLog {
    let rho = SignedLog::from_f64((1.0 - s) / inst.dim() as f64);
    let xs: Vec<SignedLog> = inst
        .canonical_order()
        .values
        .iter()
        .map(|&fk| SignedLog::from_f64(1.0 - s + s * fk - lambda))
        .collect();
    let x0 = SignedLog::from_f64(1.0 - s - lambda);
    let product = |skip: Option<usize>| {
        xs.iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .fold(SignedLog::from_f64(1.0), |acc, (_, x)| acc * *x)
    };
    let p = product(None);
    let cofactors = (0..xs.len()).fold(SignedLog::ZERO, |acc, j| acc + product(Some(j)));
    let bracket = p + -(rho * cofactors);
    x0 * bracket + -(rho * p)
}

enum Slot {
    Root(usize),
    Deflated,
}

fn slot_of(levels: &[Level], which: usize) -> Option<Slot> {
    let mut idx = 0;
    for (g, level) in levels.iter().enumerate() {
        if idx == which {
            return Some(Slot::Root(g));
        }
        idx += 1;
        if which < idx + level.count - 1 {
            return Some(Slot::Deflated);
        }
        idx += level.count - 1;
    }
    None
}

/// All `N` eigenvalues of `H(s)`.
pub fn eigenvalues(inst: &ProblemInstance, s: f64) -> Result<SpectrumSample, SpectrumError> {
    lowest_eigenvalues(inst, s, inst.dim(), &SolverConfig::default())
}

/// The lowest `k` eigenvalues of `H(s)` (clamped to `N`).
pub fn lowest_eigenvalues(
    inst: &ProblemInstance,
    s: f64,
    k: usize,
    cfg: &SolverConfig,
) -> Result<SpectrumSample, SpectrumError> {
    check_s(s)?;
    let k = k.min(inst.dim());
    let mut out = SpectrumSample {
        s,
        eigenvalues: Vec::with_capacity(k),
        intervals: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        deflated: Vec::with_capacity(k),
        roots: Vec::with_capacity(k),
    };
    if s == 0.0 || s == 1.0 {
        let values: Vec<f64> = if s == 0.0 {
            std::iter::once(0.0)
                .chain(std::iter::repeat(1.0))
                .take(k)
                .collect()
        } else {
            std::iter::once(0.0)
                .chain(inst.canonical_order().values.iter().copied())
                .take(k)
                .collect()
        };
        for v in values {
            out.eigenvalues.push(v);
            out.intervals.push((v, v));
            out.residuals.push(0.0);
            out.deflated.push(false);
            out.roots.push(None);
        }
        return Ok(out);
    }

    let sec = Secular::new(inst, s);
    'levels: for (g, level) in inst.levels().iter().enumerate() {
        if out.eigenvalues.len() == k {
            break;
        }
        let root = sec.solve(g, cfg)?;
        out.eigenvalues.push(sec.value(root));
        out.intervals.push(sec.interval(g));
        out.residuals.push(sec.residual(root));
        out.deflated.push(false);
        out.roots.push(Some(root));
        for _ in 1..level.count {
            if out.eigenvalues.len() == k {
                break 'levels;
            }
            let pole = sec.pole(g);
            out.eigenvalues.push(pole);
            out.intervals.push((pole, pole));
            out.residuals.push(0.0);
            out.deflated.push(true);
            out.roots.push(None);
        }
    }
    Ok(out)
}

/// Unit eigenvector for eigenvalue `which`; components are proportional to
/// `1/(d_k(s) − λ)`.
pub fn eigenvector(
    inst: &ProblemInstance,
    s: f64,
    which: usize,
) -> Result<Vec<f64>, SpectrumError> {
    check_s(s)?;
    let dim = inst.dim();
    if which >= dim {
        return Err(SpectrumError::IndexOutOfRange { which, dim });
    }
    if s == 0.0 {
        let amp = 1.0 / (dim as f64).sqrt();
        return match (which, dim) {
            (0, _) => Ok(vec![amp; dim]),
            (1, 2) => {
                let mut v = vec![amp; 2];
                v[1 - inst.marked()] = -amp;
                Ok(v)
            }
            _ => Err(SpectrumError::Deflated { s, which }),
        };
    }
    let levels = inst.levels();
    if s == 1.0 {
        let index = if which == 0 {
            inst.marked()
        } else if levels_count_at(levels, which) == 1 {
            inst.canonical_order().permutation[which - 1]
        } else {
            return Err(SpectrumError::Deflated { s, which });
        };
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        return Ok(v);
    }
    let g = match slot_of(levels, which) {
        Some(Slot::Root(g)) => g,
        Some(Slot::Deflated) => return Err(SpectrumError::Deflated { s, which }),
        None => return Err(SpectrumError::IndexOutOfRange { which, dim }),
    };
    let sec = Secular::new(inst, s);
    let root = sec.solve(g, &SolverConfig::default())?;
    let level_of = level_map(inst);
    let mut v: Vec<f64> = level_of
        .iter()
        .map(|&lg| 1.0 / (sec.offset(lg, root.origin) - root.tau))
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

// Multiplicity of the level hosting eigenvalue `which` at s = 1.
fn levels_count_at(levels: &[Level], which: usize) -> usize {
    let mut idx = 0;
    for level in levels {
        if which < idx + level.count {
            return level.count;
        }
        idx += level.count;
    }
    0
}

/// Level index of every original basis index.
fn level_map(inst: &ProblemInstance) -> Vec<usize> {
    let mut map = vec![0; inst.dim()];
    let perm = &inst.canonical_order().permutation;
    let mut pos = 0;
    for (g, level) in inst.levels().iter().enumerate().skip(1) {
        for &k in &perm[pos..pos + level.count] {
            map[k] = g;
        }
        pos += level.count;
    }
    map
}

/// `(λ₀(s), λ₁(s))` from the two lowest secular roots.
pub fn lowest_pair(inst: &ProblemInstance, s: f64) -> Result<(f64, f64), SpectrumError> {
    let sample = lowest_eigenvalues(inst, s, 2, &SolverConfig::default())?;
    Ok((sample.eigenvalues[0], sample.eigenvalues[1]))
}

/// `g(s) = λ₁(s) − λ₀(s)`.
pub fn gap(inst: &ProblemInstance, s: f64) -> Result<f64, SpectrumError> {
    let (l0, l1) = lowest_pair(inst, s)?;
    Ok(l1 - l0)
}

/// Memoizing evaluator for `g(s)`; shareable across threads.
#[derive(Debug)]
pub struct GapFunction<'a> {
    inst: &'a ProblemInstance,
    cache: RwLock<HashMap<u64, f64>>,
}

impl<'a> GapFunction<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        Self {
            inst,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.inst
    }

    pub fn eval(&self, s: f64) -> Result<f64, SpectrumError> {
        let key = s.to_bits();
        if let Some(&g) = self.cache.read().expect("gap cache poisoned").get(&key) {
            return Ok(g);
        }
        let g = gap(self.inst, s)?;
        self.cache
            .write()
            .expect("gap cache poisoned")
            .insert(key, g);
        Ok(g)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().expect("gap cache poisoned").len()
    }
}

pub const DEFAULT_GRID_POINTS: usize = 1024;
pub const DEFAULT_REFINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MinGap {
    pub s_star: f64,
    pub g_min: f64,
}

/// Uniform grid scan followed by golden-section refinement inside the
/// bracketing triple around the smallest sample.
pub fn min_gap(
    inst: &ProblemInstance,
    grid_points: usize,
    refine_tol: f64,
) -> Result<MinGap, SpectrumError> {
    let grid_points = grid_points.max(64);
    let last = (grid_points - 1) as f64;
    let samples: Vec<f64> = (0..grid_points)
        .into_par_iter()
        .map(|i| gap(inst, i as f64 / last))
        .collect::<Result<_, _>>()?;
    let (i_min, &g_grid) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let lo = i_min.saturating_sub(1) as f64 / last;
    let hi = (i_min + 1).min(grid_points - 1) as f64 / last;

    let mut failure = None;
    let (s_ref, g_ref) = golden_section_minimize(
        |s| match gap(inst, s) {
            Ok(g) => g,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        refine_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if g_ref <= g_grid {
        Ok(MinGap {
            s_star: s_ref,
            g_min: g_ref,
        })
    } else {
        Ok(MinGap {
            s_star: i_min as f64 / last,
            g_min: g_grid,
        })
    }
}

/// Lowest three eigenvalues at `s₀ = 1/p` and their distance to the line
/// `λ = 1 − s`; a diagnostic for where `λ₀` and `λ₁` pinch together.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CandidateProbe {
    pub s0: f64,
    pub lambda: [f64; 3],
    pub distance_to_line: [f64; 3],
}

pub fn probe_candidate(inst: &ProblemInstance, p: f64) -> Result<CandidateProbe, SpectrumError> {
    let s0 = 1.0 / p;
    let sample = lowest_eigenvalues(inst, s0, 3, &SolverConfig::default())?;
    let mut lambda = [f64::NAN; 3];
    let mut distance_to_line = [f64::NAN; 3];
    for (i, &l) in sample.eigenvalues.iter().enumerate() {
        lambda[i] = l;
        distance_to_line[i] = l - (1.0 - s0);
    }
    Ok(CandidateProbe {
        s0,
        lambda,
        distance_to_line,
    })
}
