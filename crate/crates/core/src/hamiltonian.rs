//! The interpolating Hamiltonian `H(s) = (1−s)H(0) + sH(1)`.
//!
//! `H(0) = I − J/N` (with `J` the all-ones matrix) and `H(1) = diag(f)`, so
//! `H(s) = diag(d(s)) − ((1−s)/N)·J` with `d_k(s) = 1 − s + s·f_k`. Every
//! production path works with this diagonal-plus-rank-one form; the dense
//! matrix exists only for oracles and small-N tests.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::instance::ProblemInstance;

/// Largest dimension [`StructuredHamiltonian::dense`] will materialize.
pub const DENSE_LIMIT: usize = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("vector length {got} does not match dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension {0} exceeds the dense materialization limit {DENSE_LIMIT}")]
    TooLarge(usize),
    #[error("interpolation parameter s = {0} outside [0, 1]")]
    BadParameter(f64),
}

/// Element type the structured matvec can act on.
pub trait Amplitude:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
}

impl Amplitude for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Amplitude for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StructuredHamiltonian<'a> {
    inst: &'a ProblemInstance,
}

impl<'a> StructuredHamiltonian<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        Self { inst }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.inst
    }

    pub fn dim(&self) -> usize {
        self.inst.dim()
    }

    /// `d_k(s) = 1 − s + s·f_k`.
    pub fn diagonal_entry(&self, s: f64, k: usize) -> f64 {
        1.0 - s + s * self.inst.f()[k]
    }

    pub fn diagonal(&self, s: f64) -> Vec<f64> {
        (0..self.dim()).map(|k| self.diagonal_entry(s, k)).collect()
    }

    /// Coefficient `(1−s)/N` of the subtracted all-ones matrix.
    pub fn rank_one_weight(&self, s: f64) -> f64 {
        (1.0 - s) / self.dim() as f64
    }

    /// Upper bound on `‖H(s)‖₂`: `H(s)` is positive semidefinite with spectrum
    /// below `max_k d_k(s)`.
    pub fn norm_bound(&self, s: f64) -> f64 {
        1.0 - s + s * self.inst.f_max()
    }

    /// `out = H(s)·v` in O(N).
    pub fn apply_into<T: Amplitude>(
        &self,
        s: f64,
        v: &[T],
        out: &mut [T],
    ) -> Result<(), HamiltonianError> {
        let dim = self.dim();
        for len in [v.len(), out.len()] {
            if len != dim {
                return Err(HamiltonianError::LengthMismatch {
                    expected: dim,
                    got: len,
                });
            }
        }
        let total = v.iter().fold(T::zero(), |acc, &x| acc + x);
        let shift = total * self.rank_one_weight(s);
        let f = self.inst.f();
        for ((o, &x), &fk) in out.iter_mut().zip(v).zip(f) {
            *o = x * (1.0 - s + s * fk) - shift;
        }
        Ok(())
    }

    pub fn apply<T: Amplitude>(&self, s: f64, v: &[T]) -> Result<Vec<T>, HamiltonianError> {
        let mut out = vec![T::zero(); v.len()];
        self.apply_into(s, v, &mut out)?;
        Ok(out)
    }

    /// Dense `H(s)`; entry `(i, j) = d_i(s)·δ_ij − (1−s)/N`.
    pub fn dense(&self, s: f64) -> Result<DMatrix<f64>, HamiltonianError> {
        let dim = self.dim();
        if dim > DENSE_LIMIT {
            return Err(HamiltonianError::TooLarge(dim));
        }
        let w = self.rank_one_weight(s);
        Ok(DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                self.diagonal_entry(s, i) - w
            } else {
                -w
            }
        }))
    }
}

/// How [`dhds_spectral_norm`] obtained its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    DenseEigensolve,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DhdsNorm {
    pub value: f64,
    pub method: NormMethod,
}

/// `‖H(1) − H(0)‖₂` (constant in `s`). Exact below [`DENSE_LIMIT`], otherwise
/// the triangle-inequality bound `max_k |f_k − 1| + 1`.
pub fn dhds_spectral_norm(inst: &ProblemInstance) -> DhdsNorm {
    if inst.dim() <= DENSE_LIMIT {
        let dim = inst.dim();
        let inv = 1.0 / dim as f64;
        let f = inst.f();
        let m = DMatrix::from_fn(dim, dim, |i, j| if i == j { f[i] - 1.0 + inv } else { inv });
        let value = m
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        DhdsNorm {
            value,
            method: NormMethod::DenseEigensolve,
        }
    } else {
        DhdsNorm {
            value: dhds_norm_upper_bound(inst),
            method: NormMethod::UpperBound,
        }
    }
}

pub fn dhds_norm_upper_bound(inst: &ProblemInstance) -> f64 {
    inst.f()
        .iter()
        .fold(0.0f64, |acc, &fk| acc.max((fk - 1.0).abs()))
        + 1.0
}

/// Squared Frobenius norm of `ds·(H(1) − H(0))`:
/// `((N−1)/N)²ds² + ((N−1)/N)ds² + Σ_k (f(z_k) − (N−1)/N)²ds²`.
pub fn wht_rhs(inst: &ProblemInstance, ds: f64) -> f64 {
    let dim = inst.dim() as f64;
    let c = (dim - 1.0) / dim;
    let tail: f64 = inst
        .canonical_order()
        .values
        .iter()
        .map(|&fk| (fk - c) * (fk - c))
        .sum();
    (c * c + c + tail) * ds * ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn e1() -> ProblemInstance {
        ProblemInstance::new(2, vec![0.0, 1.0, 2.0, 3.0], 0).unwrap()
    }

    #[test]
    fn final_hamiltonian_is_diagonal() {
        let inst = e1();
        let h = StructuredHamiltonian::new(&inst);
        let v = [0.3, -1.0, 2.5, 0.7];
        let out = h.apply(1.0, &v).unwrap();
        for k in 0..4 {
            assert_eq!(out[k], inst.f()[k] * v[k]);
        }
    }

    #[test]
    fn uniform_state_is_ground_state_of_initial() {
        let inst = e1();
        let h = StructuredHamiltonian::new(&inst);
        let out = h.apply(0.0, &[0.5; 4]).unwrap();
        for x in out {
            assert!(x.abs() < 1e-16);
        }
    }

    #[test]
    fn apply_e1_half_on_first_basis_vector() {
        // Row 0 of dense(0.5): d_0 − 1/8 = 0.375, off-diagonals −1/8.
        let inst = e1();
        let h = StructuredHamiltonian::new(&inst);
        let out = h.apply(0.5, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.375, -0.125, -0.125, -0.125]);
        let dense = h.dense(0.5).unwrap();
        for k in 0..4 {
            assert_eq!(out[k], dense[(k, 0)]);
        }
    }

    #[test]
    fn apply_length_mismatch() {
        let inst = e1();
        let h = StructuredHamiltonian::new(&inst);
        assert_eq!(
            h.apply(0.5, &[1.0, 2.0]),
            Err(HamiltonianError::LengthMismatch {
                expected: 4,
                got: 2
            })
        );
    }

    #[test]
    fn dense_endpoints() {
        let inst = ProblemInstance::new(1, vec![0.0, 1.0], 0).unwrap();
        let d = StructuredHamiltonian::new(&inst).dense(0.0).unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));

        let inst = e1();
        let d = StructuredHamiltonian::new(&inst).dense(1.0).unwrap();
        assert_eq!(
            d,
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0]))
        );
    }

    #[test]
    fn dense_size_guard() {
        let inst = ProblemInstance::unperturbed(13, 0).unwrap();
        assert_eq!(
            StructuredHamiltonian::new(&inst).dense(0.5).unwrap_err(),
            HamiltonianError::TooLarge(1 << 13)
        );
    }

    #[test]
    fn dhds_norm_unperturbed() {
        // H(1) − H(0) restricted to span{e_u, rest} is
        // [[−(N−1)/N, √(N−1)/N], [√(N−1)/N, (N−1)/N]], eigenvalues ±√(1 − 1/N).
        let inst = ProblemInstance::new(2, vec![0.0, 1.0, 1.0, 1.0], 0).unwrap();
        let d = dhds_spectral_norm(&inst);
        assert_eq!(d.method, NormMethod::DenseEigensolve);
        assert_relative_eq!(d.value, 0.75f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn dhds_norm_e1_fixture() {
        let d = dhds_spectral_norm(&e1());
        // Frozen from the dense eigensolve; the bound path gives 3.
        assert_relative_eq!(d.value, DHDS_E1, max_relative = 1e-12);
        assert!(d.value <= dhds_norm_upper_bound(&e1()));
    }

    const DHDS_E1: f64 = 2.389_581_923_437_594;

    #[test]
    fn dhds_bound_scales() {
        let inst = e1();
        let c = 1.7;
        let scaled = ProblemInstance::new(2, inst.f().iter().map(|x| x * c).collect(), 0).unwrap();
        let base = dhds_spectral_norm(&inst).value;
        let bigger = dhds_spectral_norm(&scaled).value;
        assert!(bigger <= (c + 1.0) * base + 1e-12);
        assert!(dhds_norm_upper_bound(&scaled) <= (c + 1.0) * dhds_norm_upper_bound(&inst));
    }

    fn frobenius_sq_diff(inst: &ProblemInstance, s: f64, ds: f64) -> f64 {
        let h = StructuredHamiltonian::new(inst);
        let a = h.dense(s + ds).unwrap();
        let b = h.dense(s).unwrap();
        (a - b).iter().map(|x| x * x).sum()
    }

    #[test]
    fn wht_rhs_e1() {
        let inst = e1();
        assert_eq!(wht_rhs(&inst, 0.0), 0.0);
        assert_relative_eq!(wht_rhs(&inst, 1.0), 8.0, max_relative = 1e-15);
        assert_relative_eq!(
            frobenius_sq_diff(&inst, 0.0, 1.0),
            8.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(wht_rhs(&inst, 0.25), 0.0625 * 8.0, max_relative = 1e-15);
    }

    fn arb_instance() -> impl Strategy<Value = ProblemInstance> {
        (1u32..=5).prop_flat_map(|n| {
            let dim = 1usize << n;
            (
                Just(n),
                proptest::collection::vec(0.01f64..f64::from(n).powi(3).max(1.0), dim),
                0..dim,
            )
                .prop_map(|(n, mut f, marked)| {
                    f[marked] = 0.0;
                    ProblemInstance::new(n, f, marked).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn apply_matches_dense(inst in arb_instance(), s in 0.0f64..=1.0, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..inst.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = StructuredHamiltonian::new(&inst);
            let fast = h.apply(s, &v).unwrap();
            let slow = h.dense(s).unwrap() * nalgebra::DVector::from_vec(v.clone());
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let err = fast.iter().zip(slow.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-13 * vnorm * h.norm_bound(s).max(1.0), "err {err}");
        }

        #[test]
        fn dense_is_symmetric_with_expected_row_sums(inst in arb_instance(), s in 0.0f64..=1.0) {
            let h = StructuredHamiltonian::new(&inst);
            let d = h.dense(s).unwrap();
            prop_assert_eq!(&d, &d.transpose());
            let ones = nalgebra::DVector::from_element(inst.dim(), 1.0);
            let rows = &d * ones;
            for k in 0..inst.dim() {
                let expected = h.diagonal_entry(s, k) - (1.0 - s);
                prop_assert!((rows[k] - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            }
        }

        #[test]
        fn wht_rhs_matches_frobenius(inst in arb_instance(), s in 0.0f64..0.9, ds in 1e-4f64..0.1) {
            let direct = frobenius_sq_diff(&inst, s, ds);
            let formula = wht_rhs(&inst, ds);
            // Subtracting two rounded dense matrices loses about ulp(‖H‖)/ds per entry.
            let tol = 1e-12f64.max(4.0 * f64::EPSILON * inst.poly_bound() / ds);
            prop_assert!((direct - formula).abs() <= tol * formula, "{direct} vs {formula}");
            prop_assert!((wht_rhs(&inst, ds) - ds * ds * wht_rhs(&inst, 1.0)).abs() <= 1e-14 * formula);
        }
    }
}
