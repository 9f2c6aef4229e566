//! Perturbed-search problem instances.
//!
//! An instance is the diagonal of the final Hamiltonian: `f[marked] = 0` and
//! every other entry strictly positive and bounded by a polynomial in `n`.
//! The instance never reorders `f`; the sorted view used by the spectral
//! code is computed once at construction and cached.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance under which two non-marked values count as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// Largest supported qubit count.
pub const MAX_QUBITS: u32 = 30;

const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(u32),
    #[error("dimension mismatch: expected {expected} values for n={n}, got {got}")]
    DimensionMismatch { n: u32, expected: usize, got: usize },
    #[error("marked index {marked} out of range for N={dim}")]
    MarkedOutOfRange { marked: usize, dim: usize },
    #[error("marked entry f[{index}] = {value} must be exactly 0")]
    NonzeroMarked { index: usize, value: f64 },
    #[error("negative entry f[{index}] = {value}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("non-marked entry f[{index}] must be strictly positive")]
    ZeroEntry { index: usize },
    #[error("entry f[{index}] = {value} is not finite")]
    NonFinite { index: usize, value: f64 },
    #[error("entry f[{index}] = {value} exceeds the polynomial bound {bound}")]
    BoundViolation {
        index: usize,
        value: f64,
        bound: f64,
    },
    #[error("invalid noise model: {0}")]
    NoiseModel(String),
}

/// Default bound on the entries of `f`: `n³`.
pub fn default_poly_bound(n: u32) -> f64 {
    f64::from(n).powi(3)
}

/// Sorted view of the non-marked values.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalOrder {
    /// Original indices of `z₁ … z_{N−1}` in ascending order of `f`.
    pub permutation: Vec<usize>,
    /// `f(z₁) ≤ … ≤ f(z_{N−1})`.
    pub values: Vec<f64>,
    /// Pairs of original indices whose values are tied under [`TIE_RTOL`].
    pub ties: Vec<(usize, usize)>,
}

impl CanonicalOrder {
    pub fn has_ties(&self) -> bool {
        !self.ties.is_empty()
    }
}

/// A distinct diagonal level of the final Hamiltonian together with its
/// multiplicity. Level 0 is always the marked entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub value: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    n: u32,
    marked: usize,
    f: Vec<f64>,
    poly_bound: f64,
    canonical: CanonicalOrder,
    levels: Vec<Level>,
}

impl ProblemInstance {
    /// Validates `f` against the default bound `n³`.
    pub fn new(n: u32, f: Vec<f64>, marked: usize) -> Result<Self, InstanceError> {
        Self::with_bound(n, f, marked, default_poly_bound(n))
    }

    pub fn with_bound(
        n: u32,
        f: Vec<f64>,
        marked: usize,
        poly_bound: f64,
    ) -> Result<Self, InstanceError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(InstanceError::QubitCount(n));
        }
        let dim = 1usize << n;
        if f.len() != dim {
            return Err(InstanceError::DimensionMismatch {
                n,
                expected: dim,
                got: f.len(),
            });
        }
        if marked >= dim {
            return Err(InstanceError::MarkedOutOfRange { marked, dim });
        }
        for (index, &value) in f.iter().enumerate() {
            if !value.is_finite() {
                return Err(InstanceError::NonFinite { index, value });
            }
            if index == marked {
                if value != 0.0 {
                    return Err(InstanceError::NonzeroMarked { index, value });
                }
                continue;
            }
            if value < 0.0 {
                return Err(InstanceError::NegativeEntry { index, value });
            }
            if value == 0.0 {
                return Err(InstanceError::ZeroEntry { index });
            }
            if value > poly_bound {
                return Err(InstanceError::BoundViolation {
                    index,
                    value,
                    bound: poly_bound,
                });
            }
        }
        let canonical = canonicalize(&f, marked);
        let levels = group_levels(&canonical.values);
        Ok(Self {
            n,
            marked,
            f,
            poly_bound,
            canonical,
            levels,
        })
    }

    /// Fills every non-marked slot from `model`; same inputs give the same
    /// instance bit for bit.
    pub fn perturb(n: u32, marked: usize, model: &NoiseModel) -> Result<Self, InstanceError> {
        Self::perturb_with_bound(n, marked, model, default_poly_bound(n))
    }

    pub fn perturb_with_bound(
        n: u32,
        marked: usize,
        model: &NoiseModel,
        poly_bound: f64,
    ) -> Result<Self, InstanceError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(InstanceError::QubitCount(n));
        }
        let dim = 1usize << n;
        if marked >= dim {
            return Err(InstanceError::MarkedOutOfRange { marked, dim });
        }
        let values = model.sample(dim - 1, poly_bound)?;
        let mut f = Vec::with_capacity(dim);
        let mut it = values.into_iter();
        for k in 0..dim {
            if k == marked {
                f.push(0.0);
            } else {
                f.push(it.next().expect("sampled N-1 values"));
            }
        }
        Self::with_bound(n, f, marked, poly_bound)
    }

    /// The unperturbed search instance: `f = 1` on every non-marked entry.
    pub fn unperturbed(n: u32, marked: usize) -> Result<Self, InstanceError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(InstanceError::QubitCount(n));
        }
        let dim = 1usize << n;
        let f = (0..dim)
            .map(|k| if k == marked { 0.0 } else { 1.0 })
            .collect();
        Self::with_bound(n, f, marked, default_poly_bound(n).max(1.0))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn marked(&self) -> usize {
        self.marked
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn poly_bound(&self) -> f64 {
        self.poly_bound
    }

    pub fn canonical_order(&self) -> &CanonicalOrder {
        &self.canonical
    }

    /// Distinct diagonal levels in ascending order, marked level first.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// `f(z₁)`, the smallest non-marked value.
    pub fn f_first(&self) -> f64 {
        self.canonical.values[0]
    }

    /// `f(z_{N−1})`, the largest value.
    pub fn f_last(&self) -> f64 {
        *self.canonical.values.last().expect("N >= 2")
    }

    pub fn f_max(&self) -> f64 {
        self.f_last()
    }

    /// Rebuilds the instance with the non-marked values shuffled: the `i`-th
    /// non-marked slot receives the value of the `perm[i]`-th one.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, InstanceError> {
        let others: Vec<usize> = (0..self.dim()).filter(|&k| k != self.marked).collect();
        if perm.len() != others.len() {
            return Err(InstanceError::DimensionMismatch {
                n: self.n,
                expected: others.len(),
                got: perm.len(),
            });
        }
        let mut f = self.f.clone();
        for (slot, &src) in others.iter().zip(perm) {
            f[*slot] = self.f[others[src]];
        }
        Self::with_bound(self.n, f, self.marked, self.poly_bound)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n,
            marked: self.marked,
            f: self.f.clone(),
        }
    }
}

fn canonicalize(f: &[f64], marked: usize) -> CanonicalOrder {
    let mut permutation: Vec<usize> = (0..f.len()).filter(|&k| k != marked).collect();
    permutation.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    let values: Vec<f64> = permutation.iter().map(|&k| f[k]).collect();
    let ties = permutation
        .windows(2)
        .filter(|w| is_tie(f[w[0]], f[w[1]]))
        .map(|w| (w[0], w[1]))
        .collect();
    CanonicalOrder {
        permutation,
        values,
        ties,
    }
}

/// Tie rule for two non-marked values.
pub fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * a.abs().max(1.0)
}

// Chains consecutive ties; each group is represented by its smallest value.
fn group_levels(sorted: &[f64]) -> Vec<Level> {
    let mut levels = vec![Level {
        value: 0.0,
        count: 1,
    }];
    let mut prev: Option<f64> = None;
    for &v in sorted {
        match prev {
            Some(p) if is_tie(p, v) => levels.last_mut().expect("non-empty").count += 1,
            _ => levels.push(Level { value: v, count: 1 }),
        }
        prev = Some(v);
    }
    levels
}

/// Generator for the non-marked entries of a perturbed instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseModel {
    UniformInterval {
        low: f64,
        high: f64,
        seed: u64,
    },
    /// Normal draws restricted to `(0, poly_bound]` by rejection.
    GaussianClipped {
        mean: f64,
        stddev: f64,
        seed: u64,
    },
    /// Values for the non-marked slots in index order.
    ExplicitList {
        values: Vec<f64>,
    },
}

impl NoiseModel {
    fn sample(&self, count: usize, bound: f64) -> Result<Vec<f64>, InstanceError> {
        match *self {
            NoiseModel::UniformInterval { low, high, seed } => {
                if !(low > 0.0 && low <= high && high <= bound) {
                    return Err(InstanceError::NoiseModel(format!(
                        "uniform interval [{low}, {high}] must lie in (0, {bound}]"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let dist = Uniform::new_inclusive(low, high)
                    .map_err(|e| InstanceError::NoiseModel(e.to_string()))?;
                Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
            }
            NoiseModel::GaussianClipped { mean, stddev, seed } => {
                if !(stddev > 0.0 && mean > 0.0 && mean <= bound) {
                    return Err(InstanceError::NoiseModel(format!(
                        "gaussian mean {mean} must lie in (0, {bound}] with positive stddev (got {stddev})"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let dist = Normal::new(mean, stddev)
                    .map_err(|e| InstanceError::NoiseModel(e.to_string()))?;
                let mut out = Vec::with_capacity(count);
                while out.len() < count {
                    let mut rejected = 0;
                    loop {
                        let x: f64 = dist.sample(&mut rng);
                        if x > 0.0 && x <= bound {
                            out.push(x);
                            break;
                        }
                        rejected += 1;
                        if rejected >= MAX_REJECTIONS {
                            return Err(InstanceError::NoiseModel(format!(
                                "gaussian({mean}, {stddev}) rarely lands in (0, {bound}]"
                            )));
                        }
                    }
                }
                Ok(out)
            }
            NoiseModel::ExplicitList { ref values } => {
                if values.len() != count {
                    return Err(InstanceError::NoiseModel(format!(
                        "explicit list has {} values, need {count}",
                        values.len()
                    )));
                }
                if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v <= bound)) {
                    return Err(InstanceError::NoiseModel(format!(
                        "explicit value {v} outside (0, {bound}]"
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

/// Draws a random permutation of `0..len` from `rng`; used by invariance tests
/// and the CLI shuffling diagnostics.
pub fn random_permutation<R: Rng>(len: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..len).collect();
    p.shuffle(rng);
    p
}

/// On-disk instance format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: u32,
    pub marked: usize,
    pub f: Vec<f64>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<ProblemInstance, InstanceError> {
        ProblemInstance::new(self.n, self.f, self.marked)
    }
}
