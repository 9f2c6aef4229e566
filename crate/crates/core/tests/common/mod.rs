//! Instance generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use adiabatic_search::instance::{random_permutation, NoiseModel, ProblemInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Values drawn uniformly from `[1, n]` at a random marked index.
pub fn uniform_instance(n: u32, seed: u64) -> ProblemInstance {
    let mut r = rng(seed ^ 0x5eed);
    let marked = r.random_range(0..1usize << n);
    ProblemInstance::perturb(
        n,
        marked,
        &NoiseModel::UniformInterval {
            low: 1.0,
            high: f64::from(n),
            seed,
        },
    )
    .expect("valid noise model")
}

/// One wide gap `f(z₁) ∈ [1, 2)` above the marked zero, every later
/// consecutive gap narrower than `n/N`, values shuffled over the indices.
pub fn clustered_instance(n: u32, seed: u64) -> ProblemInstance {
    let mut r = rng(seed);
    let dim = 1usize << n;
    let narrow = 0.9 * f64::from(n) / dim as f64;
    let mut sorted = Vec::with_capacity(dim - 1);
    let mut v = 1.0 + r.random::<f64>();
    for _ in 0..dim - 1 {
        sorted.push(v);
        v += narrow * (0.05 + 0.95 * r.random::<f64>());
    }
    let marked = r.random_range(0..dim);
    let order = random_permutation(dim - 1, &mut r);
    let mut f = Vec::with_capacity(dim);
    let mut it = order.into_iter().map(|k| sorted[k]);
    for k in 0..dim {
        f.push(if k == marked {
            0.0
        } else {
            it.next().expect("N-1 values")
        });
    }
    ProblemInstance::new(n, f, marked).expect("valid clustered instance")
}

/// Interior sample points `(j + 1)/(count + 1)`.
pub fn interior_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|j| j as f64 / (count + 1) as f64).collect()
}
