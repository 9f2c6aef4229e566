mod common;

use adiabatic_search::bounds::wht_check;
use adiabatic_search::hamiltonian::StructuredHamiltonian;
use adiabatic_search::instance::random_permutation;
use adiabatic_search::schedule::{global_schedule, local_schedule, total_time};
use adiabatic_search::spectrum::{
    eigenvalues, eigenvector, min_gap, GapFunction, DEFAULT_REFINE_TOL,
};
use proptest::prelude::*;

use common::{rng, uniform_instance};

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn wht_holds_on_random_triples(n in 2u32..=7, seed in 0u64..1_000_000, s in 0.0f64..0.999) {
        let inst = uniform_instance(n, seed);
        let rep = wht_check(&inst, s, 1e-3).unwrap();
        prop_assert!(rep.holds, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn spectrum_ignores_placement_of_values(n in 2u32..=6, seed in 0u64..1_000_000, s in 0.01f64..0.99) {
        let inst = uniform_instance(n, seed);
        let perm = random_permutation(inst.dim() - 1, &mut rng(seed + 1));
        let shuffled = inst.permuted(&perm).unwrap();
        let a = eigenvalues(&inst, s).unwrap().eigenvalues;
        let b = eigenvalues(&shuffled, s).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
        }
    }

    #[test]
    fn ground_state_is_an_eigenvector(n in 2u32..=6, seed in 0u64..1_000_000, s in 0.0f64..=1.0) {
        let inst = uniform_instance(n, seed);
        let v = eigenvector(&inst, s, 0).unwrap();
        let lambda = eigenvalues(&inst, s).unwrap().eigenvalues[0];
        let hv = StructuredHamiltonian::new(&inst).apply(s, &v).unwrap();
        let residual = hv.iter().zip(&v).map(|(h, x)| (h - lambda * x).powi(2)).sum::<f64>().sqrt();
        prop_assert!(residual <= 1e-10, "residual {residual}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn local_exact_never_slower_than_global(n in 2u32..=6, seed in 0u64..1_000_000, eps in 0.02f64..1.0) {
        let inst = uniform_instance(n, seed);
        let mg = min_gap(&inst, 256, DEFAULT_REFINE_TOL).unwrap();
        let gap = GapFunction::new(&inst);
        let local = local_schedule(&inst, &gap, eps, 128).unwrap();
        let global = global_schedule(&inst, eps, mg.g_min).unwrap();
        prop_assert!(local.total_time() <= global.total_time() * (1.0 + 1e-9));
        let direct = total_time(&gap, local.d_norm(), eps).unwrap();
        prop_assert!((direct - local.total_time()).abs() <= 1e-7 * direct);
    }
}
