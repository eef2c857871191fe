//! Property tests of the state-evolution invariants: norm preservation,
//! isometry of inner products, composition, conditioning completeness, and
//! marginal normalization under random circuits.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use noon_sim::fock::FockState;
use noon_sim::{ModeId, ModeRegistry, PathLabel, Pol};

fn registry(n_modes: usize) -> (std::sync::Arc<ModeRegistry>, Vec<ModeId>) {
    let modes: Vec<ModeId> = (0..n_modes)
        .map(|k| ModeId::new(PathLabel::Detector(k as u8), Pol::H, 0))
        .collect();
    (ModeRegistry::new(modes.clone()).unwrap(), modes)
}

fn random_state(
    modes: &[ModeId],
    reg: std::sync::Arc<ModeRegistry>,
    rng: &mut ChaCha8Rng,
) -> FockState {
    use rand::Rng;
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let total = rng.gen_range(0..=4u32);
        let mut occ = vec![0u8; modes.len()];
        for _ in 0..total {
            occ[rng.gen_range(0..modes.len())] += 1;
        }
        terms.push((
            occ,
            num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ));
    }
    FockState::from_terms(reg, terms, 8).unwrap().normalized()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_preserves_norm(seed in 0u64..1_000_000, n_modes in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, modes) = registry(n_modes);
        let state = random_state(&modes, reg, &mut rng);
        let u = common::random_unitary(modes, &mut rng);
        let out = state.apply_unitary(&u).unwrap();
        prop_assert!((out.norm_sqr() - state.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn unitary_is_an_isometry(seed in 0u64..1_000_000, n_modes in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, modes) = registry(n_modes);
        let s = random_state(&modes, reg.clone(), &mut rng);
        let t = random_state(&modes, reg, &mut rng);
        let u = common::random_unitary(modes, &mut rng);
        let before = s.inner(&t).unwrap();
        let after = s.apply_unitary(&u).unwrap().inner(&t.apply_unitary(&u).unwrap()).unwrap();
        prop_assert!((after - before).norm() < 1e-10);
    }

    #[test]
    fn sequential_equals_composed(seed in 0u64..1_000_000, n_modes in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, modes) = registry(n_modes);
        let state = random_state(&modes, reg, &mut rng);
        let u = common::random_unitary(modes.clone(), &mut rng);
        let v = common::random_unitary(modes, &mut rng);
        let sequential = state.apply_unitary(&u).unwrap().apply_unitary(&v).unwrap();
        let composed = state.apply_unitary(&u.then(&v).unwrap()).unwrap();
        let err = common::max_amplitude_error(
            &sequential,
            &composed.terms().map(|(o, a)| (o.clone(), a)).collect::<Vec<_>>(),
        );
        prop_assert!(err < 1e-10, "amplitude error {err:.3e}");
    }

    #[test]
    fn conditioning_is_complete(seed in 0u64..1_000_000, n_modes in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, modes) = registry(n_modes);
        let state = random_state(&modes, reg, &mut rng);
        let u = common::random_unitary(modes.clone(), &mut rng);
        let state = state.apply_unitary(&u).unwrap();
        let total: f64 = (0..=8u8)
            .map(|n| state.condition_exact_count(modes[0], n).unwrap().probability)
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "sum of branch probabilities {total}");
    }

    #[test]
    fn marginals_are_normalized(seed in 0u64..1_000_000, n_modes in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, modes) = registry(n_modes);
        let state = random_state(&modes, reg, &mut rng);
        let u = common::random_unitary(modes.clone(), &mut rng);
        let state = state.apply_unitary(&u).unwrap();
        let observed = &modes[..n_modes / 2 + 1];
        let dist = state.marginal_distribution(observed).unwrap();
        let total: f64 = dist.values().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(dist.values().all(|&p| p >= 0.0));
    }
}
