//! Property-style invariants across the matrix kernel, the effect algebra
//! and the channel layer: seeded bulk loops for the pinned trial counts,
//! proptest for arbitrary-seed coverage.

use proptest::prelude::*;

use seqeffect::axioms::{check_commuting_product, CandidateProduct};
use seqeffect::channels::{instrument_from_povm, random_povm};
use seqeffect::effects::{
    commutes, luders_condition, standard_seq_product, Conditioned, DensityOperator, Effect,
};
use seqeffect::matcore::rng::{density_with, effect_with, ginibre_with};
use seqeffect::matcore::{
    hermitian_eig, numerical_rank, op_norm, polar_decompose, random_effect,
    random_rank1_projection, sqrt_psd, CMatrix, SplitMix64, ToleranceConfig,
};

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn dims_cycle(trial: usize) -> usize {
    2 + trial % 7 // dims 2..=8
}

#[test]
fn sqrt_reconstructs_500_random_psd() {
    let t = tol();
    for trial in 0..500usize {
        let dim = dims_cycle(trial);
        let mut rng = SplitMix64::new(10_000 + trial as u64);
        let g = ginibre_with(dim, &mut rng);
        let m = g.matmul(&g.adjoint()).hermitize();
        let r = sqrt_psd(&m, &t).unwrap();
        assert!(op_norm(&r.matmul(&r).sub(&m)) <= t.eq_tol, "trial {trial} dim {dim}");
    }
}

#[test]
fn sqrt_scales_with_lambda() {
    let t = tol();
    for trial in 0..60usize {
        let dim = dims_cycle(trial);
        let mut rng = SplitMix64::new(20_000 + trial as u64);
        let m = effect_with(dim, &mut rng);
        let base = sqrt_psd(&m, &t).unwrap();
        for lambda in [0.0_f64, 0.25, 1.0] {
            let scaled = sqrt_psd(&m.scale_re(lambda), &t).unwrap();
            let expected = base.scale_re(lambda.sqrt());
            assert!(op_norm(&scaled.sub(&expected)) <= t.eq_tol);
        }
    }
}

#[test]
fn polar_reconstructs_500_random_matrices() {
    let t = tol();
    for trial in 0..500usize {
        let dim = dims_cycle(trial);
        let mut rng = SplitMix64::new(30_000 + trial as u64);
        let c = ginibre_with(dim, &mut rng);
        let (u, p) = polar_decompose(&c, &t).unwrap();
        assert!(op_norm(&u.matmul(&p).sub(&c)) <= t.eq_tol, "trial {trial} dim {dim}");
        let gram = u.adjoint().matmul(&u);
        assert!(op_norm(&gram.sub(&CMatrix::identity(dim))) <= t.eq_tol);
    }
}

#[test]
fn rank1_projections_have_rank_one_up_to_dim_16() {
    let t = tol();
    for dim in 2..=16usize {
        for seed in 0..5u64 {
            let p = random_rank1_projection(dim, seed).unwrap();
            assert_eq!(numerical_rank(&p, &t).unwrap(), 1);
        }
    }
}

#[test]
fn seq_product_window_and_monotone_bound_1000_pairs() {
    // A ∘ B stays in the effect window and A − A∘B stays PSD.
    let t = tol();
    for trial in 0..1000usize {
        let dim = 2 + trial % 5;
        let mut rng = SplitMix64::new(40_000 + trial as u64);
        let a = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        let b = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        let out = standard_seq_product(&a, &b, &t).unwrap();
        let (values, _) = hermitian_eig(out.matrix(), &t).unwrap();
        assert!(values[0] >= -t.psd_tol, "trial {trial}: {}", values[0]);
        assert!(values[dim - 1] <= 1.0 + t.psd_tol);
        let (gap, _) = hermitian_eig(&a.matrix().sub(out.matrix()), &t).unwrap();
        assert!(gap[0] >= -t.psd_tol, "A − A∘B dipped to {}", gap[0]);
    }
}

#[test]
fn seq_product_is_additive_in_second_argument() {
    let t = tol();
    for trial in 0..200usize {
        let dim = 2 + trial % 4;
        let mut rng = SplitMix64::new(50_000 + trial as u64);
        let a = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        // Halving keeps the sum inside the effect window.
        let b = Effect::new(effect_with(dim, &mut rng).scale_re(0.5), &t).unwrap();
        let c = Effect::new(effect_with(dim, &mut rng).scale_re(0.5), &t).unwrap();
        let sum = Effect::new(b.matrix().add(c.matrix()), &t).unwrap();
        let lhs = standard_seq_product(&a, &sum, &t).unwrap();
        let rhs = standard_seq_product(&a, &b, &t)
            .unwrap()
            .matrix()
            .add(standard_seq_product(&a, &c, &t).unwrap().matrix());
        assert!(op_norm(&lhs.matrix().sub(&rhs)) <= t.eq_tol);
    }
}

#[test]
fn seq_product_scalar_homogeneity() {
    let t = tol();
    for trial in 0..100usize {
        let dim = 2 + trial % 4;
        let mut rng = SplitMix64::new(60_000 + trial as u64);
        let a = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        let b = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        let base = standard_seq_product(&a, &b, &t).unwrap();
        for lambda in [0.0_f64, 0.3, 1.0] {
            let scaled_a = Effect::new(a.matrix().scale_re(lambda), &t).unwrap();
            let scaled_b = Effect::new(b.matrix().scale_re(lambda), &t).unwrap();
            let left = standard_seq_product(&scaled_a, &b, &t).unwrap();
            let right = standard_seq_product(&a, &scaled_b, &t).unwrap();
            let expected = base.matrix().scale_re(lambda);
            assert!(op_norm(&left.matrix().sub(&expected)) <= t.eq_tol);
            assert!(op_norm(&right.matrix().sub(&expected)) <= t.eq_tol);
        }
    }
}

#[test]
fn commuting_pairs_multiply_plainly() {
    // On exactly commuting pairs the sequential product reduces to the
    // operator product.
    let t = tol();
    let report = check_commuting_product(&CandidateProduct::standard(), 4, 300, 42, &t).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.max_residual <= 1e-9);
}

#[test]
fn functional_calculus_pairs_commute_and_match_plain_product() {
    let t = tol();
    for trial in 0..100usize {
        let dim = 2 + trial % 4;
        let mut rng = SplitMix64::new(70_000 + trial as u64);
        // Same eigenbasis, independent spectra in [0, 1].
        let v = seqeffect::matcore::rng::unitary_with(dim, &mut rng);
        let spec_a: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
        let spec_b: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
        let mut a = CMatrix::zeros(dim);
        let mut b = CMatrix::zeros(dim);
        for (m, spec) in [(&mut a, &spec_a), (&mut b, &spec_b)] {
            let mut scaled = v.clone();
            for j in 0..dim {
                for i in 0..dim {
                    scaled.set(i, j, v.get(i, j) * spec[j]);
                }
            }
            *m = scaled.matmul(&v.adjoint()).hermitize();
        }
        let a = Effect::new(a, &t).unwrap();
        let b = Effect::new(b, &t).unwrap();
        assert!(commutes(&a, &b, &t).unwrap());
        let out = standard_seq_product(&a, &b, &t).unwrap();
        assert!(op_norm(&out.matrix().sub(&a.matrix().matmul(b.matrix()))) <= t.eq_tol);
    }
}

#[test]
fn luders_outputs_are_states() {
    let t = tol();
    let mut produced = 0;
    for trial in 0..200usize {
        let dim = 2 + trial % 4;
        let mut rng = SplitMix64::new(80_000 + trial as u64);
        let rho = DensityOperator::new(density_with(dim, &mut rng), &t).unwrap();
        let a = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        match luders_condition(&rho, &a, &t).unwrap() {
            Conditioned::State(out) => {
                produced += 1;
                assert!((out.trace() - 1.0).abs() <= 1e-9);
                let (values, _) = hermitian_eig(out.matrix(), &t).unwrap();
                assert!(values[0] >= -t.psd_tol);
            }
            Conditioned::ZeroOutcome => {}
        }
    }
    assert!(produced > 150, "almost all random conditionings are nonzero");
}

#[test]
fn instrument_conjugation_matches_sequential_product() {
    // The channel element of a POVM outcome acts on effects exactly as the
    // sequential product with that outcome's effect.
    let t = tol();
    for seed in 0..50u64 {
        let dim = 2 + (seed as usize) % 3;
        let povm = random_povm(dim, 3, 90_000 + seed, &t).unwrap();
        let ch = instrument_from_povm(&povm, &t).unwrap();
        let f = Effect::new(effect_with(dim, &mut SplitMix64::new(91_000 + seed)), &t).unwrap();
        for (e, root) in povm.effects().iter().zip(ch.elements()) {
            let via_channel = root.matmul(f.matrix()).matmul(&root.adjoint()).hermitize();
            let via_product = standard_seq_product(e, &f, &t).unwrap();
            assert!(op_norm(&via_channel.sub(via_product.matrix())) <= t.eq_tol);
        }
    }
}

#[test]
fn random_povm_total_probability_is_one() {
    let t = tol();
    for seed in 0..100u64 {
        let dim = 2 + (seed as usize) % 3;
        let outcomes = 2 + (seed as usize) % 4;
        let povm = random_povm(dim, outcomes, seed, &t).unwrap();
        let ch = instrument_from_povm(&povm, &t).unwrap();
        let rho =
            DensityOperator::new(density_with(dim, &mut SplitMix64::new(seed ^ 0xDEAD)), &t)
                .unwrap();
        let total: f64 = ch
            .elements()
            .iter()
            .map(|a| a.matmul(rho.matrix()).matmul(&a.adjoint()).trace().re)
            .sum();
        assert!((total - 1.0).abs() <= 1e-9, "seed {seed}: total {total}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_sqrt_reconstructs(seed in any::<u64>(), dim in 2usize..=6) {
        let t = tol();
        let mut rng = SplitMix64::new(seed);
        let g = ginibre_with(dim, &mut rng);
        let m = g.matmul(&g.adjoint()).hermitize();
        let r = sqrt_psd(&m, &t).unwrap();
        prop_assert!(op_norm(&r.matmul(&r).sub(&m)) <= t.eq_tol);
    }

    #[test]
    fn prop_polar_reconstructs(seed in any::<u64>(), dim in 2usize..=6) {
        let t = tol();
        let c = ginibre_with(dim, &mut SplitMix64::new(seed));
        let (u, p) = polar_decompose(&c, &t).unwrap();
        prop_assert!(op_norm(&u.matmul(&p).sub(&c)) <= t.eq_tol);
    }

    #[test]
    fn prop_seq_product_stays_effect(seed in any::<u64>(), dim in 2usize..=6) {
        let t = tol();
        let mut rng = SplitMix64::new(seed);
        let a = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        let b = Effect::new(effect_with(dim, &mut rng), &t).unwrap();
        let out = standard_seq_product(&a, &b, &t).unwrap();
        // Constructing through the validating constructor must succeed.
        prop_assert!(Effect::new(out.matrix().clone(), &t).is_ok());
    }

    #[test]
    fn prop_generators_deterministic(seed in any::<u64>(), dim in 2usize..=6) {
        prop_assert_eq!(random_effect(dim, seed).unwrap(), random_effect(dim, seed).unwrap());
    }
}
