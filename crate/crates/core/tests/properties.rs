use lhvpov::channels::{apply_channel_to_state, pullback_measurement};
use lhvpov::lhv::{alice_response, bob_response, joint_prob_closed, sample_lambda};
use lhvpov::linalg::{fine_grain, spectral_decompose, validate_povm, Operator, TOL_RECON};
use lhvpov::oracle::born_prob;
use lhvpov::{random, WernerState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_reconstruction(seed in any::<u64>(), d in 2usize..=6) {
        let op = random::hermitian(d, &mut rng(seed));
        let pairs = spectral_decompose(&op).unwrap();
        let rebuilt = pairs.iter().fold(Operator::zeros(d), |acc, (l, v)| {
            &acc + &Operator::projector(v).scale(*l)
        });
        prop_assert!(rebuilt.max_abs_diff(&op).unwrap() <= TOL_RECON);
        prop_assert!(pairs.windows(2).all(|w| w[0].0 >= w[1].0));
    }

    #[test]
    fn degenerate_spectra_reconstruct(seed in any::<u64>(), d in 2usize..=6, split in 1usize..6) {
        // two-level spectrum conjugated by a random unitary
        let mut r = rng(seed);
        let k = split.min(d - 1);
        let diag: Vec<f64> = (0..d).map(|i| if i < k { 0.7 } else { 0.2 }).collect();
        let u = Operator::new(random::haar_unitary(d, &mut r)).unwrap();
        let op = &(&u * &Operator::from_real_diagonal(&diag)) * &u.dagger();
        let pairs = spectral_decompose(&op).unwrap();
        let rebuilt = pairs.iter().fold(Operator::zeros(d), |acc, (l, v)| {
            &acc + &Operator::projector(v).scale(*l)
        });
        prop_assert!(rebuilt.max_abs_diff(&op).unwrap() <= TOL_RECON);
        prop_assert_eq!(spectral_decompose(&op).unwrap(), pairs);
    }

    #[test]
    fn fine_grain_is_idempotent_for_probabilities(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let a = random::general_povm(d, 3, &mut r).unwrap();
        let b = random::rank_one_povm(d, d + 1, &mut r).unwrap();
        let once = fine_grain(&a).unwrap();
        let twice = fine_grain(&once).unwrap();
        let t1 = joint_prob_closed(&once, &b).unwrap();
        let t2 = joint_prob_closed(&twice, &b).unwrap();
        prop_assert_eq!(t1, t2);
        // refining into rank-one outcomes and re-aggregating changes nothing either
        let refined = a.refined().unwrap();
        let t3 = joint_prob_closed(&refined, &b).unwrap();
        let mut agg = vec![0.0; a.len() * b.len()];
        for (k, f) in a.fine_grained().iter().enumerate() {
            for j in 0..b.len() {
                agg[f.outcome * b.len() + j] += t3.get(k, j);
            }
        }
        for (x, y) in agg.iter().zip(&joint_prob_closed(&a, &b).unwrap().probs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn povms_are_closed_under_unitary_conjugation(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let povm = random::general_povm(d, 4, &mut r).unwrap();
        let u = Operator::new(random::haar_unitary(d, &mut r)).unwrap();
        let rotated = povm.elements().iter().map(|e| &(&u * e) * &u.dagger()).collect();
        prop_assert!(validate_povm(rotated).is_ok());
    }

    #[test]
    fn responses_are_distributions(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let a = random::general_povm(d, 3, &mut r).unwrap();
        let b = random::rank_one_povm(d, d + 2, &mut r).unwrap();
        for _ in 0..10 {
            let lambda = sample_lambda(d, &mut r);
            let ra = alice_response(&a, &lambda).unwrap();
            let rb = bob_response(&b, &lambda).unwrap();
            // acceptance mass never exceeds one, so rejection is in [0, 1]
            let accepted: f64 = a.fine_grained().iter().map(|f| {
                let o = f.element.direction.dotc(lambda.vector()).norm_sqr();
                if o > 1.0 / d as f64 { f.element.weight * o } else { 0.0 }
            }).sum();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&accepted));
            for resp in [&ra, &rb] {
                prop_assert!(resp.outcome_probs.iter().all(|p| (-1e-15..=1.0 + 1e-12).contains(p)));
                let total: f64 = resp.outcome_probs.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_equals_born_rule(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let a = random::general_povm(d, 3, &mut r).unwrap();
        let b = random::rank_one_povm(d, d + 1, &mut r).unwrap();
        let rho = WernerState::simulated(d).unwrap().materialize();
        let closed = joint_prob_closed(&a, &b).unwrap();
        let born = born_prob(&rho, &a, &b).unwrap();
        prop_assert!(closed.max_abs_diff(&born) < 1e-10);
    }

    #[test]
    fn pullback_preserves_validity_and_traces(seed in any::<u64>(), d in 2usize..=3, ka in 1usize..=4, kb in 1usize..=4) {
        let mut r = rng(seed);
        let ca = random::kraus_channel(d, ka, &mut r).unwrap();
        let cb = random::kraus_channel(d, kb, &mut r).unwrap();
        let a = random::general_povm(d, 3, &mut r).unwrap();
        let b = random::projective_povm(d, &mut r).unwrap();
        let pa = pullback_measurement(&a, &ca).unwrap();
        let pb = pullback_measurement(&b, &cb).unwrap();
        let rho = WernerState::simulated(d).unwrap().materialize();
        let lhs = born_prob(&rho, &pa, &pb).unwrap();
        let rhs = born_prob(&apply_channel_to_state(&rho, &ca, &cb).unwrap(), &a, &b).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }
}
