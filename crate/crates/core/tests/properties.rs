use chernoff_qkd::divergence::{fidelity, nqcd, trace_distance, Measures};
use chernoff_qkd::protocol::{all_messages, key_marginal, simulate_blocks, AttackModel, Variant};
use chernoff_qkd::qmath::{cond_entropy_cq, partial_trace, DensityMatrix, DEFAULT_MAX_DIM};
use chernoff_qkd::random::{density_matrix, pure_state, unitary};
use chernoff_qkd::scenarios::{isotropic_attack, ScenarioId};
use chernoff_qkd::security::{
    continuity_lower_bound, delta_k, evaluate_conditions, exact_dw_margin, key_entropy, DEFAULT_TOL_COND,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state(rng: &mut ChaCha8Rng, d: usize) -> DensityMatrix<f64> {
    if rng.gen_bool(0.3) {
        pure_state(d, rng)
    } else {
        density_matrix(d, rng)
    }
}

fn attack(rng: &mut ChaCha8Rng, eps: f64) -> AttackModel<f64> {
    let sigma: [DensityMatrix<f64>; 4] = std::array::from_fn(|_| state(rng, 2));
    AttackModel::from_conditional_states(eps, &sigma).unwrap()
}

fn q_of(a: &DensityMatrix<f64>, b: &DensityMatrix<f64>) -> f64 {
    nqcd(a, b, 1e-12).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn measures_are_symmetric(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, s) = (state(&mut rng, d), state(&mut rng, d));
        prop_assert!((trace_distance(&r, &s).unwrap() - trace_distance(&s, &r).unwrap()).abs() < 1e-12);
        prop_assert!((fidelity(&r, &s).unwrap() - fidelity(&s, &r).unwrap()).abs() < 1e-8);
        prop_assert!((q_of(&r, &s) - q_of(&s, &r)).abs() < 1e-9);
    }

    #[test]
    fn measures_are_unitarily_invariant(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, s) = (state(&mut rng, d), state(&mut rng, d));
        let u = unitary::<f64, _>(d, &mut rng);
        let (ru, su) = (r.conjugate_by(&u).unwrap(), s.conjugate_by(&u).unwrap());
        let (m, mu) = (Measures::compute(&r, &s).unwrap(), Measures::compute(&ru, &su).unwrap());
        prop_assert!((m.trace_distance - mu.trace_distance).abs() < 1e-9);
        prop_assert!((m.fidelity - mu.fidelity).abs() < 1e-7);
        prop_assert!((m.nqcd.value - mu.nqcd.value).abs() < 1e-8);
    }

    #[test]
    fn joint_convexity(seed in any::<u64>(), d in 2usize..5, w in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r0, s0, r1, s1) = (state(&mut rng, d), state(&mut rng, d), state(&mut rng, d), state(&mut rng, d));
        let r = DensityMatrix::mixture(&[(w, &r0), (1.0 - w, &r1)]).unwrap();
        let s = DensityMatrix::mixture(&[(w, &s0), (1.0 - w, &s1)]).unwrap();
        let d_mix = trace_distance(&r, &s).unwrap();
        let d_avg = w * trace_distance(&r0, &s0).unwrap() + (1.0 - w) * trace_distance(&r1, &s1).unwrap();
        prop_assert!(d_mix <= d_avg + 1e-10);
        // Q is jointly concave: a minimum of jointly concave maps.
        let q_avg = w * q_of(&r0, &s0) + (1.0 - w) * q_of(&r1, &s1);
        prop_assert!(q_of(&r, &s) >= q_avg - 1e-8);
    }

    #[test]
    fn partial_trace_does_not_increase_distinguishability(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = density_matrix::<f64, _>(6, &mut rng).with_dims(vec![2, 3]).unwrap();
        let s = density_matrix::<f64, _>(6, &mut rng).with_dims(vec![2, 3]).unwrap();
        for keep in [[0usize], [1]] {
            let (rk, sk) = (partial_trace(&r, &keep).unwrap(), partial_trace(&s, &keep).unwrap());
            prop_assert!(trace_distance(&rk, &sk).unwrap() <= trace_distance(&r, &s).unwrap() + 1e-10);
            prop_assert!(fidelity(&rk, &sk).unwrap() >= fidelity(&r, &s).unwrap() - 1e-8);
            prop_assert!(q_of(&rk, &sk) >= q_of(&r, &s) - 1e-8);
        }
    }

    #[test]
    fn delta_below_beta_power(eps in 1e-6f64..0.5, k in 1usize..=64) {
        let beta = eps / (1.0 - eps);
        let d = delta_k(eps, k).unwrap();
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert!(d <= beta.powi(k as i32) * (1.0 + 1e-12));
    }

    #[test]
    fn verdict_implications(seed in any::<u64>(), eps in 0.0f64..0.5, tie in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sigma: [DensityMatrix<f64>; 4] = std::array::from_fn(|_| state(&mut rng, 2));
        if tie {
            sigma[2] = sigma[1].clone();
        }
        let a = AttackModel::from_conditional_states(eps, &sigma).unwrap();
        let v = evaluate_conditions(&a, DEFAULT_TOL_COND).unwrap();
        prop_assert_eq!(v.thm1_sufficient, v.q_value > v.beta);
        prop_assert!(!v.thm2_insecure || v.thm2_applicable);
        prop_assert!(!v.f_sufficient || v.thm1_sufficient);
        prop_assert!(!(v.f_necessary && v.thm2_applicable) || v.thm2_insecure);
        prop_assert_eq!(v.thm2_applicable, tie || trace_distance(a.state(0, 1), a.state(1, 0)).unwrap() <= DEFAULT_TOL_COND);
    }
}

#[test]
fn key_entropy_is_message_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let a = attack(&mut rng, 0.12);
        for k in 1..=3 {
            let h0 = key_entropy(&a, k).unwrap();
            for m in all_messages(k) {
                let h = cond_entropy_cq(&key_marginal(&a.accepted_block_ensemble(&m).unwrap()).unwrap()).unwrap();
                assert!((h - h0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn continuity_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let eps = rng.gen_range(0.0..0.5);
        let a = attack(&mut rng, eps);
        for k in 1..=3 {
            for m in all_messages(k) {
                let h_tilde = cond_entropy_cq(&a.block_tilde(&m).unwrap().ensemble).unwrap();
                let exact = cond_entropy_cq(&key_marginal(&a.accepted_block_ensemble(&m).unwrap()).unwrap()).unwrap();
                let bound = continuity_lower_bound(h_tilde, eps, k).unwrap();
                assert!(exact >= bound - 1e-10, "k={k}: exact {exact} < bound {bound}");
            }
        }
    }
}

#[test]
fn decoupled_eve_margin_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let s = density_matrix::<f64, _>(3, &mut rng);
    let sigma = [s.clone(), s.clone(), s.clone(), s];
    for eps in [0.0, 0.1, 0.3] {
        let a = AttackModel::from_conditional_states(eps, &sigma).unwrap();
        for k in 1..=3 {
            let (e, f) = (eps.powi(k as i32), (1.0f64 - eps).powi(k as i32));
            let d = e / (e + f);
            let h = if d > 0.0 { -d * d.log2() - (1.0 - d) * (1.0 - d).log2() } else { 0.0 };
            assert!((exact_dw_margin(&a, k).unwrap() - (1.0 - h)).abs() < 1e-10);
        }
    }
}

#[test]
fn isotropic_margin_changes_sign() {
    for id in ScenarioId::ALL {
        let low = isotropic_attack::<f64>(id, 0.01).unwrap();
        assert!(exact_dw_margin(&low, 3).unwrap() > 0.0, "{id:?}");
        let high = isotropic_attack::<f64>(id, 0.45).unwrap();
        assert!(exact_dw_margin(&high, 3).unwrap() < 0.0, "{id:?}");
    }
}

#[test]
fn capacity_is_enforced() {
    let a = isotropic_attack::<f64>(ScenarioId::Case1, 0.1).unwrap();
    assert!(a.block_bar(5).is_err());
    // One round acts on E (x) T of dimension 8, so two rounds need 64.
    assert!(a.clone().with_max_dim(63).block_bar(2).is_err());
    assert!(a.with_max_dim(64).block_bar(2).is_ok());
    assert!(DEFAULT_MAX_DIM >= 64);
}

#[test]
fn simulator_is_seeded() {
    let a = simulate_blocks(0.2, 3, 50_000, Variant::Standard, 9).unwrap();
    let b = simulate_blocks(0.2, 3, 50_000, Variant::Standard, 9).unwrap();
    let c = simulate_blocks(0.2, 3, 50_000, Variant::Standard, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.blocks_accepted, c.blocks_accepted);
    assert!(simulate_blocks(0.6, 3, 10, Variant::Standard, 0).is_err());
}

#[test]
fn single_precision_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..10 {
        let (r, s) = (density_matrix::<f64, _>(3, &mut rng), density_matrix::<f64, _>(3, &mut rng));
        let to32 = |m: &DensityMatrix<f64>| {
            DensityMatrix::<f32>::new(m.matrix().map_real(|x| x as f32), vec![3]).unwrap()
        };
        let q64 = q_of(&r, &s);
        let q32 = nqcd(&to32(&r), &to32(&s), 1e-4).unwrap().value;
        assert!((q64 - q32 as f64).abs() < 1e-4, "{q64} vs {q32}");
        let d32 = trace_distance(&to32(&r), &to32(&s)).unwrap();
        assert!((trace_distance(&r, &s).unwrap() - d32 as f64).abs() < 1e-5);
    }
}
