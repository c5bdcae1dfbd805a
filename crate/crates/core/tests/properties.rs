use mbrb::channel::{
    apply, avg_gate_fidelity, channel_from_unitary, compose, depolarizing, random_channel, twirl, State, Unitary2,
};
use mbrb::gates::{clifford_group, derandomized_design, measurement_product, outcome_bits};
use mbrb::rng::stream;
use mbrb::wire::{frame_correction, update_pauli_frame};
use nalgebra::Matrix4;
use proptest::prelude::*;

fn clifford() -> Vec<Unitary2> {
    clifford_group().iter().map(|g| g.unitary).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_channels_are_orthogonal_and_cptp(seed in any::<u64>()) {
        let u = Unitary2::haar_random(&mut stream(seed, 0, 0, 0));
        let ch = channel_from_unitary(&u);
        let r = ch.ptm();
        prop_assert!((r.transpose() * r - Matrix4::identity()).abs().max() < 1e-12);
        prop_assert!(ch.is_cptp());
        prop_assert!((avg_gate_fidelity(&ch, &u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn twirl_is_idempotent_and_preserves_fidelity(seed in any::<u64>(), use_design in any::<bool>()) {
        let e = random_channel(&mut stream(seed, 1, 0, 0));
        let set = if use_design { derandomized_design(0.0, 0.0).unwrap().elements.to_vec() } else { clifford() };
        let once = twirl(&e, &set).unwrap();
        let twice = twirl(&once, &set).unwrap();
        prop_assert!(once.max_abs_diff(&twice) < 1e-12);
        let id = Unitary2::identity();
        prop_assert!((avg_gate_fidelity(&once, &id) - avg_gate_fidelity(&e, &id)).abs() < 1e-12);
        prop_assert!(once.is_cptp());
    }

    #[test]
    fn depolarizing_commutes_with_unitaries(p in 0.0f64..=1.0, seed in any::<u64>()) {
        let d = depolarizing(p).unwrap();
        let mut rng = stream(seed, 2, 0, 0);
        for _ in 0..100 {
            let u = channel_from_unitary(&Unitary2::haar_random(&mut rng));
            prop_assert!(compose(&d, &u).max_abs_diff(&compose(&u, &d)) < 1e-12);
        }
    }

    #[test]
    fn compose_matches_sequential_application(seed in any::<u64>()) {
        let mut rng = stream(seed, 3, 0, 0);
        let a = random_channel(&mut rng);
        let b = random_channel(&mut rng);
        let s = State::random_pure(&mut rng);
        let direct = apply(&b, &apply(&a, &s));
        let composed = apply(&compose(&b, &a), &s);
        prop_assert!((direct.vector() - composed.vector()).abs().max() < 1e-12);
        prop_assert!(compose(&b, &a).is_cptp());
    }

    #[test]
    fn design_rotations_square_to_identity(phi1 in -10.0f64..10.0, phi2 in -10.0f64..10.0) {
        let d = derandomized_design(phi1, phi2).unwrap();
        for a in &d.a {
            prop_assert!(a.pow(2).approx_eq(&Unitary2::identity(), 1e-10));
        }
        for idx in 0..32 {
            prop_assert!(d.elements[idx].approx_eq(&d.element(outcome_bits(idx)), 1e-10));
        }
    }

    #[test]
    fn frame_updates_stay_pauli(word in 0usize..24, m in prop::array::uniform3(0u8..2), x in 0u8..2, z in 0u8..2) {
        let g = &clifford_group()[word];
        let old = (x, z);
        let new = update_pauli_frame(old, g.angles(), m).unwrap();
        prop_assert!(new.0 <= 1 && new.1 <= 1);
        let actual = measurement_product(&g.angles(), &m) * frame_correction(old).adjoint();
        let predicted = frame_correction(new).adjoint() * g.unitary;
        prop_assert!(actual.approx_eq(&predicted, 1e-10));
    }
}
