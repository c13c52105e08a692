//! Randomized invariants across modules.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use rydsim::basis::{fibonacci, BasisSet, Configuration};
use rydsim::detection::{apply_channel, build_response_matrix, project_simplex, DetectionModel, ResponseMethod};
use rydsim::hamiltonian::{Hamiltonian, HamiltonianMode, HamiltonianSpec, StateVector};
use rydsim::krylov::{expm_apply, KrylovOptions};
use rydsim::model::{mhz, AtomArray, SPACING_Z2_UM, V_NN_Z2_MHZ};
use rydsim::mps::MpsState;
use rydsim::observables::{count_domain_walls, wall_slots, ShotSet};
use rydsim::seeding::{SeedTree, SAMPLING};
use rydsim::thermal::{domain_wall_fcs, thermal_observables, ThermalModel};

fn config(n: usize) -> impl Strategy<Value = Configuration> {
    any::<u64>().prop_map(move |w| Configuration::from_word(w & ((1u64 << n) - 1), n).unwrap())
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn chain(n: usize, mode: HamiltonianMode) -> Hamiltonian {
    let array = AtomArray::uniform(n, SPACING_Z2_UM, mhz(V_NN_Z2_MHZ)).unwrap();
    Hamiltonian::new(HamiltonianSpec::new(array, mode)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn configuration_text_round_trip(c in (1usize..40).prop_flat_map(config)) {
        let back: Configuration = c.to_string().parse().unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn odd_chains_have_even_wall_counts(c in (0usize..31).prop_flat_map(|k| config(2 * k + 1))) {
        prop_assert_eq!(count_domain_walls(&c) % 2, 0);
        prop_assert!(count_domain_walls(&c) <= wall_slots(c.len()));
    }

    #[test]
    fn constrained_dimension_is_fibonacci(n in 1usize..20) {
        prop_assert_eq!(BasisSet::enumerate(n, true).unwrap().len() as u64, fibonacci(n + 2));
    }

    #[test]
    fn hamiltonian_is_hermitian(
        (n, x, y) in (2usize..8).prop_flat_map(|n| (Just(n), complex_vec(1 << n), complex_vec(1 << n))),
        omega in 0.1f64..20.0,
        delta in -20.0f64..20.0,
    ) {
        let h = chain(n, HamiltonianMode::Full);
        let (mut hx, mut hy) = (vec![Complex64::default(); x.len()], vec![Complex64::default(); y.len()]);
        h.apply_into(omega, delta, &x, &mut hx);
        h.apply_into(omega, delta, &y, &mut hy);
        let a: Complex64 = x.iter().zip(&hy).map(|(p, q)| p.conj() * q).sum();
        let b: Complex64 = hx.iter().zip(&y).map(|(p, q)| p.conj() * q).sum();
        prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn krylov_propagation_is_unitary(psi in complex_vec(1 << 6), t in 0.0f64..1.0, delta in -10.0f64..10.0) {
        let h = chain(6, HamiltonianMode::Full);
        let norm0 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm0 > 1e-3);
        let mut v = psi.clone();
        expm_apply(|x, y| h.apply_into(mhz(2.0), delta, x, y), &mut v, t, KrylovOptions::default()).unwrap();
        let norm1 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((norm1 / norm0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mps_round_trips_state_vectors((n, amps) in (1usize..7).prop_flat_map(|n| (Just(n), complex_vec(1 << n)))) {
        prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3);
        let basis = Arc::new(BasisSet::enumerate(n, false).unwrap());
        let psi = StateVector::from_amplitudes(basis, amps).unwrap();
        let back = MpsState::from_state_vector(&psi).unwrap().to_state_vector().unwrap();
        prop_assert!((psi.overlap(&back).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn thermal_fcs_is_normalized_and_consistent(
        n in 1usize..40,
        beta_delta in 0.05f64..6.0,
        v1 in 5.0f64..40.0,
        v2_frac in 0.0f64..0.5,
    ) {
        let delta = mhz(14.0);
        let m = ThermalModel::new(n, delta, mhz(v1), mhz(v1 * v2_frac), beta_delta / delta).unwrap();
        let fcs = domain_wall_fcs(&m).unwrap();
        let total: f64 = fcs.probabilities.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(fcs.probabilities.iter().all(|&p| p >= -1e-15));
        let obs = thermal_observables(&m, 0).unwrap();
        prop_assert!((fcs.mean() - obs.mean_dw).abs() < 1e-8 * (1.0 + obs.mean_dw));
        if n % 2 == 1 {
            prop_assert!(fcs.probabilities.iter().skip(1).step_by(2).all(|&p| p.abs() < 1e-10));
        }
    }

    #[test]
    fn response_columns_are_distributions(n in 1usize..10, f_g in 0.8f64..1.0, f_r in 0.8f64..1.0) {
        let r = build_response_matrix(n, &DetectionModel::new(f_g, f_r).unwrap(), ResponseMethod::ExactEnumeration, None).unwrap();
        for l in 0..r.columns.len() {
            let s: f64 = (0..r.rows.len()).map(|k| r.m[(k, l)]).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_projection_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..30)) {
        let p = project_simplex(&DVector::from_vec(v));
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        let q = project_simplex(&p);
        prop_assert!((p - q).amax() < 1e-12);
    }

    #[test]
    fn perfect_detection_leaves_shots_untouched(shots in prop::collection::vec(config(9), 1..50), seed in any::<u64>()) {
        let set = ShotSet::new(9, shots).unwrap();
        let out = apply_channel(&set, &DetectionModel::perfect(), &mut ChaCha20Rng::seed_from_u64(seed));
        prop_assert_eq!(out, set);
    }

    #[test]
    fn shot_files_round_trip(shots in prop::collection::vec(config(13), 1..40)) {
        let set = ShotSet::new(13, shots).unwrap();
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        prop_assert_eq!(ShotSet::read_from(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn seed_streams_are_deterministic(root in any::<u64>()) {
        use rand::RngCore;
        let (a, b) = (SeedTree::new(root), SeedTree::new(root));
        prop_assert_eq!(a.stream(SAMPLING).next_u64(), b.stream(SAMPLING).next_u64());
    }
}
