use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use tomodit_core::circuit::assemble_circuit;
use tomodit_core::linalg::{frobenius, max_abs_diff, vector_norm_sqr};
use tomodit_core::mesh::{compose, decompose};
use tomodit_core::povm::{born_probabilities, build_povm};
use tomodit_core::random::{haar_unitary, random_density_matrix, random_pure_state};
use tomodit_core::simulator::{
    LossModel, output_distribution, propagate, sample_counts, transfer_matrix,
};
use tomodit_core::state::DensityMatrix;
use tomodit_core::tomography::{
    ReconstructOptions, project_physical, reconstruct_odd, state_metrics,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn born_probabilities_form_a_distribution(n in 3usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(n, &mut rng);
        let born = born_probabilities(&rho, &build_povm(n).unwrap()).unwrap();
        prop_assert!(born.values.iter().all(|&p| p > -1e-14));
        prop_assert!((born.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(born.route_discrepancy < 1e-12);
    }

    #[test]
    fn mesh_round_trip(n in 2usize..9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(n, &mut rng);
        prop_assert!(max_abs_diff(&compose(&decompose(&u).unwrap()), &u) < 1e-10);
    }

    #[test]
    fn lossy_transfer_is_contractive(n in 3usize..6, db in 0.0f64..6.0, seed in any::<u64>()) {
        let layout = assemble_circuit(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_pure_state(n, &mut rng);
        let out = propagate(&layout, &psi, Some(&LossModel::new(db).unwrap()));
        prop_assert!(vector_norm_sqr(&out).sqrt() <= 1.0 + 1e-12);
        let m = transfer_matrix(&layout, Some(&LossModel::new(db).unwrap()));
        let norm = m.0.singular_values().max();
        prop_assert!(norm <= 1.0 + 1e-12);
    }

    #[test]
    fn odd_reconstruction_inverts_born_rule(n in prop::sample::select(vec![3usize, 5, 7, 9]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(n, &mut rng);
        let p = born_probabilities(&rho, &build_povm(n).unwrap()).unwrap().values;
        let r = reconstruct_odd(n, &p, &ReconstructOptions::default()).unwrap();
        prop_assert!(frobenius(&(&r.rho_hat - rho.matrix())) < 1e-10);
    }

    #[test]
    fn projection_is_idempotent_on_states(n in 3usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(n, &mut rng);
        let back = project_physical(rho.matrix());
        prop_assert!(max_abs_diff(back.matrix(), rho.matrix()) < 1e-10);
        let m = state_metrics(&rho, &back).unwrap();
        prop_assert!((m.fidelity - 1.0).abs() < 1e-8);
    }
}

#[test]
fn empirical_frequencies_converge() {
    for n in [3, 4] {
        let layout = assemble_circuit(n).unwrap();
        let ports = (n * n) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let psi = random_pure_state(n, &mut rng);
        let dist = output_distribution(&layout, &psi, None).unwrap();
        for shots in [100_000u64, 1_000_000] {
            let bound = 4.0 * (ports * ports / shots as f64).sqrt();
            for seed in 0..10 {
                let rec = sample_counts(&dist, shots, seed).unwrap();
                let tv: f64 = rec
                    .frequencies()
                    .iter()
                    .zip(&dist.port_probs)
                    .map(|(f, p)| (f - p).abs())
                    .sum::<f64>()
                    / 2.0;
                assert!(
                    tv < bound,
                    "n={n} shots={shots} seed={seed}: tv {tv} ≥ {bound}"
                );
            }
        }
    }
}

#[test]
fn lossy_sampling_reports_lost_photons() {
    let layout = assemble_circuit(3).unwrap();
    let psi = random_pure_state(3, &mut ChaCha8Rng::seed_from_u64(1));
    let dist = output_distribution(&layout, &psi, Some(&LossModel::new(1.0).unwrap())).unwrap();
    let rec = sample_counts(&dist, 200_000, 5).unwrap();
    let lost = rec.lost as f64 / 200_000.0;
    assert!((lost - dist.loss).abs() < 5.0 * (dist.loss * (1.0 - dist.loss) / 200_000.0).sqrt());
}

#[test]
fn mixed_and_pure_inputs_agree() {
    let layout = assemble_circuit(5).unwrap();
    let povm = build_povm(5).unwrap();
    let psi = random_pure_state(5, &mut ChaCha8Rng::seed_from_u64(2));
    let rho = DensityMatrix::pure(&psi).unwrap();
    let a = output_distribution(&layout, &psi, None).unwrap();
    let b = tomodit_core::simulator::output_distribution_mixed(&layout, &rho, None).unwrap();
    let born = born_probabilities(&rho, &povm).unwrap().values;
    for port in 0..25 {
        assert!((a.port_probs[port] - b.port_probs[port]).abs() < 1e-12);
        assert!((a.port_probs[port] - born[layout.port_map()[port]]).abs() < 1e-12);
    }
}
