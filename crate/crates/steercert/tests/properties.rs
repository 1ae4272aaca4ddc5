//! Property tests for the library invariants.

mod common;

use common::*;
use proptest::prelude::*;
use steercert::montecarlo::{estimate_term, simulate_counts, CoincidenceCounts, ExperimentConfig};
use steercert::optics::{
    hwp_matrix, qwp_matrix, realized_observable, sequence_unitary, solve_angles, WaveplateSequence,
};
use steercert::quantum::{
    bloch_observable, gghz_state, identity2, tensor2, tensor3, Bloch, Mat8, Observable,
};
use steercert::steering::{optimal_scenario, Assemblage, OutcomePattern, FGSI_SETTINGS};

fn direction() -> impl Strategy<Value = Bloch> {
    (-1.0f64..1.0, 0.0f64..(2.0 * std::f64::consts::PI))
        .prop_map(|(z, phi)| {
            let s = (1.0 - z * z).max(0.0).sqrt();
            Bloch::new(s * phi.cos(), s * phi.sin(), z)
        })
        .prop_filter("nonzero", |n| n.norm() > 0.5)
}

proptest! {
    #[test]
    fn observables_square_to_identity(n in direction()) {
        let m = bloch_observable(n).unwrap();
        let sq = m.matrix() * m.matrix();
        prop_assert!((sq - identity2()).norm() < 1e-10);
    }

    #[test]
    fn projectors_are_complete(n in direction()) {
        let m = bloch_observable(n).unwrap();
        let sum = m.projector(0).matrix() + m.projector(1).matrix();
        prop_assert!((sum - identity2()).norm() < 1e-12);
    }

    #[test]
    fn tensor3_is_associative_compatible(na in direction(), nb in direction(), nc in direction()) {
        let a = bloch_observable(na).unwrap();
        let b = bloch_observable(nb).unwrap();
        let c = bloch_observable(nc).unwrap();
        let direct = tensor3(a.matrix(), b.matrix(), c.matrix());
        // Independent route: (A (x) B) then (x) C by explicit block indexing.
        let ab = tensor2(a.matrix(), b.matrix());
        let mut nested = Mat8::zeros();
        for row_ab in 0..4 {
            for col_ab in 0..4 {
                for row_c in 0..2 {
                    for col_c in 0..2 {
                        nested[(2 * row_ab + row_c, 2 * col_ab + col_c)] =
                            ab[(row_ab, col_ab)] * c.matrix()[(row_c, col_c)];
                    }
                }
            }
        }
        prop_assert!((direct - nested).norm() < 1e-13);
    }

    #[test]
    fn waveplate_matrices_are_unitary(angle in -3.2f64..3.2) {
        let h = hwp_matrix(angle);
        let q = qwp_matrix(angle);
        prop_assert!((h.adjoint() * h - identity2()).norm() < 1e-12);
        prop_assert!((q.adjoint() * q - identity2()).norm() < 1e-12);
        prop_assert!((q * q - h).norm() < 1e-12);
    }

    #[test]
    fn realized_observables_satisfy_invariants(q1 in -1.5f64..1.5, h in -1.5f64..1.5, q2 in -1.5f64..1.5) {
        let seq = WaveplateSequence::sandwich(q1, h, q2);
        let u = sequence_unitary(&seq);
        prop_assert!((u.adjoint() * u - identity2()).norm() < 1e-12);
        let m = realized_observable(&seq);
        prop_assert!((m.bloch().norm() - 1.0).abs() < 1e-12);
        let sq = m.matrix() * m.matrix();
        prop_assert!((sq - identity2()).norm() < 1e-10);
    }

    #[test]
    fn solver_round_trips(n in direction()) {
        let target = Observable::from_bloch(n).unwrap();
        let seq = solve_angles(&target).unwrap();
        prop_assert!(realized_observable(&seq).bloch_distance(&target) < 1e-9);
        for plate in seq.plates() {
            prop_assert!(plate.angle > -std::f64::consts::FRAC_PI_2 - 1e-12);
            prop_assert!(plate.angle <= std::f64::consts::FRAC_PI_2 + 1e-12);
        }
    }

    #[test]
    fn gghz_assemblages_respect_no_signaling(theta_frac in 0.02f64..0.48) {
        let theta = theta_frac * std::f64::consts::PI;
        let state = gghz_state(theta).unwrap();
        let scenario = optimal_scenario(theta).unwrap();
        let asm = Assemblage::new(&state, &scenario);
        for i in 0..2 {
            for a in 0..2u8 {
                let d = (asm.alice_marginal(i, 0, a) - asm.alice_marginal(i, 1, a)).norm();
                prop_assert!(d < 1e-10);
            }
        }
        for j in 0..2 {
            for b in 0..2u8 {
                let d = (asm.bob_marginal(0, j, b) - asm.bob_marginal(1, j, b)).norm();
                prop_assert!(d < 1e-10);
            }
        }
    }

    #[test]
    fn term_estimates_are_exact_count_ratios(win in 0u64..2000, lose in 0u64..2000) {
        prop_assume!(win + lose > 0);
        let mut counts = CoincidenceCounts {
            settings: FGSI_SETTINGS,
            cells: [[0; 8]; 4],
            events_per_setting: win + lose,
        };
        let term = OutcomePattern::canonical().terms()[0];
        counts.cells[0][(4 * term.a + 2 * term.b + term.c) as usize] = win;
        counts.cells[0][(4 * term.a + 2 * term.b + (1 - term.c)) as usize] = lose;
        let estimate = estimate_term(&counts, &term);
        let e = estimate.estimate().expect("denominator positive");
        prop_assert_eq!(e.p_hat, win as f64 / (win + lose) as f64);
        prop_assert_eq!(e.denominator, win + lose);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_is_deterministic_and_thinning_dominated(
        seed in 0u64..1000,
        theta_frac in 0.05f64..0.45,
        efficiency in 0.4f64..0.9,
    ) {
        let theta = theta_frac * std::f64::consts::PI;
        let state = gghz_state(theta).unwrap();
        let scenario = optimal_scenario(theta).unwrap();
        let full = ExperimentConfig::new(theta, 4000, seed).unwrap();
        let thin = full.with_efficiency(efficiency).unwrap();
        let a = simulate_counts(&state, &scenario, &full).unwrap();
        let b = simulate_counts(&state, &scenario, &full).unwrap();
        prop_assert_eq!(&a, &b);
        let thinned = simulate_counts(&state, &scenario, &thin).unwrap();
        for s in 0..4 {
            for cell in 0..8 {
                prop_assert!(thinned.cells[s][cell] <= a.cells[s][cell]);
            }
        }
    }

    #[test]
    fn random_states_normalize_against_oracle(seed in 0u64..100) {
        let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(seed);
        let state = random_pure_state(&mut rng);
        let scenario = random_scenario(&mut rng);
        for (i, j, k) in FGSI_SETTINGS {
            let mut total = 0.0;
            for abc in 0..8u8 {
                total += oracle_joint_probability(
                    &state, i, j, k, (abc >> 2) & 1, (abc >> 1) & 1, abc & 1, &scenario,
                );
            }
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
