//! Acceptance suite: one test per certification criterion, each printing a
//! pass/fail line (run with `cargo test --test acceptance -- --nocapture` to
//! see them all).
//!
//! Criteria 5 and 6 each contain one clause asserting the published fixed
//! waveplate settings verbatim; those settings do not realize their stated
//! observables under any retarder convention (the composite for
//! {0°, 45°, 90°} is diagonal·σx·diagonal, which conjugates σz to −σz), so
//! those clauses fail by design rather than being weakened. The remaining
//! clauses and criteria pass.

mod common;

use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use steercert::lhs::{
    falsify, fine_grained_game_max, model_fgsi_value, saturating_model, steering_bound_known,
    steering_bound_unknown, ModelFgsi,
};
use steercert::montecarlo::{estimate_s, simulate_counts, ExperimentConfig};
use steercert::optics::{
    realized_observable, realized_observable_in, reference_table, solve_angles, verify_table_row,
    JonesConvention, WaveplateSequence, TABLE_ROUNDING_TOLERANCE,
};
use steercert::quantum::{gghz_state, pauli, Axis, Bloch, TripartiteState};
use steercert::steering::{fgsi_value, optimal_scenario, Assemblage, OutcomePattern};

const PI: f64 = std::f64::consts::PI;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

struct Criterion {
    number: u32,
    name: &'static str,
    started: Instant,
    failures: Vec<String>,
}

impl Criterion {
    fn new(number: u32, name: &'static str) -> Self {
        Criterion {
            number,
            name,
            started: Instant::now(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, clause: &str, ok: bool, detail: String) {
        println!(
            "  criterion {} / {clause}: {} ({detail})",
            self.number,
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            self.failures.push(format!("{clause}: {detail}"));
        }
    }

    fn finish(self, runtime_limit: Option<f64>) {
        let elapsed = self.started.elapsed().as_secs_f64();
        let mut failures = self.failures;
        if let Some(limit) = runtime_limit {
            let ok = elapsed < limit;
            println!(
                "  criterion {} / runtime: {} ({elapsed:.2}s, limit {limit}s)",
                self.number,
                if ok { "pass" } else { "FAIL" }
            );
            if !ok {
                failures.push(format!("runtime {elapsed:.2}s exceeded {limit}s"));
            }
        }
        let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "acceptance criterion {} ({}): {verdict}",
            self.number, self.name
        );
        assert!(
            failures.is_empty(),
            "criterion {} failed: {}",
            self.number,
            failures.join("; ")
        );
    }
}

#[test]
fn criterion_1_maximal_violation() {
    let mut cr = Criterion::new(1, "maximal violation");
    let pattern = OutcomePattern::canonical();
    let table_thetas: Vec<f64> = (1..=9).map(|n| n as f64 * 0.05 * PI).collect();
    let mut worst: f64 = 0.0;
    for &theta in &table_thetas {
        let s = fgsi_value(
            &gghz_state(theta).unwrap(),
            &optimal_scenario(theta).unwrap(),
            &pattern,
        )
        .unwrap();
        worst = worst.max((s.value - 4.0).abs());
    }
    cr.check(
        "nine table angles reach S = 4 within 1e-9",
        worst <= 1e-9,
        format!("worst |S-4| = {worst:.3e}"),
    );

    let mut rng = ChaCha12Rng::seed_from_u64(1001);
    let mut worst_random: f64 = 0.0;
    for _ in 0..100 {
        let theta = (0.01 + 0.48 * rng.random::<f64>()) * PI;
        let s = fgsi_value(
            &gghz_state(theta).unwrap(),
            &optimal_scenario(theta).unwrap(),
            &pattern,
        )
        .unwrap();
        worst_random = worst_random.max((s.value - 4.0).abs());
    }
    cr.check(
        "100 random angles in (0.01pi, 0.49pi) reach S = 4 within 1e-9",
        worst_random <= 1e-9,
        format!("worst |S-4| = {worst_random:.3e}"),
    );
    cr.finish(Some(1.0));
}

#[test]
fn criterion_2_bound_values() {
    let mut cr = Criterion::new(2, "bound values");
    let known = steering_bound_known(&pauli(Axis::X), &pauli(Axis::Y));
    cr.check(
        "known-measurement bound equals 2 + sqrt(2) within 1e-12",
        (known - (2.0 + SQRT_2)).abs() <= 1e-12,
        format!("bound = {known:.15}"),
    );
    let unknown = steering_bound_unknown();
    cr.check(
        "unknown-measurement bound equals 3 exactly",
        unknown == 3.0,
        format!("bound = {unknown}"),
    );
    cr.check(
        "algebraic maximum strictly exceeds both bounds",
        4.0 > known && 4.0 > unknown,
        format!("4 vs {known:.5} and {unknown}"),
    );
    cr.finish(None);
}

#[test]
fn criterion_3_lhs_falsification() {
    let mut cr = Criterion::new(3, "LHS falsification");
    let charlie = [pauli(Axis::X), pauli(Axis::Y)];
    let pattern = OutcomePattern::canonical();
    let run = falsify(10_000, 8, 2024, &charlie, &pattern).unwrap();
    cr.check(
        "10^4 sampled models stay below 2 + sqrt(2) + 1e-9",
        run.max_s <= 2.0 + SQRT_2 + 1e-9,
        format!(
            "max S = {:.12} over {} defined ({} discarded)",
            run.max_s, run.defined, run.discarded
        ),
    );
    let model = saturating_model(&charlie[0], &charlie[1]);
    let s = match model_fgsi_value(&model, &charlie, &pattern) {
        ModelFgsi::Defined(b) => b.value,
        ModelFgsi::Undefined { term } => panic!("saturating model term {term} undefined"),
    };
    cr.check(
        "explicit saturating model reaches 2 + sqrt(2) within 1e-9",
        (s - (2.0 + SQRT_2)).abs() <= 1e-9,
        format!("S = {s:.12}"),
    );
    cr.finish(Some(10.0));
}

#[test]
fn criterion_4_fine_grained_game() {
    let mut cr = Criterion::new(4, "fine-grained game");
    let analytic = fine_grained_game_max(&pauli(Axis::X), &pauli(Axis::Y), (0, 0)).probability;
    let expected = 0.5 + 0.5 / SQRT_2;
    cr.check(
        "analytic maximum equals 1/2 + 1/(2*sqrt(2)) within 1e-12",
        (analytic - expected).abs() <= 1e-12,
        format!("P_max = {analytic:.15}"),
    );

    // Independent oracle: exhaustive Fibonacci-sphere grid over qubit states.
    let combined = Bloch::new(1.0, 1.0, 0.0);
    let golden = PI * (3.0 - 5.0_f64.sqrt());
    let n = 1_000_000usize;
    let mut grid_max = f64::NEG_INFINITY;
    for idx in 0..n {
        let z = 1.0 - 2.0 * (idx as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * idx as f64;
        let p = 0.5 + Bloch::new(r * phi.cos(), r * phi.sin(), z).dot(&combined) / 4.0;
        grid_max = grid_max.max(p);
    }
    cr.check(
        "10^6-point Bloch grid search matches within 1e-5",
        (analytic - grid_max).abs() <= 1e-5 && analytic >= grid_max,
        format!("grid max = {grid_max:.9}, analytic = {analytic:.9}"),
    );
    cr.finish(Some(5.0));
}

#[test]
fn criterion_5_optics_round_trip() {
    let mut cr = Criterion::new(5, "optics round trip");
    let mut rng = ChaCha12Rng::seed_from_u64(5005);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let target = random_observable(&mut rng);
        let seq = solve_angles(&target).unwrap();
        worst = worst.max(realized_observable(&seq).bloch_distance(&target));
    }
    cr.check(
        "1000 random targets round-trip within 1e-9",
        worst < 1e-9,
        format!("worst residual = {worst:.3e}"),
    );

    let hwp = WaveplateSequence::single_hwp(22.5_f64.to_radians());
    let dist_x = realized_observable(&hwp).bloch_distance(&pauli(Axis::X));
    cr.check(
        "fixed setting HWP 22.5 deg realizes sigma_x",
        dist_x < 1e-9,
        format!("bloch distance = {dist_x:.3e}"),
    );

    // Published fixed setting for sigma_y, asserted verbatim. The composite
    // is diagonal * sigma_x * diagonal under both supported conventions and
    // realizes -sigma_z; kept faithful, so this clause fails.
    let sandwich = WaveplateSequence::sandwich(0.0, PI / 4.0, PI / 2.0);
    let target_y = pauli(Axis::Y);
    let dist = [JonesConvention::Standard, JonesConvention::Conjugate]
        .iter()
        .map(|&conv| realized_observable_in(&sandwich, conv).bloch_distance(&target_y))
        .fold(f64::INFINITY, f64::min);
    let realized = realized_observable(&sandwich).bloch();
    cr.check(
        "fixed setting QWP(0)/HWP(45)/QWP(90) realizes sigma_y",
        dist < 1e-9,
        format!(
            "best bloch distance = {dist:.3e}; realized ({:.3}, {:.3}, {:.3})",
            realized.x, realized.y, realized.z
        ),
    );
    cr.finish(Some(5.0));
}

#[test]
fn criterion_6_table_verification() {
    let mut cr = Criterion::new(6, "table verification report");
    let rows = reference_table();
    let reports: Vec<_> = rows
        .iter()
        .map(|r| verify_table_row(r, TABLE_ROUNDING_TOLERANCE))
        .collect();
    cr.check(
        "all nine rows produce deviation reports",
        reports.len() == 9
            && reports
                .iter()
                .all(|r| r.b0_deviation.is_finite() && r.b1_deviation.is_finite()),
        format!("{} rows reported", reports.len()),
    );

    // The quarter-pi row must match (sigma_x, sigma_y) under at least one
    // supported convention. The B0 entry (0, 45, 0) realizes -sigma_z or
    // +/-sigma_y depending on convention, never sigma_x, so this clause
    // fails; the exact deviations are printed for the record.
    let quarter = rows
        .iter()
        .find(|r| (r.theta - 0.25 * PI).abs() < 1e-9)
        .expect("table contains the quarter-pi row");
    let make = |angles: &[f64; 3]| {
        WaveplateSequence::sandwich(
            angles[0].to_radians(),
            angles[1].to_radians(),
            angles[2].to_radians(),
        )
    };
    let target_x = pauli(Axis::X);
    let target_y = pauli(Axis::Y);
    let mut best = f64::INFINITY;
    let mut detail = String::new();
    for conv in JonesConvention::ALL {
        let b0 =
            realized_observable_in(&make(&quarter.b0_angles_deg), conv).bloch_distance(&target_x);
        let b1 =
            realized_observable_in(&make(&quarter.b1_angles_deg), conv).bloch_distance(&target_y);
        best = best.min(b0.max(b1));
        detail.push_str(&format!("{conv:?}: B0 {b0:.3e} B1 {b1:.3e}; "));
    }
    cr.check(
        "theta = 0.25pi row matches (sigma_x, sigma_y) within 1e-9 under a supported convention",
        best <= 1e-9,
        detail.trim_end_matches("; ").to_string(),
    );

    for report in &reports {
        println!(
            "    theta = {:.2}pi: best {:?}, B0 dev {:.4}, B1 dev {:.4}, tolerance {}, {}",
            report.theta / PI,
            report.best_convention,
            report.b0_deviation,
            report.b1_deviation,
            TABLE_ROUNDING_TOLERANCE,
            if report.pass { "pass" } else { "flagged" }
        );
    }
    cr.check(
        "remaining rows report pass/flag status against the rounding tolerance",
        reports.iter().all(|r| r.pass || !r.pass),
        "status printed per row".to_string(),
    );
    cr.finish(None);
}

#[test]
fn criterion_7_monte_carlo_convergence() {
    let mut cr = Criterion::new(7, "Monte Carlo convergence");
    let theta = 0.3 * PI;
    let state = gghz_state(theta).unwrap();
    let scenario = optimal_scenario(theta).unwrap();
    let pattern = OutcomePattern::canonical();

    let config = ExperimentConfig::new(theta, 100_000, 7).unwrap();
    let counts = simulate_counts(&state, &scenario, &config).unwrap();
    let estimate = estimate_s(&counts, &pattern);
    cr.check(
        "noiseless 10^5-event run yields s_hat = 4 exactly",
        estimate.s_hat == 4.0 && !estimate.partial,
        format!("s_hat = {}", estimate.s_hat),
    );

    let mixed = TripartiteState::maximally_mixed();
    let counts = simulate_counts(&mixed, &scenario, &config).unwrap();
    let estimate = estimate_s(&counts, &pattern);
    cr.check(
        "maximally mixed input lands within 5 stderr of 2",
        (estimate.s_hat - 2.0).abs() <= 5.0 * estimate.s_stderr,
        format!("s_hat = {:.4} +/- {:.4}", estimate.s_hat, estimate.s_stderr),
    );

    let median_s = |dark: f64| {
        let mut values: Vec<f64> = (0..3u64)
            .map(|offset| {
                let cfg = ExperimentConfig::new(theta, 20_000, 300 + offset)
                    .unwrap()
                    .with_dark_rate(dark)
                    .unwrap();
                let counts = simulate_counts(&state, &scenario, &cfg).unwrap();
                estimate_s(&counts, &pattern).s_hat
            })
            .collect();
        values.sort_by(|x, y| x.partial_cmp(y).unwrap());
        values[1]
    };
    let clean = median_s(0.0);
    let dark = median_s(0.05);
    cr.check(
        "dark rate 0.05 strictly lowers the 3-seed median s_hat",
        dark < clean,
        format!("median s_hat: {clean:.4} (clean) vs {dark:.4} (dark)"),
    );
    cr.finish(Some(30.0));
}

#[test]
fn criterion_8_property_suite() {
    let mut cr = Criterion::new(8, "normalization and no-signaling properties");
    let mut rng = ChaCha12Rng::seed_from_u64(8008);
    let mut worst_born: f64 = 0.0;
    let mut worst_nosig: f64 = 0.0;
    let mut worst_complete: f64 = 0.0;
    for trial in 0..500 {
        let state = if trial % 2 == 0 {
            random_pure_state(&mut rng)
        } else {
            random_mixed_state(&mut rng)
        };
        let scenario = random_scenario(&mut rng);

        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut total = 0.0;
                    for abc in 0..8u8 {
                        total += steercert::steering::joint_probability(
                            &state,
                            i,
                            j,
                            k,
                            (abc >> 2) & 1,
                            (abc >> 1) & 1,
                            abc & 1,
                            &scenario,
                        );
                    }
                    worst_born = worst_born.max((total - 1.0).abs());
                }
            }
        }

        let asm = Assemblage::new(&state, &scenario);
        for i in 0..2 {
            for a in 0..2u8 {
                worst_nosig = worst_nosig
                    .max((asm.alice_marginal(i, 0, a) - asm.alice_marginal(i, 1, a)).norm());
            }
        }
        for j in 0..2 {
            for b in 0..2u8 {
                worst_nosig =
                    worst_nosig.max((asm.bob_marginal(0, j, b) - asm.bob_marginal(1, j, b)).norm());
            }
        }

        let m = random_observable(&mut rng);
        let completeness = (m.projector(0).matrix() + m.projector(1).matrix()
            - steercert::quantum::identity2())
        .norm();
        worst_complete = worst_complete.max(completeness);
    }
    cr.check(
        "Born distributions sum to 1 within 1e-10",
        worst_born <= 1e-10,
        format!("worst deviation = {worst_born:.3e}"),
    );
    cr.check(
        "assemblages satisfy no-signaling within 1e-10",
        worst_nosig <= 1e-10,
        format!("worst deviation = {worst_nosig:.3e}"),
    );
    cr.check(
        "projectors are complete within 1e-10",
        worst_complete <= 1e-10,
        format!("worst deviation = {worst_complete:.3e}"),
    );
    cr.finish(Some(10.0));
}

/// Exact and oracle probability paths agree on random inputs; pins the
/// conditional-probability cross-check to an implementation-independent
/// evaluation.
#[test]
fn exact_path_matches_independent_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(31337);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let state = if trial % 2 == 0 {
            random_pure_state(&mut rng)
        } else {
            random_mixed_state(&mut rng)
        };
        let scenario = random_scenario(&mut rng);
        for (i, j, k) in steercert::steering::FGSI_SETTINGS {
            for abc in 0..8u8 {
                let (a, b, c) = ((abc >> 2) & 1, (abc >> 1) & 1, abc & 1);
                let fast =
                    steercert::steering::joint_probability(&state, i, j, k, a, b, c, &scenario);
                let slow = oracle_joint_probability(&state, i, j, k, a, b, c, &scenario);
                worst = worst.max((fast - slow).abs());
            }
        }
    }
    assert!(worst < 1e-12, "paths diverge by {worst:.3e}");
}
