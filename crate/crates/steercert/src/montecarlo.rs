//! Finite-statistics simulation of the proposed coincidence-counting
//! experiment: sample events per setting combination from the exact Born
//! distribution, accumulate detector counts, and estimate the conditional
//! probabilities and S with uncertainties from the raw counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lhs::SteeringBounds;
use crate::quantum::TripartiteState;
use crate::steering::{
    fgsi_value, joint_probability, optimal_scenario, MeasurementScenario, OutcomePattern,
    PatternTerm, FGSI_SETTINGS,
};

/// Knobs for one simulated run. Detection efficiency and dark counts default
/// to the ideal values.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExperimentConfig {
    pub theta: f64,
    pub events_per_setting: u64,
    pub seed: u64,
    pub detection_efficiency: f64,
    pub dark_count_rate: f64,
}

impl ExperimentConfig {
    pub fn new(theta: f64, events_per_setting: u64, seed: u64) -> Result<Self> {
        let config = ExperimentConfig {
            theta,
            events_per_setting,
            seed,
            detection_efficiency: 1.0,
            dark_count_rate: 0.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Result<Self> {
        self.detection_efficiency = efficiency;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dark_rate(mut self, rate: f64) -> Result<Self> {
        self.dark_count_rate = rate;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.events_per_setting < 1 {
            return Err(Error::OutOfRange {
                what: "events_per_setting",
                value: self.events_per_setting as f64,
                range: "[1, ..)",
            });
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(Error::OutOfRange {
                what: "detection_efficiency",
                value: self.detection_efficiency,
                range: "(0, 1]",
            });
        }
        if !(0.0..1.0).contains(&self.dark_count_rate) {
            return Err(Error::OutOfRange {
                what: "dark_count_rate",
                value: self.dark_count_rate,
                range: "[0, 1)",
            });
        }
        Ok(())
    }
}

/// Raw coincidence counts: for each of the four setting combinations, an
/// 8-cell array indexed by 4a+2b+c. Outcome (a, b, c) corresponds to the
/// detector triple (D_{1+a}, D_{3+b}, D_{5+c}) with the trigger implicit.
/// Cells sum to at most `events_per_setting`; strictly less only when
/// efficiency thinning drops events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoincidenceCounts {
    pub settings: [(usize, usize, usize); 4],
    pub cells: [[u64; 8]; 4],
    pub events_per_setting: u64,
}

impl CoincidenceCounts {
    pub fn count(&self, setting_index: usize, a: u8, b: u8, c: u8) -> u64 {
        self.cells[setting_index][cell_index(a, b, c)]
    }

    pub fn recorded_events(&self, setting_index: usize) -> u64 {
        self.cells[setting_index].iter().sum()
    }

    /// Index of the setting combination (i, j, k) within the frozen order.
    pub fn setting_index(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        self.settings.iter().position(|&s| s == (i, j, k))
    }

    /// Detector labels for an outcome triple: (D_{1+a}, D_{3+b}, D_{5+c}).
    pub fn detector_triple(a: u8, b: u8, c: u8) -> (u8, u8, u8) {
        (1 + a, 3 + b, 5 + c)
    }
}

#[inline]
pub fn cell_index(a: u8, b: u8, c: u8) -> usize {
    (4 * a + 2 * b + c) as usize
}

const CHUNK_EVENTS: u64 = 1 << 16;

/// Samples `events_per_setting` events for each of the four setting
/// combinations from the exact 8-outcome Born distribution, then applies
/// dark-count substitution and per-detector efficiency thinning.
/// Reproducible: each (setting, chunk) pair owns the pseudo-random stream
/// `(setting_index << 32) | chunk_index` of the seed, and every event
/// consumes the same number of draws regardless of the noise knobs, so
/// thinned runs are pathwise sub-samples of ideal ones.
pub fn simulate_counts(
    state: &TripartiteState,
    scenario: &MeasurementScenario,
    config: &ExperimentConfig,
) -> Result<CoincidenceCounts> {
    config.validate()?;
    let mut distributions = [[0.0f64; 8]; 4];
    for (s, &(i, j, k)) in FGSI_SETTINGS.iter().enumerate() {
        for abc in 0..8u8 {
            distributions[s][abc as usize] = joint_probability(
                state,
                i,
                j,
                k,
                (abc >> 2) & 1,
                (abc >> 1) & 1,
                abc & 1,
                scenario,
            );
        }
    }
    // Cumulative distributions for inverse-CDF sampling.
    let cumulative: Vec<[f64; 8]> = distributions
        .iter()
        .map(|p| {
            let mut cum = [0.0; 8];
            let mut acc = 0.0;
            for (slot, &prob) in cum.iter_mut().zip(p.iter()) {
                acc += prob;
                *slot = acc;
            }
            cum[7] = cum[7].max(1.0);
            cum
        })
        .collect();

    let chunk_count = config.events_per_setting.div_ceil(CHUNK_EVENTS);
    let tasks: Vec<(usize, u64)> = (0..4)
        .flat_map(|s| (0..chunk_count).map(move |chunk| (s, chunk)))
        .collect();
    let partials: Vec<(usize, [u64; 8])> = tasks
        .par_iter()
        .map(|&(s, chunk)| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
            rng.set_stream(((s as u64) << 32) | chunk);
            let start = chunk * CHUNK_EVENTS;
            let len = CHUNK_EVENTS.min(config.events_per_setting - start);
            let mut cells = [0u64; 8];
            for _ in 0..len {
                // Constant number of draws per event keeps streams aligned
                // across noise settings.
                let u_outcome: f64 = rng.random();
                let u_dark: f64 = rng.random();
                let substitution = (rng.random::<u64>() & 7) as usize;
                let u_eff = [
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                ];
                let mut outcome = cumulative[s]
                    .iter()
                    .position(|&c| u_outcome < c)
                    .unwrap_or(7);
                if u_dark < config.dark_count_rate {
                    outcome = substitution;
                }
                if u_eff.iter().all(|&u| u < config.detection_efficiency) {
                    cells[outcome] += 1;
                }
            }
            (s, cells)
        })
        .collect();

    let mut cells = [[0u64; 8]; 4];
    for (s, partial) in partials {
        for (total, add) in cells[s].iter_mut().zip(partial.iter()) {
            *total += add;
        }
    }
    Ok(CoincidenceCounts {
        settings: FGSI_SETTINGS,
        cells,
        events_per_setting: config.events_per_setting,
    })
}

/// One estimated conditional probability with its uncertainty.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TermEstimate {
    pub term: PatternTerm,
    pub p_hat: f64,
    pub stderr: f64,
    /// Denominator count N(a,b,c) + N(a,b,c̄).
    pub denominator: u64,
}

/// A term estimate, or Discarded when the conditioning branch recorded no
/// events.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum TermResult {
    Estimated(TermEstimate),
    Discarded { term: PatternTerm },
}

impl TermResult {
    pub fn estimate(&self) -> Option<&TermEstimate> {
        match self {
            TermResult::Estimated(e) => Some(e),
            TermResult::Discarded { .. } => None,
        }
    }
}

/// Ratio estimator for one pattern term: p̂ = N(a,b,c) / [N(a,b,c) + N(a,b,c̄)]
/// with the binomial standard error, floored by the rule-of-three bound 3/n
/// when p̂ sits on the boundary.
pub fn estimate_term(counts: &CoincidenceCounts, term: &PatternTerm) -> TermResult {
    let Some(setting) = counts.setting_index(term.i, term.j, term.k) else {
        return TermResult::Discarded { term: *term };
    };
    let n_win = counts.count(setting, term.a, term.b, term.c);
    let n_lose = counts.count(setting, term.a, term.b, 1 - term.c);
    let denominator = n_win + n_lose;
    if denominator == 0 {
        return TermResult::Discarded { term: *term };
    }
    let p_hat = n_win as f64 / denominator as f64;
    let stderr = if n_win == 0 || n_lose == 0 {
        3.0 / denominator as f64
    } else {
        (p_hat * (1.0 - p_hat) / denominator as f64).sqrt()
    };
    TermResult::Estimated(TermEstimate {
        term: *term,
        p_hat,
        stderr,
        denominator,
    })
}

/// The estimated S with per-term detail. Discarded terms are listed and
/// excluded; `partial` flags an incomplete sum.
#[derive(Debug, Clone, Serialize)]
pub struct EstimationResult {
    pub terms: Vec<TermResult>,
    pub s_hat: f64,
    pub s_stderr: f64,
    pub discarded_terms: Vec<usize>,
    pub partial: bool,
}

/// Sums the four term estimates; the standard error is the root sum of
/// squares since the terms come from independent setting combinations.
pub fn estimate_s(counts: &CoincidenceCounts, pattern: &OutcomePattern) -> EstimationResult {
    let terms: Vec<TermResult> = pattern
        .terms()
        .iter()
        .map(|t| estimate_term(counts, t))
        .collect();
    let mut s_hat = 0.0;
    let mut var = 0.0;
    let mut discarded = Vec::new();
    for (idx, result) in terms.iter().enumerate() {
        match result.estimate() {
            Some(e) => {
                s_hat += e.p_hat;
                var += e.stderr * e.stderr;
            }
            None => discarded.push(idx),
        }
    }
    EstimationResult {
        terms,
        s_hat,
        s_stderr: var.sqrt(),
        partial: !discarded.is_empty(),
        discarded_terms: discarded,
    }
}

/// One row of a θ scan: the exact value, the Monte Carlo estimate, and the
/// classical bounds side by side.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub theta: f64,
    pub exact_s: f64,
    pub s_hat: f64,
    pub s_stderr: f64,
    pub bound_known: f64,
    pub bound_unknown: f64,
    pub annotation: Option<String>,
}

/// Runs the full pipeline for each grid point: exact S for the GGHZ state
/// with its optimal scenario, a simulated estimate under the config template,
/// and the classical bounds. Per-θ issues become row annotations.
pub fn scan_theta(grid: &[f64], template: &ExperimentConfig) -> Vec<ScanRow> {
    let bounds = SteeringBounds::reference();
    grid.iter()
        .map(|&theta| {
            let mut row = ScanRow {
                theta,
                exact_s: f64::NAN,
                s_hat: f64::NAN,
                s_stderr: f64::NAN,
                bound_known: bounds.known_measurements,
                bound_unknown: bounds.unknown_measurements,
                annotation: None,
            };
            let config = ExperimentConfig { theta, ..*template };
            match run_point(theta, &config) {
                Ok((exact, estimate)) => {
                    row.exact_s = exact;
                    row.s_hat = estimate.s_hat;
                    row.s_stderr = estimate.s_stderr;
                    if estimate.partial {
                        row.annotation =
                            Some(format!("discarded terms {:?}", estimate.discarded_terms));
                    }
                }
                Err(e) => row.annotation = Some(e.to_string()),
            }
            row
        })
        .collect()
}

fn run_point(theta: f64, config: &ExperimentConfig) -> Result<(f64, EstimationResult)> {
    let state = TripartiteState::gghz(theta)?;
    let scenario = optimal_scenario(theta)?;
    let pattern = OutcomePattern::canonical();
    let exact = fgsi_value(&state, &scenario, &pattern)?.value;
    let counts = simulate_counts(&state, &scenario, config)?;
    Ok((exact, estimate_s(&counts, &pattern)))
}
