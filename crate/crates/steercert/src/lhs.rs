//! Classical side of the certification: the fine-grained uncertainty game,
//! analytic steering bounds, and sampled hybrid LHV-LHV-LHS models that must
//! never exceed those bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::{
    bloch_of_density, density_from_bloch, qubit_outcome_probability, Bloch, Mat2, Observable,
    Tolerances,
};
use crate::steering::{FgsiBreakdown, OutcomePattern};

/// The classical ceilings on S, alongside the algebraic maximum. Note that
/// 2 + √2 ≈ 3.414 (known measurements) exceeds 3 (unknown measurements);
/// both are reported without asserting an ordering between them.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SteeringBounds {
    pub known_measurements: f64,
    pub unknown_measurements: f64,
    pub algebraic_max: f64,
}

impl SteeringBounds {
    /// The bounds for a mutually unbiased Charlie pair such as (σx, σy).
    pub fn reference() -> Self {
        SteeringBounds {
            known_measurements: 2.0 + std::f64::consts::SQRT_2,
            unknown_measurements: 3.0,
            algebraic_max: 4.0,
        }
    }

    /// The bounds for a specific Charlie pair.
    pub fn for_charlie_pair(c0: &Observable, c1: &Observable) -> Self {
        SteeringBounds {
            known_measurements: steering_bound_known(c0, c1),
            ..Self::reference()
        }
    }
}

/// Result of the fine-grained uncertainty game: the maximum winning
/// probability and a Bloch vector attaining it.
#[derive(Debug, Clone, Copy)]
pub struct GameMax {
    pub probability: f64,
    pub maximizer: Bloch,
}

/// Maximum over single-qubit states of (1/2)[P(win₀|m₀,ρ) + P(win₁|m₁,ρ)].
///
/// With s_t = +1 for win outcome 0 and −1 for outcome 1 this is
/// 1/2 + |s₀n₀ + s₁n₁|/4, attained by the state whose Bloch vector points
/// along s₀n₀ + s₁n₁.
pub fn fine_grained_game_max(m0: &Observable, m1: &Observable, win: (u8, u8)) -> GameMax {
    let s0 = if win.0 == 0 { 1.0 } else { -1.0 };
    let s1 = if win.1 == 0 { 1.0 } else { -1.0 };
    let combined = m0.bloch() * s0 + m1.bloch() * s1;
    let norm = combined.norm();
    let maximizer = if norm < 1e-15 {
        // Contradictory wins: every state scores 1/2; pick +z.
        Bloch::new(0.0, 0.0, 1.0)
    } else {
        combined / norm
    };
    GameMax {
        probability: 0.5 + norm / 4.0,
        maximizer,
    }
}

/// Classical ceiling on S when Charlie's two measurements are known in
/// advance: 2 · max over win-outcome choices of 2 · (game maximum). For a
/// mutually unbiased pair this equals 2 + √2.
pub fn steering_bound_known(c0: &Observable, c1: &Observable) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for w0 in 0..2u8 {
        for w1 in 0..2u8 {
            let g = fine_grained_game_max(c0, c1, (w0, w1));
            best = best.max(2.0 * (2.0 * g.probability));
        }
    }
    best
}

/// Classical ceiling on S when Charlie's measurements are unknown to Alice
/// and Bob: 2 · (3/4 + 3/4) = 3. The 3/4 average winning probability is
/// adopted as an external constant.
pub fn steering_bound_unknown() -> f64 {
    3.0
}

/// A hybrid LHV-LHV-LHS model: a distribution over hidden variables λ, with
/// deterministic response maps for Alice and Bob and a qubit state for
/// Charlie per λ.
#[derive(Debug, Clone)]
pub struct HybridLhsModel {
    weights: Vec<f64>,
    alice_response: Vec<[u8; 2]>,
    bob_response: Vec<[u8; 2]>,
    charlie_states: Vec<Mat2>,
}

impl HybridLhsModel {
    pub fn new(
        weights: Vec<f64>,
        alice_response: Vec<[u8; 2]>,
        bob_response: Vec<[u8; 2]>,
        charlie_states: Vec<Mat2>,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0
            || alice_response.len() != n
            || bob_response.len() != n
            || charlie_states.len() != n
        {
            return Err(Error::Invalid {
                what: "hybrid LHS model",
                reason: "per-lambda vectors must be nonempty and equal length".into(),
            });
        }
        let tol = Tolerances::DEFAULT.construction;
        if weights.iter().any(|&w| w < -tol) {
            return Err(Error::Invalid {
                what: "hybrid LHS model",
                reason: "negative hidden-variable weight".into(),
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::Invalid {
                what: "hybrid LHS model",
                reason: format!("weights sum to {total}, not 1"),
            });
        }
        for rho in &charlie_states {
            let tr = rho.trace();
            if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
                return Err(Error::Invalid {
                    what: "hybrid LHS model",
                    reason: "charlie state trace differs from 1".into(),
                });
            }
            if (rho - rho.adjoint()).norm() > tol {
                return Err(Error::Invalid {
                    what: "hybrid LHS model",
                    reason: "charlie state not Hermitian".into(),
                });
            }
            if bloch_of_density(rho).norm() > 1.0 + 1e-9 {
                return Err(Error::Invalid {
                    what: "hybrid LHS model",
                    reason: "charlie state outside the Bloch ball".into(),
                });
            }
        }
        Ok(HybridLhsModel {
            weights,
            alice_response,
            bob_response,
            charlie_states,
        })
    }

    pub fn lambda_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn charlie_states(&self) -> &[Mat2] {
        &self.charlie_states
    }
}

/// Joint probability under the hybrid model:
/// P(abc|A_iB_jC_k) = Σ_λ P(λ) P(a|A_i,λ) P(b|B_j,λ) P(c|C_k, ρ_λ).
#[allow(clippy::too_many_arguments)]
pub fn model_joint_probability(
    model: &HybridLhsModel,
    i: usize,
    j: usize,
    k: usize,
    a: u8,
    b: u8,
    c: u8,
    charlie: &[Observable; 2],
) -> f64 {
    let mut total = 0.0;
    for l in 0..model.lambda_count() {
        if model.alice_response[l][i] != a || model.bob_response[l][j] != b {
            continue;
        }
        total +=
            model.weights[l] * qubit_outcome_probability(&charlie[k], c, &model.charlie_states[l]);
    }
    total
}

/// S for a hybrid model, or Undefined when a conditioning branch carries no
/// probability; samplers discard Undefined values rather than imputing them.
#[derive(Debug, Clone, Copy)]
pub enum ModelFgsi {
    Defined(FgsiBreakdown),
    Undefined { term: usize },
}

impl ModelFgsi {
    pub fn value(&self) -> Option<f64> {
        match self {
            ModelFgsi::Defined(b) => Some(b.value),
            ModelFgsi::Undefined { .. } => None,
        }
    }
}

/// Evaluates the four pattern terms against the model.
pub fn model_fgsi_value(
    model: &HybridLhsModel,
    charlie: &[Observable; 2],
    pattern: &OutcomePattern,
) -> ModelFgsi {
    let mut terms = [0.0; 4];
    for (t, term) in pattern.terms().iter().enumerate() {
        let num = model_joint_probability(
            model, term.i, term.j, term.k, term.a, term.b, term.c, charlie,
        );
        let other = model_joint_probability(
            model,
            term.i,
            term.j,
            term.k,
            term.a,
            term.b,
            1 - term.c,
            charlie,
        );
        let den = num + other;
        if den < Tolerances::DEFAULT.conditional_cutoff {
            return ModelFgsi::Undefined { term: t };
        }
        terms[t] = num / den;
    }
    ModelFgsi::Defined(FgsiBreakdown {
        terms,
        value: terms.iter().sum(),
    })
}

/// The explicit model saturating the known-measurement bound for the
/// canonical pattern: every hidden variable carries the same Charlie state
/// ρ* maximizing the fine-grained game for (c0, c1), and the response maps
/// cover each term's required (a, b) so that all four conditionals are
/// defined and equal P(c|C_k, ρ*).
///
/// One hidden variable per term suffices; a single deterministic λ cannot
/// work because the canonical pattern conditions on both Alice outcomes for
/// setting 0.
pub fn saturating_model(c0: &Observable, c1: &Observable) -> HybridLhsModel {
    let pattern = OutcomePattern::canonical();
    let game = fine_grained_game_max(c0, c1, (0, 0));
    let rho = density_from_bloch(game.maximizer).expect("unit maximizer");
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    for term in pattern.terms() {
        let mut a_map = [0u8; 2];
        a_map[term.i] = term.a;
        let mut b_map = [0u8; 2];
        b_map[term.j] = term.b;
        alice.push(a_map);
        bob.push(b_map);
    }
    let n = alice.len();
    HybridLhsModel::new(vec![1.0 / n as f64; n], alice, bob, vec![rho; n])
        .expect("saturating model is valid by construction")
}

/// Draws the `index`-th model of the stream identified by `seed`. The stream
/// seed is `seed + index`, so workers can partition indices and reproduce the
/// exact same models in any order.
pub fn sample_model(seed: u64, index: u64, lambda_count: usize) -> HybridLhsModel {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(index));
    let n = lambda_count;
    // Flat simplex weights via normalized exponentials.
    let mut weights: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let response =
        |rng: &mut ChaCha12Rng| -> [u8; 2] { [rng.random_range(0..2u8), rng.random_range(0..2u8)] };
    let alice: Vec<[u8; 2]> = (0..n).map(|_| response(&mut rng)).collect();
    let bob: Vec<[u8; 2]> = (0..n).map(|_| response(&mut rng)).collect();
    let charlie: Vec<Mat2> = (0..n)
        .map(|_| {
            // Uniform over the Bloch ball: r ~ u^(1/3), direction uniform.
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let r = rng.random::<f64>().cbrt();
            let s = (1.0 - z * z).max(0.0).sqrt();
            density_from_bloch(Bloch::new(r * s * phi.cos(), r * s * phi.sin(), r * z))
                .expect("ball point")
        })
        .collect();
    HybridLhsModel::new(weights, alice, bob, charlie).expect("sampled model is valid")
}

/// Reproducible stream of pseudo-random hybrid models.
pub fn sample_models(
    count: usize,
    lambda_count: usize,
    seed: u64,
) -> Result<impl Iterator<Item = HybridLhsModel>> {
    if count < 1 {
        return Err(Error::OutOfRange {
            what: "count",
            value: count as f64,
            range: "[1, ..)",
        });
    }
    if !(1..=16).contains(&lambda_count) {
        return Err(Error::OutOfRange {
            what: "lambda_count",
            value: lambda_count as f64,
            range: "[1, 16]",
        });
    }
    Ok((0..count as u64).map(move |idx| sample_model(seed, idx, lambda_count)))
}

/// Summary of a randomized falsification run against the classical bound.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FalsificationRun {
    pub samples: usize,
    pub lambda_count: usize,
    pub seed: u64,
    pub defined: usize,
    pub discarded: usize,
    pub max_s: f64,
    pub max_s_index: Option<u64>,
    pub bound_known: f64,
    pub bound_respected: bool,
}

/// Samples `count` hybrid models in parallel and records the largest defined
/// S, which must stay below the known-measurement bound.
pub fn falsify(
    count: usize,
    lambda_count: usize,
    seed: u64,
    charlie: &[Observable; 2],
    pattern: &OutcomePattern,
) -> Result<FalsificationRun> {
    if count < 1 {
        return Err(Error::OutOfRange {
            what: "count",
            value: count as f64,
            range: "[1, ..)",
        });
    }
    if !(1..=16).contains(&lambda_count) {
        return Err(Error::OutOfRange {
            what: "lambda_count",
            value: lambda_count as f64,
            range: "[1, 16]",
        });
    }
    let results: Vec<(Option<f64>, u64)> = (0..count as u64)
        .into_par_iter()
        .map(|idx| {
            let model = sample_model(seed, idx, lambda_count);
            (model_fgsi_value(&model, charlie, pattern).value(), idx)
        })
        .collect();
    let mut defined = 0usize;
    let mut max_s = f64::NEG_INFINITY;
    let mut max_idx = None;
    for (value, idx) in &results {
        if let Some(v) = value {
            defined += 1;
            if *v > max_s {
                max_s = *v;
                max_idx = Some(*idx);
            }
        }
    }
    let bound = steering_bound_known(&charlie[0], &charlie[1]);
    Ok(FalsificationRun {
        samples: count,
        lambda_count,
        seed,
        defined,
        discarded: count - defined,
        max_s,
        max_s_index: max_idx,
        bound_known: bound,
        bound_respected: max_s <= bound + 1e-9,
    })
}
