//! Conditional states, joint and conditional probabilities, and the
//! fine-grained steering inequality value S for a tripartite state and a
//! measurement scenario.
//!
//! The inequality sums four conditional probabilities P(c|ab), one per
//! setting combination; the combinations are frozen to
//! (A₀B₀C₀), (A₀B₁C₁), (A₁B₁C₀), (A₁B₀C₁) and only the outcome labels vary
//! between equivalent forms.

use crate::error::{Error, Result};
use crate::quantum::{
    real_trace, tensor3, trace_out_a, trace_out_ab, Bloch, Mat2, Mat4, Observable, Tolerances,
    TripartiteState,
};

/// The four (i, j, k) setting combinations entering the inequality, in order.
pub const FGSI_SETTINGS: [(usize, usize, usize); 4] = [(0, 0, 0), (0, 1, 1), (1, 1, 0), (1, 0, 1)];

/// The six observables {A₀, A₁, B₀, B₁, C₀, C₁} of one certification run.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementScenario {
    a: [Observable; 2],
    b: [Observable; 2],
    c: [Observable; 2],
}

impl MeasurementScenario {
    pub fn new(
        a0: Observable,
        a1: Observable,
        b0: Observable,
        b1: Observable,
        c0: Observable,
        c1: Observable,
    ) -> Self {
        MeasurementScenario {
            a: [a0, a1],
            b: [b0, b1],
            c: [c0, c1],
        }
    }

    pub fn alice(&self, i: usize) -> &Observable {
        &self.a[i]
    }

    pub fn bob(&self, j: usize) -> &Observable {
        &self.b[j]
    }

    pub fn charlie(&self, k: usize) -> &Observable {
        &self.c[k]
    }

    pub fn charlie_pair(&self) -> [Observable; 2] {
        self.c
    }
}

/// The measurement settings that certify a GGHZ state of angle θ at the
/// algebraic maximum: A₀ = C₀ = σx, A₁ = C₁ = σy,
/// B₀ = sin2θ σx + cos2θ σz, B₁ = sin2θ σy + cos2θ σz.
pub fn optimal_scenario(theta: f64) -> Result<MeasurementScenario> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::OutOfRange {
            what: "theta",
            value: theta,
            range: "the open interval (0, pi/2)",
        });
    }
    let (s2, c2) = (2.0 * theta).sin_cos();
    let sx = Observable::pauli(crate::quantum::Axis::X);
    let sy = Observable::pauli(crate::quantum::Axis::Y);
    let b0 = Observable::from_bloch(Bloch::new(s2, 0.0, c2))?;
    let b1 = Observable::from_bloch(Bloch::new(0.0, s2, c2))?;
    Ok(MeasurementScenario::new(sx, sy, b0, b1, sx, sy))
}

/// One conditional-probability term: setting indices and outcome labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PatternTerm {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

/// Four terms over the frozen setting structure; only outcome labels vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct OutcomePattern {
    terms: [PatternTerm; 4],
}

impl OutcomePattern {
    /// Builds a pattern from per-term outcome labels (a, b, c), keeping the
    /// frozen setting structure.
    pub fn from_labels(labels: [(u8, u8, u8); 4]) -> Self {
        let mut terms = [PatternTerm {
            i: 0,
            j: 0,
            k: 0,
            a: 0,
            b: 0,
            c: 0,
        }; 4];
        for (t, ((i, j, k), (a, b, c))) in FGSI_SETTINGS.iter().zip(labels.iter()).enumerate() {
            terms[t] = PatternTerm {
                i: *i,
                j: *j,
                k: *k,
                a: *a,
                b: *b,
                c: *c,
            };
        }
        OutcomePattern { terms }
    }

    /// The outcome assignment under which every GGHZ state with its optimal
    /// scenario reaches the algebraic maximum S = 4:
    /// P(0|1₀1₀) + P(0|0₀1₁) + P(0|0₁1₁) + P(0|0₁1₀).
    pub fn canonical() -> Self {
        Self::from_labels([(1, 1, 0), (0, 1, 0), (0, 1, 0), (0, 1, 0)])
    }

    pub fn terms(&self) -> &[PatternTerm; 4] {
        &self.terms
    }

    /// The pattern obtained by flipping outcome labels per party and setting:
    /// `flips` holds (a₀, a₁, b₀, b₁, c₀, c₁) flip bits applied wherever the
    /// corresponding setting appears.
    pub fn relabeled(&self, flips: [u8; 6]) -> Self {
        let mut terms = self.terms;
        for t in terms.iter_mut() {
            t.a ^= flips[t.i];
            t.b ^= flips[2 + t.j];
            t.c ^= flips[4 + t.k];
        }
        OutcomePattern { terms }
    }
}

impl Default for OutcomePattern {
    fn default() -> Self {
        Self::canonical()
    }
}

/// Unnormalized conditional state of Bob and Charlie after Alice measures
/// setting `i` and obtains `a`: Tr_A[(Π_{a|A_i} ⊗ I ⊗ I) ρ]. Its trace is
/// P(a|A_i).
pub fn conditional_state_bc(
    state: &TripartiteState,
    i: usize,
    a: u8,
    scenario: &MeasurementScenario,
) -> Mat4 {
    let proj = tensor3(
        scenario.alice(i).projector(a).matrix(),
        &crate::quantum::identity2(),
        &crate::quantum::identity2(),
    );
    trace_out_a(&(proj * state.density()))
}

/// Unnormalized conditional state of Charlie after Alice and Bob measure
/// (i, j) and obtain (a, b): Tr_AB[(Π_a ⊗ Π_b ⊗ I) ρ]. Its trace is the joint
/// probability P(ab|A_iB_j).
pub fn conditional_state_c(
    state: &TripartiteState,
    i: usize,
    a: u8,
    j: usize,
    b: u8,
    scenario: &MeasurementScenario,
) -> Mat2 {
    let proj = tensor3(
        scenario.alice(i).projector(a).matrix(),
        scenario.bob(j).projector(b).matrix(),
        &crate::quantum::identity2(),
    );
    trace_out_ab(&(proj * state.density()))
}

/// Joint probability P(abc|A_iB_jC_k) = Tr[(Π_a ⊗ Π_b ⊗ Π_c) ρ].
#[allow(clippy::too_many_arguments)]
pub fn joint_probability(
    state: &TripartiteState,
    i: usize,
    j: usize,
    k: usize,
    a: u8,
    b: u8,
    c: u8,
    scenario: &MeasurementScenario,
) -> f64 {
    let proj = tensor3(
        scenario.alice(i).projector(a).matrix(),
        scenario.bob(j).projector(b).matrix(),
        scenario.charlie(k).projector(c).matrix(),
    );
    real_trace(&(proj * state.density())).clamp(0.0, 1.0)
}

/// Conditional probability P(c|ab) = P(abc|A_iB_jC_k) / P(ab|A_iB_j) for one
/// pattern term. Errors with `UndefinedConditional` when the conditioning
/// branch never occurs.
pub fn conditional_probability(
    state: &TripartiteState,
    term: &PatternTerm,
    scenario: &MeasurementScenario,
) -> Result<f64> {
    conditional_probability_indexed(state, term, scenario, 0)
}

fn conditional_probability_indexed(
    state: &TripartiteState,
    term: &PatternTerm,
    scenario: &MeasurementScenario,
    term_index: usize,
) -> Result<f64> {
    let num = joint_probability(
        state, term.i, term.j, term.k, term.a, term.b, term.c, scenario,
    );
    let other = joint_probability(
        state,
        term.i,
        term.j,
        term.k,
        term.a,
        term.b,
        1 - term.c,
        scenario,
    );
    let den = num + other;
    if den < Tolerances::DEFAULT.conditional_cutoff {
        return Err(Error::UndefinedConditional {
            term: term_index,
            denominator: den,
        });
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// The inequality value S together with its four per-term conditionals, so
/// exact and Monte Carlo evaluations can be compared term by term.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FgsiBreakdown {
    pub terms: [f64; 4],
    pub value: f64,
}

/// Evaluates S = Σ_t P(c_t | a_t b_t) for the four pattern terms. Any
/// undefined term propagates as `UndefinedConditional` naming the term.
pub fn fgsi_value(
    state: &TripartiteState,
    scenario: &MeasurementScenario,
    pattern: &OutcomePattern,
) -> Result<FgsiBreakdown> {
    let mut terms = [0.0; 4];
    for (t, term) in pattern.terms().iter().enumerate() {
        terms[t] = conditional_probability_indexed(state, term, scenario, t)?;
    }
    Ok(FgsiBreakdown {
        terms,
        value: terms.iter().sum(),
    })
}

/// Result of scanning the 64 outcome relabelings of the canonical pattern.
#[derive(Debug, Clone)]
pub struct PatternScan {
    /// Largest defined S found.
    pub max_value: f64,
    /// Patterns attaining the maximum (within 1e-9), with their values.
    pub attaining: Vec<(OutcomePattern, f64)>,
    /// Patterns skipped because a term was undefined, with the term index.
    pub undefined: Vec<(OutcomePattern, usize)>,
}

/// Evaluates all 64 per-party-per-setting outcome relabelings of the
/// canonical pattern and reports those achieving the maximum S. Patterns with
/// an undefined term are excluded and reported with the offending term.
pub fn enumerate_max_patterns(
    state: &TripartiteState,
    scenario: &MeasurementScenario,
) -> PatternScan {
    let base = OutcomePattern::canonical();
    let mut evaluated: Vec<(OutcomePattern, f64)> = Vec::new();
    let mut undefined = Vec::new();
    for bits in 0..64u8 {
        let flips = [
            bits & 1,
            (bits >> 1) & 1,
            (bits >> 2) & 1,
            (bits >> 3) & 1,
            (bits >> 4) & 1,
            (bits >> 5) & 1,
        ];
        let pattern = base.relabeled(flips);
        match fgsi_value(state, scenario, &pattern) {
            Ok(b) => evaluated.push((pattern, b.value)),
            Err(Error::UndefinedConditional { term, .. }) => undefined.push((pattern, term)),
            Err(_) => unreachable!("fgsi_value only raises UndefinedConditional"),
        }
    }
    let max_value = evaluated
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let attaining = evaluated
        .into_iter()
        .filter(|(_, v)| *v > max_value - 1e-9)
        .collect();
    PatternScan {
        max_value,
        attaining,
        undefined,
    }
}

/// The collection of Charlie's unnormalized conditional states over all
/// (i, j, a, b), the object whose structure distinguishes steerable from
/// unsteerable correlations.
#[derive(Debug, Clone)]
pub struct Assemblage {
    members: [[Mat2; 4]; 4],
}

impl Assemblage {
    pub fn new(state: &TripartiteState, scenario: &MeasurementScenario) -> Self {
        let mut members = [[Mat2::zeros(); 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        members[2 * i + j][2 * a as usize + b as usize] =
                            conditional_state_c(state, i, a, j, b, scenario);
                    }
                }
            }
        }
        Assemblage { members }
    }

    pub fn member(&self, i: usize, j: usize, a: u8, b: u8) -> &Mat2 {
        &self.members[2 * i + j][2 * a as usize + b as usize]
    }

    /// No-signaling marginal Σ_b σ_{ab}: Alice's conditional state on Charlie,
    /// which must not depend on j.
    pub fn alice_marginal(&self, i: usize, j: usize, a: u8) -> Mat2 {
        self.member(i, j, a, 0) + self.member(i, j, a, 1)
    }

    /// No-signaling marginal Σ_a σ_{ab}: Bob's conditional state on Charlie,
    /// which must not depend on i.
    pub fn bob_marginal(&self, i: usize, j: usize, b: u8) -> Mat2 {
        self.member(i, j, 0, b) + self.member(i, j, 1, b)
    }

    /// For fixed (i, j) the traces over (a, b) must sum to 1.
    pub fn trace_sum(&self, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..2u8 {
            for b in 0..2u8 {
                acc += self.member(i, j, a, b).trace().re;
            }
        }
        acc
    }
}
