#![allow(dead_code)]

//! Shared test support: an independent Born-rule oracle built on plain
//! nested-array arithmetic (no shared code with the library's operator
//! pipeline), plus seeded random states, observables, and scenarios.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use steercert::quantum::{Bloch, Observable, TripartiteState};
use steercert::steering::MeasurementScenario;

pub type C = Complex<f64>;

/// 2x2 complex matrix as nested arrays.
pub type Raw2 = [[C; 2]; 2];

fn zero() -> C {
    Complex::new(0.0, 0.0)
}

/// Projector (I + s·n·σ)/2 assembled directly from the Bloch direction.
pub fn raw_projector(n: Bloch, outcome: u8) -> Raw2 {
    let s = if outcome == 0 { 1.0 } else { -1.0 };
    [
        [
            Complex::new(0.5 * (1.0 + s * n.z), 0.0),
            Complex::new(0.5 * s * n.x, -0.5 * s * n.y),
        ],
        [
            Complex::new(0.5 * s * n.x, 0.5 * s * n.y),
            Complex::new(0.5 * (1.0 - s * n.z), 0.0),
        ],
    ]
}

/// Independent joint-probability oracle: assembles the 8×8 projector by
/// explicit Kronecker indexing and contracts it against the density matrix
/// with plain loops.
#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
pub fn oracle_joint_probability(
    state: &TripartiteState,
    i: usize,
    j: usize,
    k: usize,
    a: u8,
    b: u8,
    c: u8,
    scenario: &MeasurementScenario,
) -> f64 {
    let pa = raw_projector(scenario.alice(i).bloch(), a);
    let pb = raw_projector(scenario.bob(j).bloch(), b);
    let pc = raw_projector(scenario.charlie(k).bloch(), c);
    let rho = state.density();
    let mut total = zero();
    // Tr[P rho] = sum_{rows, cols} P[row, col] * rho[col, row].
    for a1 in 0..2usize {
        for b1 in 0..2usize {
            for c1 in 0..2usize {
                for a2 in 0..2usize {
                    for b2 in 0..2usize {
                        for c2 in 0..2usize {
                            let row = 4 * a1 + 2 * b1 + c1;
                            let col = 4 * a2 + 2 * b2 + c2;
                            let p = pa[a1][a2] * pb[b1][b2] * pc[c1][c2];
                            total += p * rho[(col, row)];
                        }
                    }
                }
            }
        }
    }
    assert!(total.im.abs() < 1e-10, "oracle trace has imaginary part");
    total.re
}

/// Standard normal via Box-Muller.
pub fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniformly random Bloch direction.
pub fn random_direction(rng: &mut ChaCha12Rng) -> Bloch {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Bloch::new(s * phi.cos(), s * phi.sin(), z)
}

pub fn random_observable(rng: &mut ChaCha12Rng) -> Observable {
    Observable::from_bloch(random_direction(rng)).expect("unit direction")
}

pub fn random_scenario(rng: &mut ChaCha12Rng) -> MeasurementScenario {
    MeasurementScenario::new(
        random_observable(rng),
        random_observable(rng),
        random_observable(rng),
        random_observable(rng),
        random_observable(rng),
        random_observable(rng),
    )
}

/// Haar-ish random pure state: normalized vector of complex Gaussians.
pub fn random_pure_state(rng: &mut ChaCha12Rng) -> TripartiteState {
    let mut psi = steercert::quantum::Vec8::zeros();
    for idx in 0..8 {
        psi[idx] = Complex::new(gaussian(rng), gaussian(rng));
    }
    TripartiteState::from_pure(psi).expect("nonzero vector")
}

/// Random full-rank mixed state rho = G G† / Tr[G G†].
pub fn random_mixed_state(rng: &mut ChaCha12Rng) -> TripartiteState {
    let mut g = steercert::quantum::Mat8::zeros();
    for row in 0..8 {
        for col in 0..8 {
            g[(row, col)] = Complex::new(gaussian(rng), gaussian(rng));
        }
    }
    let product = g * g.adjoint();
    let trace = product.trace().re;
    TripartiteState::from_density(product / Complex::new(trace, 0.0)).expect("valid density")
}
