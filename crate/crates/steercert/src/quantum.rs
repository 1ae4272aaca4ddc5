//! Exact finite-dimensional quantum mechanics for up to three qubits:
//! observables, projectors, tripartite states, tensor products, and
//! partial traces.
//!
//! Conventions fixed here and used by every other module:
//! - computational basis |0⟩ = (1,0)ᵀ, |1⟩ = (0,1)ᵀ, with the polarization
//!   mapping |0⟩ ↔ |H⟩, |1⟩ ↔ |V⟩;
//! - outcome label 0 ↔ eigenvalue +1 (spin-up), outcome 1 ↔ eigenvalue −1;
//! - three-qubit basis index 4a + 2b + c for parties A, B, C.

use nalgebra::{SMatrix, SVector, Vector3};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Mat2 = SMatrix<C64, 2, 2>;
pub type Mat4 = SMatrix<C64, 4, 4>;
pub type Mat8 = SMatrix<C64, 8, 8>;
pub type Vec8 = SVector<C64, 8>;
pub type Bloch = Vector3<f64>;

/// Absolute tolerances for invariant checks, collected in one record so every
/// module validates against the same numbers.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Hermiticity and trace checks on constructed operators.
    pub construction: f64,
    /// Positive-semidefiniteness floor: minimum eigenvalue ≥ −psd_floor.
    pub psd_floor: f64,
    /// Generic invariant checks (probability sums, no-signaling).
    pub invariant: f64,
    /// Denominator cutoff distinguishing a structurally zero conditioning
    /// branch from numerical noise.
    pub conditional_cutoff: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        construction: 1e-12,
        psd_floor: 1e-10,
        invariant: 1e-10,
        conditional_cutoff: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

const ZERO: C64 = Complex::new(0.0, 0.0);

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

/// One of the three Pauli axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Bloch {
        match self {
            Axis::X => Bloch::new(1.0, 0.0, 0.0),
            Axis::Y => Bloch::new(0.0, 1.0, 0.0),
            Axis::Z => Bloch::new(0.0, 0.0, 1.0),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::Invalid {
                what: "pauli axis",
                reason: format!("expected x, y or z, got {other:?}"),
            }),
        }
    }
}

/// A dichotomic single-qubit observable n·σ with unit Bloch vector n.
///
/// The matrix and the Bloch vector are stored together; construction
/// guarantees they agree, the matrix is Hermitian and traceless, and the
/// eigenvalues are exactly ±1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    matrix: Mat2,
    bloch: Bloch,
}

impl Observable {
    /// The standard Pauli observable along `axis`.
    pub fn pauli(axis: Axis) -> Self {
        // Unit axis vectors are exact; from_bloch cannot fail on them.
        Self::from_bloch(axis.unit()).expect("unit axis vector")
    }

    /// Builds n·σ from a Bloch direction. The caller should pass a unit
    /// vector; small deviations are renormalized so the eigenvalues stay
    /// exactly ±1.
    pub fn from_bloch(n: Bloch) -> Result<Self> {
        let norm = n.norm();
        if norm < 1e-12 {
            return Err(Error::ZeroVector { norm });
        }
        let n = n / norm;
        let (nx, ny, nz) = (n.x, n.y, n.z);
        let matrix = Mat2::new(
            Complex::new(nz, 0.0),
            Complex::new(nx, -ny),
            Complex::new(nx, ny),
            Complex::new(-nz, 0.0),
        );
        Ok(Observable { matrix, bloch: n })
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn bloch(&self) -> Bloch {
        self.bloch
    }

    /// Euclidean distance between the Bloch vectors of two observables.
    pub fn bloch_distance(&self, other: &Observable) -> f64 {
        (self.bloch - other.bloch).norm()
    }

    /// The rank-1 projector onto the eigenspace selected by `outcome`
    /// (0 ↔ eigenvalue +1, 1 ↔ eigenvalue −1): (I ± M)/2.
    pub fn projector(&self, outcome: u8) -> Projector {
        debug_assert!(outcome < 2);
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        let matrix = (identity2() + self.matrix * Complex::new(sign, 0.0)) * Complex::new(0.5, 0.0);
        Projector { matrix, outcome }
    }
}

/// Convenience free function mirroring [`Observable::pauli`].
pub fn pauli(axis: Axis) -> Observable {
    Observable::pauli(axis)
}

/// Convenience free function mirroring [`Observable::from_bloch`].
pub fn bloch_observable(n: Bloch) -> Result<Observable> {
    Observable::from_bloch(n)
}

/// A rank-1 projector (I ± M)/2 tagged with the outcome label it selects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector {
    matrix: Mat2,
    outcome: u8,
}

impl Projector {
    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn outcome(&self) -> u8 {
        self.outcome
    }
}

/// Convenience free function mirroring [`Observable::projector`].
pub fn projector(m: &Observable, outcome: u8) -> Projector {
    m.projector(outcome)
}

/// A three-qubit state: an 8×8 density matrix, plus the state vector when the
/// state is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct TripartiteState {
    density: Mat8,
    pure_vector: Option<Vec8>,
}

impl TripartiteState {
    /// The generalized GHZ state cosθ|000⟩ + sinθ|111⟩ for θ strictly inside
    /// (0, π/2); the boundary values are product states and rejected.
    pub fn gghz(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::OutOfRange {
                what: "theta",
                value: theta,
                range: "the open interval (0, pi/2)",
            });
        }
        let mut psi = Vec8::zeros();
        psi[0] = Complex::new(theta.cos(), 0.0);
        psi[7] = Complex::new(theta.sin(), 0.0);
        Ok(Self::from_pure_unchecked(psi))
    }

    /// A pure state from an 8-component vector; the vector is normalized.
    pub fn from_pure(psi: Vec8) -> Result<Self> {
        let norm = psi.norm();
        if norm < 1e-12 {
            return Err(Error::Invalid {
                what: "state vector",
                reason: "norm below 1e-12".into(),
            });
        }
        Ok(Self::from_pure_unchecked(psi / Complex::new(norm, 0.0)))
    }

    fn from_pure_unchecked(psi: Vec8) -> Self {
        let density = psi * psi.adjoint();
        TripartiteState {
            density,
            pure_vector: Some(psi),
        }
    }

    /// A (generally mixed) state from a density matrix, validated against the
    /// default tolerances.
    pub fn from_density(rho: Mat8) -> Result<Self> {
        let state = TripartiteState {
            density: rho,
            pure_vector: None,
        };
        state.validate(&Tolerances::DEFAULT)?;
        Ok(state)
    }

    /// The maximally mixed three-qubit state I/8.
    pub fn maximally_mixed() -> Self {
        TripartiteState {
            density: Mat8::identity() * Complex::new(1.0 / 8.0, 0.0),
            pure_vector: None,
        }
    }

    pub fn density(&self) -> &Mat8 {
        &self.density
    }

    pub fn pure_vector(&self) -> Option<&Vec8> {
        self.pure_vector.as_ref()
    }

    /// Checks unit trace, Hermiticity, positive semidefiniteness, and (for
    /// pure states) that the density equals the outer product of the vector.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let tr = self.density.trace();
        if (tr.re - 1.0).abs() > tol.construction || tr.im.abs() > tol.construction {
            return Err(Error::Invalid {
                what: "tripartite state",
                reason: format!("trace {tr} differs from 1"),
            });
        }
        let herm_dev = (self.density - self.density.adjoint()).norm();
        if herm_dev > tol.construction {
            return Err(Error::Invalid {
                what: "tripartite state",
                reason: format!("hermiticity deviation {herm_dev:.3e}"),
            });
        }
        let min_eig = self
            .density
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -tol.psd_floor {
            return Err(Error::Invalid {
                what: "tripartite state",
                reason: format!("minimum eigenvalue {min_eig:.3e}"),
            });
        }
        if let Some(psi) = &self.pure_vector {
            let dev = (self.density - psi * psi.adjoint()).norm();
            if dev > tol.construction {
                return Err(Error::Invalid {
                    what: "tripartite state",
                    reason: format!("density differs from outer product by {dev:.3e}"),
                });
            }
        }
        Ok(())
    }

    /// Reduced single-qubit state of one party (partial trace over the other
    /// two).
    pub fn reduced_single(&self, party: Party) -> Mat2 {
        let mut out = Mat2::zeros();
        for p in 0..2usize {
            for q in 0..2usize {
                let mut acc = ZERO;
                for r in 0..2usize {
                    for s in 0..2usize {
                        let (row, col) = match party {
                            Party::A => (basis_index(p, r, s), basis_index(q, r, s)),
                            Party::B => (basis_index(r, p, s), basis_index(r, q, s)),
                            Party::C => (basis_index(r, s, p), basis_index(r, s, q)),
                        };
                        acc += self.density[(row, col)];
                    }
                }
                out[(p, q)] = acc;
            }
        }
        out
    }
}

/// One of the three parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    A,
    B,
    C,
}

/// Basis index 4a + 2b + c of |abc⟩.
#[inline]
pub fn basis_index(a: usize, b: usize, c: usize) -> usize {
    4 * a + 2 * b + c
}

/// Convenience free function mirroring [`TripartiteState::gghz`].
pub fn gghz_state(theta: f64) -> Result<TripartiteState> {
    TripartiteState::gghz(theta)
}

/// Kronecker product of three single-qubit operators with ordering A ⊗ B ⊗ C.
pub fn tensor3(a: &Mat2, b: &Mat2, c: &Mat2) -> Mat8 {
    let mut out = Mat8::zeros();
    for (ia, ja) in index_pairs() {
        for (ib, jb) in index_pairs() {
            for (ic, jc) in index_pairs() {
                out[(basis_index(ia, ib, ic), basis_index(ja, jb, jc))] =
                    a[(ia, ja)] * b[(ib, jb)] * c[(ic, jc)];
            }
        }
    }
    out
}

/// Kronecker product of two single-qubit operators.
pub fn tensor2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for (ia, ja) in index_pairs() {
        for (ib, jb) in index_pairs() {
            out[(2 * ia + ib, 2 * ja + jb)] = a[(ia, ja)] * b[(ib, jb)];
        }
    }
    out
}

fn index_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..2usize).flat_map(|i| (0..2usize).map(move |j| (i, j)))
}

/// Partial trace over party A: an 8×8 operator reduced to the BC 4×4 block.
pub fn trace_out_a(x: &Mat8) -> Mat4 {
    let mut out = Mat4::zeros();
    for b in 0..2usize {
        for c in 0..2usize {
            for bp in 0..2usize {
                for cp in 0..2usize {
                    let mut acc = ZERO;
                    for a in 0..2usize {
                        acc += x[(basis_index(a, b, c), basis_index(a, bp, cp))];
                    }
                    out[(2 * b + c, 2 * bp + cp)] = acc;
                }
            }
        }
    }
    out
}

/// Partial trace over parties A and B: an 8×8 operator reduced to Charlie's
/// 2×2 block.
pub fn trace_out_ab(x: &Mat8) -> Mat2 {
    let mut out = Mat2::zeros();
    for c in 0..2usize {
        for cp in 0..2usize {
            let mut acc = ZERO;
            for a in 0..2usize {
                for b in 0..2usize {
                    acc += x[(basis_index(a, b, c), basis_index(a, b, cp))];
                }
            }
            out[(c, cp)] = acc;
        }
    }
    out
}

/// Real trace of a Hermitian product Tr[P ρ], asserting the imaginary part is
/// numerical noise.
pub fn real_trace(x: &Mat8) -> f64 {
    let tr = x.trace();
    debug_assert!(tr.im.abs() < 1e-9, "trace has imaginary part {}", tr.im);
    tr.re
}

/// Bloch vector of a 2×2 Hermitian operator with unit trace.
pub fn bloch_of_density(rho: &Mat2) -> Bloch {
    Bloch::new(
        2.0 * rho[(1, 0)].re,
        2.0 * rho[(1, 0)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    )
}

/// Single-qubit density matrix (I + r·σ)/2 for a Bloch vector with |r| ≤ 1.
pub fn density_from_bloch(r: Bloch) -> Result<Mat2> {
    let norm = r.norm();
    if norm > 1.0 + 1e-9 {
        return Err(Error::OutOfRange {
            what: "bloch vector norm",
            value: norm,
            range: "the closed unit ball",
        });
    }
    Ok(Mat2::new(
        Complex::new(0.5 * (1.0 + r.z), 0.0),
        Complex::new(0.5 * r.x, -0.5 * r.y),
        Complex::new(0.5 * r.x, 0.5 * r.y),
        Complex::new(0.5 * (1.0 - r.z), 0.0),
    ))
}

/// Born probability of `outcome` when measuring `m` on the single-qubit state
/// `rho`: Tr[Π ρ].
pub fn qubit_outcome_probability(m: &Observable, outcome: u8, rho: &Mat2) -> f64 {
    let p = (m.projector(outcome).matrix() * rho).trace();
    p.re
}
