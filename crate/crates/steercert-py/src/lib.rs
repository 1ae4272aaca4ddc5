//! Python bindings: the main types and operations of the certification
//! toolkit exposed as an in-process extension module.
//!
//! Usage from Python:
//!
//!     import steercert_py as sc
//!     theta = 0.3 * math.pi
//!     s, terms = sc.fgsi_value(sc.gghz_state(theta), sc.optimal_scenario(theta))
//!     assert abs(s - 4.0) < 1e-9

use num_complex::Complex;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use steercert::lhs;
use steercert::montecarlo;
use steercert::optics;
use steercert::quantum::{self, Bloch};
use steercert::steering;

fn to_py_err(e: steercert::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A dichotomic single-qubit observable n·σ.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Observable {
    inner: quantum::Observable,
}

#[pymethods]
impl Observable {
    /// Unit Bloch vector (nx, ny, nz).
    fn bloch(&self) -> (f64, f64, f64) {
        let b = self.inner.bloch();
        (b.x, b.y, b.z)
    }

    /// 2x2 matrix as nested lists of Python complex numbers.
    fn matrix(&self) -> Vec<Vec<Complex<f64>>> {
        let m = self.inner.matrix();
        (0..2)
            .map(|row| (0..2).map(|col| m[(row, col)]).collect())
            .collect()
    }

    fn bloch_distance(&self, other: &Observable) -> f64 {
        self.inner.bloch_distance(&other.inner)
    }

    fn __repr__(&self) -> String {
        let b = self.inner.bloch();
        format!("Observable(bloch=({:.6}, {:.6}, {:.6}))", b.x, b.y, b.z)
    }
}

/// A three-qubit state (pure or mixed).
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct TripartiteState {
    inner: quantum::TripartiteState,
}

#[pymethods]
impl TripartiteState {
    /// 8x8 density matrix as nested lists of Python complex numbers.
    fn density(&self) -> Vec<Vec<Complex<f64>>> {
        let d = self.inner.density();
        (0..8)
            .map(|row| (0..8).map(|col| d[(row, col)]).collect())
            .collect()
    }

    fn is_pure(&self) -> bool {
        self.inner.pure_vector().is_some()
    }

    fn __repr__(&self) -> String {
        format!(
            "TripartiteState(pure={})",
            if self.is_pure() { "True" } else { "False" }
        )
    }
}

/// The six observables {A0, A1, B0, B1, C0, C1} of one certification run.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: steering::MeasurementScenario,
}

#[pymethods]
impl Scenario {
    fn alice(&self, i: usize) -> PyResult<Observable> {
        check_setting(i)?;
        Ok(Observable {
            inner: *self.inner.alice(i),
        })
    }

    fn bob(&self, j: usize) -> PyResult<Observable> {
        check_setting(j)?;
        Ok(Observable {
            inner: *self.inner.bob(j),
        })
    }

    fn charlie(&self, k: usize) -> PyResult<Observable> {
        check_setting(k)?;
        Ok(Observable {
            inner: *self.inner.charlie(k),
        })
    }

    fn __repr__(&self) -> String {
        "Scenario(A0,A1,B0,B1,C0,C1)".to_string()
    }
}

fn check_setting(index: usize) -> PyResult<()> {
    if index < 2 {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!(
            "setting index {index} out of range (expected 0 or 1)"
        )))
    }
}

/// Standard Pauli observable along "x", "y" or "z".
#[pyfunction]
fn pauli(axis: &str) -> PyResult<Observable> {
    let axis: quantum::Axis = axis.parse().map_err(to_py_err)?;
    Ok(Observable {
        inner: quantum::Observable::pauli(axis),
    })
}

/// Observable n·σ for a Bloch direction (normalized internally).
#[pyfunction]
fn bloch_observable(nx: f64, ny: f64, nz: f64) -> PyResult<Observable> {
    quantum::Observable::from_bloch(Bloch::new(nx, ny, nz))
        .map(|inner| Observable { inner })
        .map_err(to_py_err)
}

/// Generalized GHZ state cos(theta)|000> + sin(theta)|111>.
#[pyfunction]
fn gghz_state(theta: f64) -> PyResult<TripartiteState> {
    quantum::TripartiteState::gghz(theta)
        .map(|inner| TripartiteState { inner })
        .map_err(to_py_err)
}

/// The maximally mixed three-qubit state.
#[pyfunction]
fn maximally_mixed() -> TripartiteState {
    TripartiteState {
        inner: quantum::TripartiteState::maximally_mixed(),
    }
}

/// The measurement settings certifying a GGHZ state of angle theta.
#[pyfunction]
fn optimal_scenario(theta: f64) -> PyResult<Scenario> {
    steering::optimal_scenario(theta)
        .map(|inner| Scenario { inner })
        .map_err(to_py_err)
}

/// Joint probability P(abc|A_i B_j C_k).
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn joint_probability(
    state: &TripartiteState,
    i: usize,
    j: usize,
    k: usize,
    a: u8,
    b: u8,
    c: u8,
    scenario: &Scenario,
) -> PyResult<f64> {
    check_setting(i)?;
    check_setting(j)?;
    check_setting(k)?;
    Ok(steering::joint_probability(
        &state.inner,
        i,
        j,
        k,
        a,
        b,
        c,
        &scenario.inner,
    ))
}

/// The inequality value S and its four per-term conditional probabilities,
/// for the canonical maximal-violation outcome pattern.
#[pyfunction]
fn fgsi_value(state: &TripartiteState, scenario: &Scenario) -> PyResult<(f64, Vec<f64>)> {
    steering::fgsi_value(
        &state.inner,
        &scenario.inner,
        &steering::OutcomePattern::canonical(),
    )
    .map(|b| (b.value, b.terms.to_vec()))
    .map_err(to_py_err)
}

/// Scans the 64 outcome relabelings; returns (max_s, attaining_count,
/// undefined_count).
#[pyfunction]
fn enumerate_max_patterns(state: &TripartiteState, scenario: &Scenario) -> (f64, usize, usize) {
    let scan = steering::enumerate_max_patterns(&state.inner, &scenario.inner);
    (scan.max_value, scan.attaining.len(), scan.undefined.len())
}

/// Classical ceiling on S for a known Charlie measurement pair.
#[pyfunction]
fn steering_bound_known(c0: &Observable, c1: &Observable) -> f64 {
    lhs::steering_bound_known(&c0.inner, &c1.inner)
}

/// Classical ceiling on S when Charlie's measurements are unknown.
#[pyfunction]
fn steering_bound_unknown() -> f64 {
    lhs::steering_bound_unknown()
}

/// Maximum winning probability of the fine-grained game and the Bloch vector
/// attaining it.
#[pyfunction]
fn fine_grained_game_max(
    m0: &Observable,
    m1: &Observable,
    win0: u8,
    win1: u8,
) -> (f64, (f64, f64, f64)) {
    let g = lhs::fine_grained_game_max(&m0.inner, &m1.inner, (win0, win1));
    (g.probability, (g.maximizer.x, g.maximizer.y, g.maximizer.z))
}

/// Samples random hybrid LHV-LHV-LHS models and reports the falsification
/// summary as a dict.
#[pyfunction]
#[pyo3(signature = (samples, lambdas=8, seed=0))]
fn falsify(py: Python<'_>, samples: usize, lambdas: usize, seed: u64) -> PyResult<Py<PyDict>> {
    let charlie = [
        quantum::Observable::pauli(quantum::Axis::X),
        quantum::Observable::pauli(quantum::Axis::Y),
    ];
    let run = lhs::falsify(
        samples,
        lambdas,
        seed,
        &charlie,
        &steering::OutcomePattern::canonical(),
    )
    .map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("samples", run.samples)?;
    dict.set_item("defined", run.defined)?;
    dict.set_item("discarded", run.discarded)?;
    dict.set_item("max_s", run.max_s)?;
    dict.set_item("bound_known", run.bound_known)?;
    dict.set_item("bound_respected", run.bound_respected)?;
    Ok(dict.into())
}

/// Waveplate stack realizing the target observable, as a list of
/// (kind, fast-axis angle in degrees) pairs in traversal order.
#[pyfunction]
fn solve_angles(target: &Observable) -> PyResult<Vec<(String, f64)>> {
    let seq = optics::solve_angles(&target.inner).map_err(to_py_err)?;
    Ok(plates_to_py(&seq))
}

fn plates_to_py(seq: &optics::WaveplateSequence) -> Vec<(String, f64)> {
    seq.plates()
        .iter()
        .map(|p| {
            let kind = match p.kind {
                optics::WaveplateKind::Half => "hwp",
                optics::WaveplateKind::Quarter => "qwp",
            };
            (kind.to_string(), p.angle.to_degrees())
        })
        .collect()
}

/// The observable measured by a waveplate stack (list of ("hwp"|"qwp",
/// angle_deg)) followed by the polarizing beam splitter.
#[pyfunction]
fn realized_observable(plates: Vec<(String, f64)>) -> PyResult<Observable> {
    let mut seq = Vec::new();
    for (kind, angle_deg) in &plates {
        let angle = angle_deg.to_radians();
        match kind.as_str() {
            "hwp" => seq.push(optics::Waveplate::hwp(angle)),
            "qwp" => seq.push(optics::Waveplate::qwp(angle)),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown plate kind {other:?} (expected hwp or qwp)"
                )))
            }
        }
    }
    match seq.len() {
        1 => {
            let only = seq[0];
            let sequence = match only.kind {
                optics::WaveplateKind::Half => optics::WaveplateSequence::single_hwp(only.angle),
                optics::WaveplateKind::Quarter => {
                    return Err(PyValueError::new_err(
                        "single-plate stacks must be half-wave plates",
                    ))
                }
            };
            Ok(Observable {
                inner: optics::realized_observable(&sequence),
            })
        }
        3 => {
            if seq[0].kind != optics::WaveplateKind::Quarter
                || seq[1].kind != optics::WaveplateKind::Half
                || seq[2].kind != optics::WaveplateKind::Quarter
            {
                return Err(PyValueError::new_err(
                    "three-plate stacks must be qwp, hwp, qwp",
                ));
            }
            let sequence =
                optics::WaveplateSequence::sandwich(seq[0].angle, seq[1].angle, seq[2].angle);
            Ok(Observable {
                inner: optics::realized_observable(&sequence),
            })
        }
        n => Err(PyValueError::new_err(format!(
            "stacks have 1 or 3 plates, got {n}"
        ))),
    }
}

/// Deviation report for the bundled settings table, as a JSON string (one
/// record per row with per-convention deviations).
#[pyfunction]
#[pyo3(signature = (tolerance=None))]
fn verify_table_json(tolerance: Option<f64>) -> PyResult<String> {
    let tolerance = tolerance.unwrap_or(optics::TABLE_ROUNDING_TOLERANCE);
    let reports: Vec<optics::RowReport> = optics::reference_table()
        .iter()
        .map(|row| optics::verify_table_row(row, tolerance))
        .collect();
    serde_json::to_string(&reports).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Simulates coincidence counting and estimates S; returns a dict with the
/// raw per-setting counts and the estimate.
#[pyfunction]
#[pyo3(signature = (theta, events, seed=0, efficiency=1.0, dark=0.0))]
fn simulate(
    py: Python<'_>,
    theta: f64,
    events: u64,
    seed: u64,
    efficiency: f64,
    dark: f64,
) -> PyResult<Py<PyDict>> {
    let config = montecarlo::ExperimentConfig::new(theta, events, seed)
        .and_then(|c| c.with_efficiency(efficiency))
        .and_then(|c| c.with_dark_rate(dark))
        .map_err(to_py_err)?;
    let state = quantum::TripartiteState::gghz(theta).map_err(to_py_err)?;
    let scenario = steering::optimal_scenario(theta).map_err(to_py_err)?;
    let pattern = steering::OutcomePattern::canonical();
    let counts = montecarlo::simulate_counts(&state, &scenario, &config).map_err(to_py_err)?;
    let estimate = montecarlo::estimate_s(&counts, &pattern);
    let exact = steering::fgsi_value(&state, &scenario, &pattern)
        .map_err(to_py_err)?
        .value;

    let dict = PyDict::new(py);
    dict.set_item("theta", theta)?;
    dict.set_item("settings", counts.settings.to_vec())?;
    dict.set_item(
        "counts",
        counts.cells.iter().map(|c| c.to_vec()).collect::<Vec<_>>(),
    )?;
    dict.set_item("s_hat", estimate.s_hat)?;
    dict.set_item("s_stderr", estimate.s_stderr)?;
    dict.set_item("partial", estimate.partial)?;
    dict.set_item("exact_s", exact)?;
    let terms: Vec<Option<(f64, f64)>> = estimate
        .terms
        .iter()
        .map(|t| t.estimate().map(|e| (e.p_hat, e.stderr)))
        .collect();
    dict.set_item("terms", terms)?;
    Ok(dict.into())
}

#[pymodule]
fn steercert_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Observable>()?;
    m.add_class::<TripartiteState>()?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(pauli, m)?)?;
    m.add_function(wrap_pyfunction!(bloch_observable, m)?)?;
    m.add_function(wrap_pyfunction!(gghz_state, m)?)?;
    m.add_function(wrap_pyfunction!(maximally_mixed, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(joint_probability, m)?)?;
    m.add_function(wrap_pyfunction!(fgsi_value, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_max_patterns, m)?)?;
    m.add_function(wrap_pyfunction!(steering_bound_known, m)?)?;
    m.add_function(wrap_pyfunction!(steering_bound_unknown, m)?)?;
    m.add_function(wrap_pyfunction!(fine_grained_game_max, m)?)?;
    m.add_function(wrap_pyfunction!(falsify, m)?)?;
    m.add_function(wrap_pyfunction!(solve_angles, m)?)?;
    m.add_function(wrap_pyfunction!(realized_observable, m)?)?;
    m.add_function(wrap_pyfunction!(verify_table_json, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
