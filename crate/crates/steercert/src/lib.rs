//! Desk-scale certification toolkit for tripartite steering of generalized
//! GHZ states.
//!
//! The toolkit computes the fine-grained steering inequality value exactly,
//! verifies the classical (local-hidden-state) bounds, maps abstract qubit
//! measurements to polarization-optics waveplate settings, and simulates the
//! proposed photonic coincidence-counting experiment with finite statistics.
//!
//! ```
//! use steercert::quantum::gghz_state;
//! use steercert::steering::{fgsi_value, optimal_scenario, OutcomePattern};
//!
//! let theta = 0.3 * std::f64::consts::PI;
//! let s = fgsi_value(
//!     &gghz_state(theta).unwrap(),
//!     &optimal_scenario(theta).unwrap(),
//!     &OutcomePattern::canonical(),
//! )
//! .unwrap();
//! assert!((s.value - 4.0).abs() < 1e-9);
//! ```

pub mod cli;
pub mod error;
pub mod lhs;
pub mod montecarlo;
pub mod optics;
pub mod quantum;
pub mod steering;

pub use error::{Error, Result};
