use thiserror::Error;

/// Errors produced by the steering certification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A Bloch direction with near-zero norm cannot define an observable.
    #[error("bloch vector norm {norm:.3e} is below 1e-12; no direction defined")]
    ZeroVector { norm: f64 },

    /// A parameter fell outside its valid range.
    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A conditional probability was requested on an outcome branch that never
    /// occurs (denominator below the structural-zero cutoff).
    #[error(
        "conditional probability undefined for term {term}: \
         denominator {denominator:.3e} is below the 1e-12 cutoff"
    )]
    UndefinedConditional { term: usize, denominator: f64 },

    /// The waveplate angle solver failed to reach the target observable.
    #[error("angle solver residual {residual:.3e} exceeds 1e-9 for target bloch ({nx:.6}, {ny:.6}, {nz:.6})")]
    NoConvergence {
        residual: f64,
        nx: f64,
        ny: f64,
        nz: f64,
    },

    /// A constructed value violates a domain-type invariant.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
