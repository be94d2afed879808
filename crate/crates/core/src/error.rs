use alloc::string::String;
use core::fmt;

/// Failure modes of the core crate.
///
/// The CLI maps `Domain`, `Range`, `MemoryCap`, `GridMismatch`, `Truncation` and
/// `InvalidMode` to configuration errors; the rest are numerical-consistency errors.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    Domain(String),
    /// An argument is inside the domain but beyond a configured cap.
    Range(String),
    /// The requested grid exceeds the node cap.
    MemoryCap { requested: usize, cap: usize },
    /// Two objects were sampled on different grids.
    GridMismatch { left: usize, right: usize },
    /// The Fock truncation cannot hold the requested state.
    Truncation(String),
    /// Noise mode or option outside its valid set.
    InvalidMode(String),
    /// More linear insertions than the Wick evaluator supports.
    TooManyInsertions(usize),
    /// The truncated Γ_c series did not settle at its highest order.
    NonConvergence { order: u8, term: f64, partial: f64 },
    /// A quantity that must be non-negative came out negative beyond tolerance.
    Negative { quantity: &'static str, value: f64 },
    /// The oracle lost trace or hermiticity.
    TraceDrift { time: f64, drift: f64 },
    /// A result is not finite.
    NonFinite(&'static str),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Range(_)
                | Error::MemoryCap { .. }
                | Error::GridMismatch { .. }
                | Error::Truncation(_)
                | Error::InvalidMode(_)
                | Error::TooManyInsertions(_)
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Range(m) => write!(f, "range error: {m}"),
            Error::MemoryCap { requested, cap } => {
                write!(f, "grid of {requested} nodes exceeds the cap of {cap}")
            }
            Error::GridMismatch { left, right } => {
                write!(f, "grid mismatch: {left} vs {right} nodes")
            }
            Error::Truncation(m) => write!(f, "truncation insufficient: {m}"),
            Error::InvalidMode(m) => write!(f, "invalid mode: {m}"),
            Error::TooManyInsertions(n) => {
                write!(f, "{n} insertions requested, at most 2 are supported")
            }
            Error::NonConvergence { order, term, partial } => write!(
                f,
                "Γ_c series not converged: |order-{order} term| = {term:.3e} vs |partial sum| = {partial:.3e}"
            ),
            Error::Negative { quantity, value } => {
                write!(f, "{quantity} is negative: {value:.3e}")
            }
            Error::TraceDrift { time, drift } => {
                write!(f, "trace drift {drift:.3e} at κt = {time:.4}")
            }
            Error::NonFinite(what) => write!(f, "{what} is not finite"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
