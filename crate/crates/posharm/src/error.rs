use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { what: &'static str, iterations: usize, residual: f64 },
    #[error("flags are not transverse (margin {margin:e})")]
    NotTransverse { margin: f64 },
    #[error("positivity violated: minor rows {rows:?} cols {cols:?} = {value:e}")]
    PositivityViolation { rows: alloc::vec::Vec<usize>, cols: alloc::vec::Vec<usize>, value: f64 },
    #[error("unsupported size {0}")]
    Unsupported(usize),
    #[error("parameter {0} outside the curve window")]
    Range(f64),
    #[error("solver stopped after {sweeps} sweeps with largest move {:e}", history.last().copied().unwrap_or(f64::NAN))]
    Stalled { sweeps: usize, history: alloc::vec::Vec<f64> },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
