//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by cut-point computations, simulations and serialization.
#[derive(Debug, Error)]
pub enum CutpointError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `t(n, p) >= 1` on the whole prevalence scan at this `n`: the procedure
    /// never beats individual testing there, so `t(n, p) = 1` has no root in
    /// `(0, UCP]`. This is an (M4) violation at `n`.
    #[error("no root of t(n, p) = 1 in (0, UCP] at n = {n}: rate never drops below 1")]
    NoRoot { n: f64 },

    /// `t(n, UCP) < 1`: the root of `t(n, p) = 1` lies above UCP, which
    /// contradicts (M3) at this `n`.
    #[error("root of t(n, p) = 1 lies above UCP at n = {n}: t(n, UCP) < 1")]
    RootAboveUcp { n: f64 },

    /// The procedure is defined on integer cohort parameters only.
    #[error("{procedure} is defined for integer n only, got n = {n}")]
    IntegerCohortRequired { procedure: &'static str, n: f64 },

    /// The operation needs a continuously extendable rate, which this
    /// procedure does not have (its (M1) trust flag is false).
    #[error("{procedure} has no continuous rate extension; {operation} is inapplicable")]
    NotContinuous {
        procedure: &'static str,
        operation: &'static str,
    },

    /// There is no registered procedure under this name.
    #[error("unknown procedure '{0}'")]
    UnknownProcedure(String),

    /// The discrete recovery recipe needs an interior stationary point,
    /// which boundary-type (b1) bifurcations do not have. The discrete
    /// cut-point then coincides with the continuous one.
    #[error("discrete recovery inapplicable for bifurcation type {bifurcation_type}: no stationary point")]
    DiscreteRecoveryInapplicable { bifurcation_type: &'static str },

    /// No Monte-Carlo protocol exists for this procedure.
    #[error("{0} is not simulatable: no testing protocol is registered for it")]
    NotSimulatable(&'static str),

    /// Malformed curve CSV input.
    #[error("curve CSV parse error on line {line}: {reason}")]
    CsvParse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CutpointError>;
