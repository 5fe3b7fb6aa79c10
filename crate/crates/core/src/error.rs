use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value {value} passed as {name}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("state diverged at step {step}: |u| = {magnitude} exceeds ceiling {ceiling}")]
    StateDiverged {
        step: usize,
        magnitude: f64,
        ceiling: f64,
    },

    #[error("bitstream length mismatch: requested {requested} bits, {available} available")]
    TooFewBits { requested: usize, available: usize },

    #[error("difference stream is identically zero over {len} bits; use a flaky quantizer or more pairs")]
    NoSignal { len: usize },

    #[error("no root of the degree-{degree} polynomial in [0, {ceiling}]; more bits are needed")]
    NoRoot { degree: usize, ceiling: f64 },

    #[error("structure violation: {0}")]
    StructureViolation(String),

    #[error("{what} bound violated: value {value} < bound {bound}")]
    BoundViolated {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("tolerance delta = {delta} is inadmissible: lower alpha bound {lower} exceeds upper bound {upper}")]
    InadmissibleTolerance { delta: f64, lower: f64, upper: f64 },
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}
