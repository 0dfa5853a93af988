use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The step-scale equation of a quantizer had no positive root. The sign
    /// rules make this unreachable for finite inputs.
    #[error("no positive root of the order-{order} step equation (r = {r}, a = {a})")]
    NoPositiveRoot { order: usize, r: f64, a: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("simulation stalled at t = {t}")]
    StalledSimulation { t: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("output grids do not match")]
    GridMismatch,

    #[error("reference spike count is zero for run {0}")]
    ZeroReference(usize),

    #[error("infeasible topology: {0}")]
    InvalidTopology(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
