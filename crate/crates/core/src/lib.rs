//! Event-driven quantized-state integration of ordinary differential equations.
//!
//! The solvers in [`engine`] advance each state variable asynchronously: a
//! variable is re-quantized only when its state drifts a quantum away from its
//! quantized trajectory. [`quantizer`] holds the update rules of the QSS,
//! LIQSS, eLIQSS and Chebyshev LIQSS families, [`baseline`] a classic
//! Dormand-Prince integrator used for cross-checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod baseline;
pub mod engine;
pub mod error;
pub mod io;
pub mod jet;
pub mod metrics;
pub mod models;
pub mod poly;
pub mod quantizer;

pub use engine::{simulate, Engine, QuantumSpec, SimConfig, SimStats};
pub use error::{Error, Result};
pub use jet::Jet;
pub use metrics::ReferenceRun;
pub use poly::Trajectory;
pub use quantizer::Method;
