//! Benchmark models and the interface the solvers integrate against.

mod adr;
mod scalar;
mod snn;

pub use adr::{AdrModel, AdrParams};
pub use scalar::ScalarModel;
pub use snn::{SnnModel, SnnParams};

use crate::jet::Carrier;
use crate::poly::Crossing;

/// Guard `x[var] - level`, watched on the state trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroCrossing {
    pub var: usize,
    pub level: f64,
    pub direction: Crossing,
}

/// Mutable view of the simulation handed to discontinuity handlers.
pub trait EventContext {
    fn state(&self, i: usize) -> f64;
    /// Sets `x[i]` instantaneously.
    fn set_state(&mut self, i: usize, value: f64);
    /// Holds `x[i]` constant until released.
    fn freeze(&mut self, i: usize);
    fn release(&mut self, i: usize);
    fn is_frozen(&self, i: usize) -> bool;
    /// Requests a call to [`Model::on_timed_event`] with `tag` at time `t`.
    fn schedule(&mut self, t: f64, tag: u64);
}

/// An ODE system `ẋ = f(x, t)` with optional discontinuities.
///
/// `rhs` is written once over [`Carrier`]; the quantized solvers call it with
/// Taylor jets, the Runge-Kutta baseline with plain floats.
pub trait Model: Sync {
    fn name(&self) -> &'static str;
    fn dimension(&self) -> usize;
    fn initial_state(&self) -> Vec<f64>;

    fn var_name(&self, i: usize) -> String {
        format!("x{i}")
    }

    /// State indices read by `f_i`.
    fn incidence(&self, i: usize) -> &[usize];

    fn rhs<C: Carrier, S: Fn(usize) -> C>(&self, i: usize, q: &S, t: C) -> C;

    /// `∂f_i/∂x_i`; `None` selects a central finite difference.
    fn diag_jacobian<S: Fn(usize) -> f64>(&self, _i: usize, _q: &S, _t: f64) -> Option<f64> {
        None
    }

    /// Factor converting a user-facing quantum into state units.
    fn quantum_scale(&self, _i: usize) -> f64 {
        1.0
    }

    fn zero_crossings(&self) -> Vec<ZeroCrossing> {
        Vec::new()
    }

    /// Discontinuities known in advance, as `(time, tag)` pairs up to `t_end`.
    fn timed_events(&self, _t_end: f64) -> Vec<(f64, u64)> {
        Vec::new()
    }

    fn on_zero_crossing(&self, _z: usize, _t: f64, _ctx: &mut dyn EventContext) {}

    fn on_timed_event(&self, _tag: u64, _t: f64, _ctx: &mut dyn EventContext) {}

    fn exact_solution(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }
}

/// Step for the central-difference Jacobian fallback.
pub fn fd_step(q: f64) -> f64 {
    1e-8f64.max(1e-8 * q.abs())
}

/// `∂f_i/∂x_i` at `q`, analytic when the model provides it.
pub fn diag_jacobian<M: Model, S: Fn(usize) -> f64>(model: &M, i: usize, q: &S, t: f64) -> f64 {
    if let Some(a) = model.diag_jacobian(i, q, t) {
        return a;
    }
    let h = fd_step(q(i));
    let qi = q(i);
    let plus = model.rhs(i, &|j| if j == i { qi + h } else { q(j) }, t);
    let minus = model.rhs(i, &|j| if j == i { qi - h } else { q(j) }, t);
    (plus - minus) / (2.0 * h)
}

/// Inverse of the incidence relation: for each `j`, the `i` whose `f_i` reads `x_j`.
pub fn dependents<M: Model>(model: &M) -> Vec<Vec<usize>> {
    let n = model.dimension();
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        for &j in model.incidence(i) {
            out[j].push(i);
        }
    }
    for v in &mut out {
        v.sort_unstable();
        v.dedup();
    }
    out
}

/// Plain vector right-hand side.
pub fn eval_rhs<M: Model>(model: &M, x: &[f64], t: f64, out: &mut [f64]) {
    let q = |j: usize| x[j];
    for (i, o) in out.iter_mut().enumerate() {
        *o = model.rhs(i, &q, t);
    }
}
