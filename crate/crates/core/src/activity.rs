//! Activity functionals and the minimum-step bounds they imply.
//!
//! The `n`-th order activity of a signal is `∫ |x⁽ⁿ⁾(t)/n!|^(1/n) dt`; any
//! `n`-th order quantized integrator needs at least a multiple of
//! `A⁽ⁿ⁾ / ΔQ^(1/n)` steps to follow the signal within `ΔQ`.

use std::fmt::Write as _;

use crate::jet::Jet;
use crate::models::Model;

/// Default number of Simpson panels.
pub const DEFAULT_PANELS: usize = 20_000;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn integrand(d: f64, n: usize) -> f64 {
    (d.abs() / factorial(n)).powf(1.0 / n as f64)
}

/// Activity of order `n` over `[t0, tf]` from the `n`-th derivative,
/// by composite Simpson quadrature on `panels` (rounded up to even) panels.
pub fn activity_n<F: Fn(f64) -> f64>(derivative_n: F, n: usize, t0: f64, tf: f64, panels: usize) -> f64 {
    assert!((1..=3).contains(&n), "activity order must be 1, 2 or 3");
    assert!(tf > t0, "empty interval");
    let m = panels.max(2).next_multiple_of(2);
    let h = (tf - t0) / m as f64;
    let vals: Vec<f64> = (0..=m).map(|k| integrand(derivative_n(t0 + k as f64 * h), n)).collect();
    simpson(&vals, h)
}

/// Activity of order `n` from `n`-th derivative samples on a uniform grid
/// with an even number of panels.
pub fn activity_from_samples(derivative_n: &[f64], n: usize, h: f64) -> f64 {
    assert!((1..=3).contains(&n), "activity order must be 1, 2 or 3");
    let vals: Vec<f64> = derivative_n.iter().map(|&d| integrand(d, n)).collect();
    simpson(&vals, h)
}

fn simpson(vals: &[f64], h: f64) -> f64 {
    let m = vals.len() - 1;
    assert!(m >= 2 && m.is_multiple_of(2), "Simpson's rule needs an even number of panels");
    let mut s = vals[0] + vals[m];
    for (k, v) in vals.iter().enumerate().take(m).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Lower bound on the steps of the Chebyshev-optimal quantizer.
pub fn min_steps_general(activity: f64, quantum: f64, n: usize) -> f64 {
    let n = n as f64;
    activity / (2f64.powf((2.0 * n - 1.0) / n) * quantum.powf(1.0 / n))
}

/// Step estimate of classic quantization.
pub fn min_steps_classic(activity: f64, quantum: f64, n: usize) -> f64 {
    activity / quantum.powf(1.0 / n as f64)
}

/// Taylor coefficients `x⁽ᵏ⁾/k!`, `k = 0..=order`, of the exact solution
/// through the state `x` at time `t`.
pub fn solution_taylor<M: Model>(model: &M, x: &[f64], t: f64, order: usize) -> Vec<[f64; 4]> {
    assert!(order <= 3);
    let dim = x.len();
    let mut c: Vec<[f64; 4]> = x.iter().map(|&v| [v, 0.0, 0.0, 0.0]).collect();
    let time = Jet::time(t);
    for k in 0..order {
        let jets: Vec<Jet> = c.iter().map(|&a| Jet(a)).collect();
        let q = |j: usize| jets[j];
        let next: Vec<f64> = (0..dim).map(|i| model.rhs(i, &q, time).0[k] / (k + 1) as f64).collect();
        for (ci, v) in c.iter_mut().zip(next) {
            ci[k + 1] = v;
        }
    }
    c
}

/// Total Chebyshev-optimal step bound along a reference trajectory sampled
/// on a uniform grid with an even number of panels, when variable `i` at
/// value `x` is held to `quantum(i, x)`. Reduces to the sum of
/// [`min_steps_general`] over variables for constant quanta.
pub fn min_steps_along<M: Model>(
    model: &M,
    samples: &[Vec<f64>],
    t_end: f64,
    order: usize,
    quantum: impl Fn(usize, f64) -> f64,
) -> f64 {
    let m = samples.len() - 1;
    let h = t_end / m as f64;
    let dim = model.dimension();
    let inv = 1.0 / order as f64;
    let mut vals = vec![vec![0.0; samples.len()]; dim];
    for (k, x) in samples.iter().enumerate() {
        let c = solution_taylor(model, x, k as f64 * h, order);
        for i in 0..dim {
            vals[i][k] = (c[i][order].abs() / quantum(i, x[i])).powf(inv);
        }
    }
    let k = 2f64.powf((2.0 * order as f64 - 1.0) / order as f64);
    vals.iter().map(|v| simpson(v, h)).sum::<f64>() / k
}

/// Per-variable activities and bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivityReport {
    pub order: usize,
    pub activity: Vec<f64>,
    pub bound_general: Vec<f64>,
    pub bound_classic: Vec<f64>,
}

impl ActivityReport {
    /// `activity` per variable and the quantum each variable is held to.
    pub fn new(order: usize, activity: Vec<f64>, quanta: &[f64]) -> Self {
        assert_eq!(activity.len(), quanta.len());
        let bound_general = activity.iter().zip(quanta).map(|(&a, &q)| min_steps_general(a, q, order)).collect();
        let bound_classic = activity.iter().zip(quanta).map(|(&a, &q)| min_steps_classic(a, q, order)).collect();
        Self { order, activity, bound_general, bound_classic }
    }

    /// Activities of a model along a reference trajectory sampled on a
    /// uniform grid over `[0, t_end]` with an even number of panels.
    pub fn from_reference<M: Model>(model: &M, samples: &[Vec<f64>], t_end: f64, order: usize, quanta: &[f64]) -> Self {
        let m = samples.len() - 1;
        let h = t_end / m as f64;
        let dim = model.dimension();
        let mut derivs = vec![vec![0.0; samples.len()]; dim];
        for (k, x) in samples.iter().enumerate() {
            let c = solution_taylor(model, x, k as f64 * h, order);
            for i in 0..dim {
                // activity_from_samples divides by n! again
                derivs[i][k] = c[i][order] * factorial(order);
            }
        }
        let activity = derivs.iter().map(|d| activity_from_samples(d, order, h)).collect();
        Self::new(order, activity, quanta)
    }

    pub fn total_general(&self) -> f64 {
        self.bound_general.iter().sum()
    }

    pub fn total_classic(&self) -> f64 {
        self.bound_classic.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("var,order,activity,bound_general,bound_classic\n");
        for i in 0..self.activity.len() {
            let _ = writeln!(
                s,
                "{i},{},{:.17e},{:.17e},{:.17e}",
                self.order, self.activity[i], self.bound_general[i], self.bound_classic[i]
            );
        }
        s
    }
}
