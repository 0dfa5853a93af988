//! Dormand-Prince 5(4) with adaptive steps, dense output and event location.
//!
//! Discontinuities restart the integration from the event time; the model's
//! zero-crossing guards are checked for sign changes over every accepted step
//! and located by bisection on the dense output.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::engine::{uniform_grid, SimStats};
use crate::error::{Error, Result};
use crate::models::{EventContext, Model};
use crate::poly::Crossing;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order solution minus embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Continuous extension coefficients.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Step-size controller settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RkController {
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
    /// First step; chosen automatically when `None`.
    pub h_init: Option<f64>,
}

impl RkController {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, safety: 0.9, min_factor: 0.2, max_factor: 10.0, h_init: None }
    }

    /// Weighted max-norm of an error vector.
    pub fn error_norm(&self, err: &[f64], x: &[f64], x_new: &[f64]) -> f64 {
        self.scaled_error_norm(err, x, x_new, |_| 1.0)
    }

    /// [`error_norm`](Self::error_norm) with the absolute tolerance of
    /// component `i` multiplied by `atol_scale(i)`.
    pub fn scaled_error_norm(&self, err: &[f64], x: &[f64], x_new: &[f64], atol_scale: impl Fn(usize) -> f64) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..err.len() {
            let w = self.atol * atol_scale(i) + self.rtol * x[i].abs().max(x_new[i].abs());
            m = m.max(err[i].abs() / w);
        }
        m
    }

    fn factor(&self, err: f64) -> f64 {
        if err == 0.0 {
            return self.max_factor;
        }
        (self.safety * err.powf(-0.2)).clamp(self.min_factor, self.max_factor)
    }
}

/// One Dormand-Prince step: the fifth-order solution, the raw error
/// estimate and the coefficients of the continuous extension.
#[derive(Clone, Debug)]
pub struct DopriStep {
    pub x_new: Vec<f64>,
    pub err: Vec<f64>,
    /// Derivative at the new point (first stage of the next step).
    pub dx_new: Vec<f64>,
    dense: [Vec<f64>; 5],
}

impl DopriStep {
    /// State at `t0 + theta·h`, `theta ∈ [0, 1]`.
    pub fn dense_at(&self, theta: f64, out: &mut [f64]) {
        let [r1, r2, r3, r4, r5] = &self.dense;
        let th1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = r1[i] + theta * (r2[i] + th1 * (r3[i] + theta * (r4[i] + th1 * r5[i])));
        }
    }

    pub fn dense_component(&self, theta: f64, i: usize) -> f64 {
        let [r1, r2, r3, r4, r5] = &self.dense;
        let th1 = 1.0 - theta;
        r1[i] + theta * (r2[i] + th1 * (r3[i] + theta * (r4[i] + th1 * r5[i])))
    }
}

/// Takes one step of size `h` from `(t, x)` given `dx = f(t, x)`.
pub fn dopri_step<F>(rhs: &mut F, t: f64, x: &[f64], dx: &[f64], h: f64) -> Result<DopriStep>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    k[0].copy_from_slice(dx);
    let mut tmp = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            tmp[i] = x[i] + h * acc;
        }
        let (done, rest) = k.split_at_mut(s);
        let _ = done;
        rhs(t + C[s] * h, &tmp, &mut rest[0]);
        if rest[0].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t + C[s] * h });
        }
    }
    // the seventh stage is evaluated at the fifth-order solution
    let x_new = tmp;
    let mut err = vec![0.0; n];
    let mut r5 = vec![0.0; n];
    for i in 0..n {
        let mut e = 0.0;
        let mut d = 0.0;
        for s in 0..7 {
            e += E[s] * k[s][i];
            d += D[s] * k[s][i];
        }
        err[i] = h * e;
        r5[i] = h * d;
    }
    let r1 = x.to_vec();
    let r2: Vec<f64> = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
    let r3: Vec<f64> = (0..n).map(|i| h * k[0][i] - r2[i]).collect();
    let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k[6][i] - r3[i]).collect();
    let dx_new = std::mem::take(&mut k[6]);
    Ok(DopriStep { x_new, err, dx_new, dense: [r1, r2, r3, r4, r5] })
}

struct Ctx<'a> {
    x: &'a mut [f64],
    frozen: &'a mut [bool],
    scheduled: &'a mut Vec<(f64, u64)>,
    changed: bool,
}

impl EventContext for Ctx<'_> {
    fn state(&self, i: usize) -> f64 {
        self.x[i]
    }
    fn set_state(&mut self, i: usize, value: f64) {
        self.x[i] = value;
        self.changed = true;
    }
    fn freeze(&mut self, i: usize) {
        self.frozen[i] = true;
    }
    fn release(&mut self, i: usize) {
        self.frozen[i] = false;
    }
    fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }
    fn schedule(&mut self, t: f64, tag: u64) {
        self.scheduled.push((t, tag));
    }
}

fn model_rhs<M: Model>(model: &M, frozen: &[bool], t: f64, x: &[f64], out: &mut [f64]) {
    let q = |j: usize| x[j];
    for (i, o) in out.iter_mut().enumerate() {
        *o = if frozen[i] { 0.0 } else { model.rhs(i, &q, t) };
    }
}

fn initial_step(ctl: &RkController, x: &[f64], dx: &[f64], atol_scale: &[f64], span: f64) -> f64 {
    let scale = |i: usize| ctl.atol * atol_scale[i] + ctl.rtol * x[i].abs();
    let d0 = (0..x.len()).map(|i| x[i] / scale(i)).fold(0.0f64, |m, v| m.max(v.abs()));
    let d1 = (0..x.len()).map(|i| dx[i] / scale(i)).fold(0.0f64, |m, v| m.max(v.abs()));
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span)
}

/// Timed event: time, insertion sequence, tag.
#[derive(Clone, Copy, Debug)]
struct TimedKey(f64, u64, u64);
impl PartialEq for TimedKey {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o).is_eq()
    }
}
impl Eq for TimedKey {}
impl PartialOrd for TimedKey {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for TimedKey {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

/// Integrates `model` over `[0, t_end]`, sampling `samples` uniform points.
pub fn dopri_run<M: Model>(model: &M, ctl: RkController, t_end: f64, samples: usize) -> Result<SimStats> {
    if !(ctl.rtol >= 0.0 && ctl.atol > 0.0) {
        return Err(Error::InvalidConfig(format!("invalid tolerances rtol={} atol={}", ctl.rtol, ctl.atol)));
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidConfig(format!("t_end must be positive, got {t_end}")));
    }
    let start = Instant::now();
    let n = model.dimension();
    let mut x = model.initial_state();
    let mut frozen = vec![false; n];
    // tolerances are in the model's working units, like quanta
    let atol_scale: Vec<f64> = (0..n).map(|i| model.quantum_scale(i)).collect();
    let crossings = model.zero_crossings();
    let mut timed: BinaryHeap<Reverse<TimedKey>> = BinaryHeap::new();
    let mut seq = 0u64;
    for (t, tag) in model.timed_events(t_end) {
        timed.push(Reverse(TimedKey(t, seq, tag)));
        seq += 1;
    }
    let grid = uniform_grid(t_end, samples);
    let mut stats = SimStats { grid: grid.clone(), ..SimStats::default() };
    let mut next_sample = 0;
    let mut row = vec![0.0; n];

    let mut t = 0.0;
    let mut dx = vec![0.0; n];
    model_rhs(model, &frozen, t, &x, &mut dx);
    let mut h = ctl.h_init.unwrap_or_else(|| initial_step(&ctl, &x, &dx, &atol_scale, t_end));
    let h_min = 1e-14 * t_end;
    let mut scheduled = Vec::new();
    let loc_tol = 1e-12 * t_end;

    loop {
        // discontinuities due now
        while let Some(Reverse(TimedKey(te, _, tag))) = timed.peek().copied() {
            if te > t {
                break;
            }
            timed.pop();
            while next_sample < grid.len() && grid[next_sample] < te {
                stats.samples.push(x.clone());
                next_sample += 1;
            }
            let mut ctx = Ctx { x: &mut x, frozen: &mut frozen, scheduled: &mut scheduled, changed: false };
            model.on_timed_event(tag, t, &mut ctx);
            stats.timed_events += 1;
            for (ts, tg) in scheduled.drain(..) {
                timed.push(Reverse(TimedKey(ts, seq, tg)));
                seq += 1;
            }
            model_rhs(model, &frozen, t, &x, &mut dx);
        }
        if t >= t_end {
            break;
        }
        let t_stop = timed.peek().map_or(t_end, |r| r.0 .0.min(t_end));
        let mut step_h = h.min(t_stop - t);
        let last = step_h >= t_stop - t;
        if last {
            step_h = t_stop - t;
        }
        let mut rhs = |tt: f64, xx: &[f64], out: &mut [f64]| model_rhs(model, &frozen, tt, xx, out);
        let step = dopri_step(&mut rhs, t, &x, &dx, step_h)?;
        let err = ctl.scaled_error_norm(&step.err, &x, &step.x_new, |i| atol_scale[i]);
        if err > 1.0 {
            h = step_h * ctl.factor(err).min(1.0);
            if h < h_min {
                return Err(Error::StepUnderflow { t, h });
            }
            continue;
        }
        let t_new = if last { t_stop } else { t + step_h };

        // earliest guard crossing inside the step
        let mut hit: Option<(f64, usize)> = None;
        for (z, g) in crossings.iter().enumerate() {
            if frozen[g.var] {
                continue;
            }
            let a = x[g.var] - g.level;
            let b = step.x_new[g.var] - g.level;
            let crosses = match g.direction {
                Crossing::Rising => a < 0.0 && b >= 0.0,
                Crossing::Falling => a > 0.0 && b <= 0.0,
                Crossing::Any => (a < 0.0) != (b < 0.0),
            };
            if !crosses {
                continue;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            while (hi - lo) * step_h > loc_tol {
                let mid = 0.5 * (lo + hi);
                let v = step.dense_component(mid, g.var) - g.level;
                if (v < 0.0) == (a < 0.0) {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            if hit.is_none_or(|(th, _)| hi < th) {
                hit = Some((hi, z));
            }
        }

        let t_accept = match hit {
            Some((theta, _)) => t + theta * step_h,
            None => t_new,
        };
        while next_sample < grid.len() && grid[next_sample] <= t_accept {
            let theta = ((grid[next_sample] - t) / step_h).clamp(0.0, 1.0);
            step.dense_at(theta, &mut row);
            stats.samples.push(row.clone());
            next_sample += 1;
        }
        stats.total_steps += 1;
        h = step_h * ctl.factor(err);
        match hit {
            Some((theta, z)) => {
                step.dense_at(theta, &mut x);
                t = t_accept;
                let mut ctx = Ctx { x: &mut x, frozen: &mut frozen, scheduled: &mut scheduled, changed: false };
                model.on_zero_crossing(z, t, &mut ctx);
                stats.zero_crossings += 1;
                for (ts, tg) in scheduled.drain(..) {
                    timed.push(Reverse(TimedKey(ts, seq, tg)));
                    seq += 1;
                }
                model_rhs(model, &frozen, t, &x, &mut dx);
            }
            None => {
                x = step.x_new;
                dx = step.dx_new;
                t = t_new;
            }
        }
    }
    while next_sample < grid.len() {
        stats.samples.push(x.clone());
        next_sample += 1;
    }
    stats.events = stats.zero_crossings + stats.timed_events;
    stats.final_state = x;
    stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(stats)
}
