//! Asynchronous event-driven integration loop.
//!
//! Every state variable owns a pending internal event (the time its state
//! leaves the quantization band) and every zero-crossing guard owns a pending
//! crossing time; both live in one [`EventQueue`]. Timed discontinuities are
//! kept in a separate heap. An internal event re-quantizes one variable and
//! refreshes the state polynomials of the variables that read it.

mod queue;
#[cfg(test)]
mod tests;

pub use queue::EventQueue;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::jet::{Carrier, Jet};
use crate::models::{self, EventContext, Model, ZeroCrossing};
use crate::poly::{band_crossing_within, next_crossing, Trajectory};
use crate::quantizer::{quantize, quantize_qss, Method, QuantizerContext};

/// Consecutive non-advancing events tolerated before giving up.
pub const STALL_LIMIT: u64 = 1_000_000;
/// Relative (to `t_end`) advance below which an event counts as stalled.
pub const STALL_REL_DT: f64 = 1e-14;

/// Logarithmic quantization: `ΔQ = max(abs, rel·|x|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumSpec {
    pub rel: f64,
    pub abs: f64,
}

impl QuantumSpec {
    pub fn new(rel: f64, abs: f64) -> Result<Self> {
        if !(rel >= 0.0) || !(abs > 0.0) || !rel.is_finite() || !abs.is_finite() {
            return Err(Error::InvalidConfig(format!("invalid quantum rel={rel} abs={abs}")));
        }
        Ok(Self { rel, abs })
    }

    pub fn absolute(abs: f64) -> Self {
        Self { rel: 0.0, abs }
    }

    pub fn effective(&self, x: f64) -> f64 {
        effective_quantum(self, x)
    }
}

pub fn effective_quantum(spec: &QuantumSpec, x: f64) -> f64 {
    spec.abs.max(spec.rel * x.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub method: Method,
    pub order: usize,
    pub quantum: QuantumSpec,
    pub t_end: f64,
    /// Number of points of the uniform output grid over `[0, t_end]`; zero disables sampling.
    pub samples: usize,
    /// Keep sampled trajectories (otherwise only the band ratio is tracked).
    pub record: bool,
}

impl SimConfig {
    pub fn new(method: Method, order: usize, quantum: QuantumSpec, t_end: f64) -> Self {
        Self { method, order, quantum, t_end, samples: 500, record: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.order) {
            return Err(Error::InvalidConfig(format!("order {} not in 1..=3", self.order)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig(format!("t_end must be positive, got {}", self.t_end)));
        }
        QuantumSpec::new(self.quantum.rel, self.quantum.abs)?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.t_end, self.samples)
    }
}

/// `samples` evenly spaced points from 0 to `t_end` inclusive.
pub fn uniform_grid(t_end: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![t_end],
        n => (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimStats {
    /// Internal steps of each variable.
    pub steps: Vec<u64>,
    pub total_steps: u64,
    pub zero_crossings: u64,
    pub timed_events: u64,
    /// Discontinuity events (zero crossings plus timed events).
    pub events: u64,
    /// Quantizations forced by discontinuities.
    pub requantizations: u64,
    pub grid: Vec<f64>,
    /// `samples[k][i]` is `x_i(grid[k])`.
    pub samples: Vec<Vec<f64>>,
    pub max_band_ratio: f64,
    pub final_state: Vec<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Internal(usize),
    ZeroCrossing(usize),
    Timed(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
}

/// Scalar linearization `ẋ_i = a q_i + u(t)` taken at the last quantization.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LinearizedLocal {
    pub a: f64,
    /// `u`, `u̇`, `ü` at the quantization time.
    pub u: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct VariableState {
    pub x: Trajectory,
    pub q: Trajectory,
    pub quantum: f64,
    pub lin: LinearizedLocal,
    pub frozen: bool,
    pub steps: u64,
}

#[derive(Clone, Copy, Debug)]
struct Timed {
    t: f64,
    seq: u64,
    tag: u64,
}

impl PartialEq for Timed {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Timed {}
impl PartialOrd for Timed {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Timed {
    fn cmp(&self, o: &Self) -> Ordering {
        self.t.total_cmp(&o.t).then(self.seq.cmp(&o.seq))
    }
}

/// Quantized-state simulation of one model.
pub struct Engine<'m, M: Model> {
    model: &'m M,
    cfg: SimConfig,
    vars: Vec<VariableState>,
    scales: Vec<f64>,
    dependents: Vec<Vec<usize>>,
    crossings: Vec<ZeroCrossing>,
    guards: Vec<Vec<usize>>,
    queue: EventQueue,
    timed: BinaryHeap<Reverse<Timed>>,
    seq: u64,
    t: f64,
    stall: u64,
    rate_scale: f64,
    grid: Vec<f64>,
    next_sample: usize,
    stats: SimStats,
    touched: Vec<usize>,
    changed: Vec<usize>,
    refresh: Vec<usize>,
    scheduled: Vec<(f64, u64)>,
}

impl<'m, M: Model> Engine<'m, M> {
    pub fn new(model: &'m M, cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let n = model.dimension();
        let x0 = model.initial_state();
        if x0.len() != n {
            return Err(Error::InvalidConfig("initial state length differs from dimension".into()));
        }
        let scales: Vec<f64> = (0..n).map(|i| model.quantum_scale(i)).collect();
        let vars = x0
            .iter()
            .zip(&scales)
            .map(|(&v, &s)| VariableState {
                x: Trajectory::constant(0.0, v),
                q: Trajectory::constant(0.0, v),
                quantum: scaled(&cfg.quantum, s).effective(v),
                lin: LinearizedLocal::default(),
                frozen: false,
                steps: 0,
            })
            .collect();
        let crossings = model.zero_crossings();
        let mut guards = vec![Vec::new(); n];
        for (z, c) in crossings.iter().enumerate() {
            guards[c.var].push(z);
        }
        let mut dependents = models::dependents(model);
        for (i, d) in dependents.iter_mut().enumerate() {
            if let Err(pos) = d.binary_search(&i) {
                // a variable always refreshes its own state after quantizing
                d.insert(pos, i);
            }
        }
        let mut timed = BinaryHeap::new();
        let mut seq = 0;
        for (t, tag) in model.timed_events(cfg.t_end) {
            timed.push(Reverse(Timed { t, seq, tag }));
            seq += 1;
        }
        let grid = cfg.grid();
        let stats = SimStats { steps: vec![0; n], grid: grid.clone(), ..SimStats::default() };
        let mut e = Self {
            model,
            queue: EventQueue::new(n + crossings.len()),
            rate_scale: 1.0 / cfg.t_end,
            cfg,
            vars,
            scales,
            dependents,
            crossings,
            guards,
            timed,
            seq,
            t: 0.0,
            stall: 0,
            grid,
            next_sample: 0,
            stats,
            touched: Vec::new(),
            changed: Vec::new(),
            refresh: Vec::new(),
            scheduled: Vec::new(),
        };
        e.initialize()?;
        Ok(e)
    }

    fn initialize(&mut self) -> Result<()> {
        let n = self.vars.len();
        for i in 0..n {
            self.vars[i].x = self.state_poly(i, 0.0)?;
        }
        if self.cfg.method == Method::Qss {
            // each pass fixes one more Taylor coefficient of q
            for _ in 1..self.cfg.order {
                for i in 0..n {
                    self.quantize_var(i)?;
                }
                for i in 0..n {
                    self.vars[i].x = self.state_poly(i, 0.0)?;
                }
            }
        }
        for i in 0..n {
            self.quantize_var(i)?;
            self.vars[i].steps += 1;
        }
        for i in 0..n {
            self.vars[i].x = self.state_poly(i, 0.0)?;
            self.schedule(i);
        }
        for z in 0..self.crossings.len() {
            self.schedule_guard(z);
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn variables(&self) -> &[VariableState] {
        &self.vars
    }

    /// Variables whose state or quantized trajectory changed in the last step.
    pub fn touched(&self) -> &[usize] {
        &self.touched
    }

    /// Time of the next pending event, if any.
    pub fn next_event_time(&self) -> f64 {
        let tq = self.queue.peek().1;
        let tt = self.timed.peek().map_or(f64::INFINITY, |r| r.0.t);
        tq.min(tt)
    }

    fn q_jet(&self, j: usize, t: f64) -> Jet {
        Jet(self.vars[j].q.advance(t).coeffs)
    }

    /// State polynomial at `t` from the current quantized trajectories.
    fn state_poly(&self, i: usize, t: f64) -> Result<Trajectory> {
        let x0 = self.vars[i].x.eval(t);
        let mut c = [x0, 0.0, 0.0, 0.0];
        if !self.vars[i].frozen {
            let f = self.model.rhs(i, &|j| self.q_jet(j, t), Jet::time(t));
            for k in 0..self.cfg.order {
                c[k + 1] = f.0[k] / (k + 1) as f64;
            }
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        Ok(Trajectory { origin: t, coeffs: c })
    }

    fn quantize_var(&mut self, i: usize) -> Result<()> {
        let t = self.t;
        let x = self.vars[i].x.advance(t);
        let quantum = scaled(&self.cfg.quantum, self.scales[i]).effective(x.coeffs[0]);
        let v = &self.vars[i];
        let seg = if v.frozen {
            Trajectory::constant(t, x.coeffs[0])
        } else if self.cfg.method == Method::Qss {
            let ctx = QuantizerContext::new(self.cfg.order, &x.coeffs, 0.0, &[0.0; 3], quantum, Method::Qss);
            quantize_qss(&ctx).q
        } else {
            let f = self.model.rhs(i, &|j| self.q_jet(j, t), Jet::time(t));
            let a = models::diag_jacobian(self.model, i, &|j| self.vars[j].q.eval(t), t);
            let u = f - self.q_jet(i, t).scale(a);
            let u = [u.0[0], u.0[1], 2.0 * u.0[2]];
            let mut ctx = QuantizerContext::new(self.cfg.order, &x.coeffs, a, &u, quantum, self.cfg.method);
            ctx.rate_scale = self.rate_scale;
            self.vars[i].lin = LinearizedLocal { a, u };
            quantize(&ctx)?.q
        };
        let v = &mut self.vars[i];
        v.q = Trajectory { origin: t, coeffs: seg.coeffs };
        v.x = x;
        v.quantum = quantum;
        Ok(())
    }

    fn band_ratio(&self, i: usize, t: f64) -> f64 {
        let v = &self.vars[i];
        (v.x.eval(t) - v.q.eval(t)).abs() / v.quantum
    }

    fn schedule(&mut self, i: usize) {
        let v = &self.vars[i];
        let next = if v.frozen {
            f64::INFINITY
        } else {
            let horizon = self.cfg.t_end - self.t;
            let zero = self.cfg.method.steps_on_zero_crossing();
            match band_crossing_within(&v.x, &v.q, v.quantum, zero, horizon) {
                Some(tau) => self.t + tau,
                None => f64::INFINITY,
            }
        };
        self.queue.set(i, next);
    }

    fn schedule_guard(&mut self, z: usize) {
        let g = self.crossings[z];
        let v = &self.vars[g.var];
        let next = if v.frozen {
            f64::INFINITY
        } else {
            let x = v.x.advance(self.t);
            let mut c = x.coeffs;
            c[0] -= g.level;
            match next_crossing(&c, self.cfg.t_end - self.t, g.direction) {
                Some(tau) => self.t + tau,
                None => f64::INFINITY,
            }
        };
        self.queue.set(self.vars.len() + z, next);
    }

    /// Recomputes the state polynomials of `refresh` and reschedules them.
    fn refresh_states(&mut self) -> Result<()> {
        let t = self.t;
        let mut refresh = std::mem::take(&mut self.refresh);
        for &j in &refresh {
            let r = self.band_ratio(j, t);
            self.stats.max_band_ratio = self.stats.max_band_ratio.max(r);
            self.vars[j].x = self.state_poly(j, t)?;
            self.schedule(j);
            for k in 0..self.guards[j].len() {
                let z = self.guards[j][k];
                self.schedule_guard(z);
            }
            self.touched.push(j);
        }
        refresh.clear();
        self.refresh = refresh;
        Ok(())
    }

    fn internal(&mut self, i: usize) -> Result<()> {
        let r = self.band_ratio(i, self.t);
        self.stats.max_band_ratio = self.stats.max_band_ratio.max(r);
        self.quantize_var(i)?;
        self.vars[i].steps += 1;
        self.refresh.extend_from_slice(&self.dependents[i]);
        self.refresh_states()
    }

    fn after_discontinuity(&mut self) -> Result<()> {
        let mut changed = std::mem::take(&mut self.changed);
        changed.sort_unstable();
        changed.dedup();
        for &j in &changed {
            self.quantize_var(j)?;
            self.stats.requantizations += 1;
            self.refresh.extend_from_slice(&self.dependents[j]);
        }
        changed.clear();
        self.changed = changed;
        self.refresh.sort_unstable();
        self.refresh.dedup();
        self.refresh_states()?;
        for (t, tag) in self.scheduled.drain(..) {
            self.timed.push(Reverse(Timed { t, seq: self.seq, tag }));
            self.seq += 1;
        }
        Ok(())
    }

    fn emit_samples_before(&mut self, t: f64) {
        while self.next_sample < self.grid.len() && self.grid[self.next_sample] < t {
            let tk = self.grid[self.next_sample];
            let mut row = Vec::with_capacity(if self.cfg.record { self.vars.len() } else { 0 });
            let mut worst: f64 = 0.0;
            for v in &self.vars {
                let x = v.x.eval(tk);
                worst = worst.max((x - v.q.eval(tk)).abs() / v.quantum);
                if self.cfg.record {
                    row.push(x);
                }
            }
            self.stats.max_band_ratio = self.stats.max_band_ratio.max(worst);
            if self.cfg.record {
                self.stats.samples.push(row);
            }
            self.next_sample += 1;
        }
    }

    /// Processes the next event. Returns `None` once no event remains before `t_end`.
    pub fn step(&mut self) -> Result<Option<EventRecord>> {
        let (slot, tq) = self.queue.peek();
        let tt = self.timed.peek().map_or(f64::INFINITY, |r| r.0.t);
        let t_next = tq.min(tt).max(self.t);
        if !(t_next <= self.cfg.t_end) {
            return Ok(None);
        }
        self.emit_samples_before(t_next);
        if t_next - self.t < STALL_REL_DT * self.cfg.t_end {
            self.stall += 1;
            if self.stall > STALL_LIMIT {
                return Err(Error::StalledSimulation { t: t_next });
            }
        } else {
            self.stall = 0;
        }
        self.t = t_next;
        self.touched.clear();
        let n = self.vars.len();
        let kind = if tq <= tt {
            if slot < n {
                self.internal(slot)?;
                EventKind::Internal(slot)
            } else {
                let z = slot - n;
                self.queue.set(slot, f64::INFINITY);
                self.fire(|m, ctx| m.on_zero_crossing(z, t_next, ctx))?;
                self.stats.zero_crossings += 1;
                EventKind::ZeroCrossing(z)
            }
        } else {
            let Reverse(ev) = self.timed.pop().expect("peeked");
            self.fire(|m, ctx| m.on_timed_event(ev.tag, t_next, ctx))?;
            self.stats.timed_events += 1;
            EventKind::Timed(ev.tag)
        };
        Ok(Some(EventRecord { time: t_next, kind }))
    }

    fn fire(&mut self, handler: impl FnOnce(&M, &mut dyn EventContext)) -> Result<()> {
        let model = self.model;
        let mut ctx = Handler {
            t: self.t,
            vars: &mut self.vars,
            changed: &mut self.changed,
            scheduled: &mut self.scheduled,
        };
        handler(model, &mut ctx);
        self.touched.extend_from_slice(&self.changed);
        self.after_discontinuity()
    }

    /// Runs to `t_end` and returns the statistics.
    pub fn run(mut self) -> Result<SimStats> {
        let start = Instant::now();
        while self.step()?.is_some() {}
        Ok(self.finish(start.elapsed().as_secs_f64() * 1e3))
    }

    fn finish(mut self, wall_ms: f64) -> SimStats {
        self.emit_samples_before(f64::INFINITY);
        let t_end = self.cfg.t_end;
        let mut s = self.stats;
        s.steps = self.vars.iter().map(|v| v.steps).collect();
        s.total_steps = s.steps.iter().sum();
        s.events = s.zero_crossings + s.timed_events;
        s.final_state = self.vars.iter().map(|v| v.x.eval(t_end)).collect();
        s.wall_ms = wall_ms;
        s
    }
}

fn scaled(spec: &QuantumSpec, s: f64) -> QuantumSpec {
    QuantumSpec { rel: spec.rel, abs: spec.abs * s }
}

struct Handler<'a> {
    t: f64,
    vars: &'a mut [VariableState],
    changed: &'a mut Vec<usize>,
    scheduled: &'a mut Vec<(f64, u64)>,
}

impl EventContext for Handler<'_> {
    fn state(&self, i: usize) -> f64 {
        self.vars[i].x.eval(self.t)
    }

    fn set_state(&mut self, i: usize, value: f64) {
        let v = &mut self.vars[i];
        v.x = v.x.advance(self.t);
        v.x.coeffs[0] = value;
        self.changed.push(i);
    }

    fn freeze(&mut self, i: usize) {
        self.vars[i].frozen = true;
        self.changed.push(i);
    }

    fn release(&mut self, i: usize) {
        self.vars[i].frozen = false;
        self.changed.push(i);
    }

    fn is_frozen(&self, i: usize) -> bool {
        self.vars[i].frozen
    }

    fn schedule(&mut self, t: f64, tag: u64) {
        self.scheduled.push((t, tag));
    }
}

/// Builds an engine and runs it to completion.
pub fn simulate<M: Model>(model: &M, cfg: SimConfig) -> Result<SimStats> {
    let start = Instant::now();
    let mut e = Engine::new(model, cfg)?;
    while e.step()?.is_some() {}
    Ok(e.finish(start.elapsed().as_secs_f64() * 1e3))
}
