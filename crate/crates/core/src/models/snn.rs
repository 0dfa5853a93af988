use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::{EventContext, Model, ZeroCrossing};
use crate::error::{Error, Result};
use crate::jet::Carrier;
use crate::poly::Crossing;

/// Leaky integrate-and-fire network parameters, in SI units.
#[derive(Clone, Debug, PartialEq)]
pub struct SnnParams {
    pub tau_m: f64,
    pub tau_r: f64,
    pub tau_s: f64,
    pub c_m: f64,
    pub v_reset: f64,
    pub theta: f64,
    pub e_leak: f64,
    pub nu_bg: f64,
    pub k_ext: f64,
    pub neurons: usize,
    pub excitatory: usize,
    pub in_degree: usize,
    pub exc_in_degree: usize,
    pub j_exc_mean: f64,
    pub j_exc_sd: f64,
    /// Inhibitory efficacy as a multiple of the excitatory draw.
    pub g: f64,
    /// Efficacy of external arrivals; `None` uses each neuron's excitatory draw.
    pub j_ext: Option<f64>,
    pub seed: u64,
}

impl Default for SnnParams {
    fn default() -> Self {
        Self {
            tau_m: 10e-3,
            tau_r: 2e-3,
            tau_s: 0.5e-3,
            c_m: 250e-12,
            v_reset: -65e-3,
            theta: -50e-3,
            e_leak: -65e-3,
            nu_bg: 8.0,
            k_ext: 940.0,
            neurons: 1000,
            excitatory: 800,
            in_degree: 10,
            exc_in_degree: 8,
            j_exc_mean: 87.8e-12,
            j_exc_sd: 8.78e-12,
            g: 4.0,
            j_ext: None,
            seed: 1,
        }
    }
}

impl SnnParams {
    /// Same network shape scaled to `neurons`, keeping the excitatory fraction.
    pub fn scaled(neurons: usize) -> Self {
        let d = Self::default();
        Self { neurons, excitatory: neurons * d.excitatory / d.neurons, ..d }
    }

    pub fn nu_ext(&self) -> f64 {
        self.k_ext * self.nu_bg
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.tau_m, self.tau_r, self.tau_s, self.c_m];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidConfig("SNN time constants and capacitance must be positive".into()));
        }
        if !(self.theta > self.v_reset) {
            return Err(Error::InvalidConfig("firing threshold must exceed the reset potential".into()));
        }
        let inhibitory = self.neurons.saturating_sub(self.excitatory);
        let inh_in = self.in_degree.saturating_sub(self.exc_in_degree);
        if self.excitatory > self.neurons
            || self.exc_in_degree > self.in_degree
            || self.exc_in_degree > self.excitatory.saturating_sub(1)
            || inh_in > inhibitory.saturating_sub(1)
        {
            return Err(Error::InvalidTopology(format!(
                "{} neurons ({} excitatory) cannot supply {} inputs ({} excitatory) per neuron",
                self.neurons, self.excitatory, self.in_degree, self.exc_in_degree
            )));
        }
        Ok(())
    }
}

const EXTERNAL: u64 = 0;
const REFRACTORY_END: u64 = 1;

fn tag(kind: u64, neuron: usize) -> u64 {
    (kind << 32) | neuron as u64
}

/// Random LIF network. State `2k` is the synaptic current of neuron `k`,
/// state `2k + 1` its membrane potential.
#[derive(Clone, Debug)]
pub struct SnnModel {
    p: SnnParams,
    /// Signed efficacy each neuron delivers to its targets.
    efficacy: Vec<f64>,
    /// Efficacy of external arrivals at each neuron.
    external: Vec<f64>,
    targets: Vec<Vec<usize>>,
    init: Vec<f64>,
    incidence: Vec<[usize; 2]>,
}

impl SnnModel {
    pub fn new(p: SnnParams) -> Result<Self> {
        p.validate()?;
        let n = p.neurons;
        let ne = p.excitatory;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        rng.set_stream(0);

        let normal = Normal::new(p.j_exc_mean, p.j_exc_sd)
            .map_err(|e| Error::InvalidConfig(format!("efficacy distribution: {e}")))?;
        let mut efficacy = Vec::with_capacity(n);
        let mut external = Vec::with_capacity(n);
        for k in 0..n {
            let j = loop {
                let v: f64 = normal.sample(&mut rng);
                if v > 0.0 {
                    break v;
                }
            };
            external.push(p.j_ext.unwrap_or(j));
            efficacy.push(if k < ne { j } else { -p.g * j });
        }

        let mut targets = vec![Vec::new(); n];
        let inh_in = p.in_degree - p.exc_in_degree;
        for post in 0..n {
            // sources drawn without replacement among the other neurons of each population
            let (exc_pool, inh_pool) = if post < ne { (ne - 1, n - ne) } else { (ne, n - ne - 1) };
            for s in sample(&mut rng, exc_pool, p.exc_in_degree) {
                let src = if post < ne && s >= post { s + 1 } else { s };
                targets[src].push(post);
            }
            for s in sample(&mut rng, inh_pool, inh_in) {
                let mut src = ne + s;
                if post >= ne && src >= post {
                    src += 1;
                }
                targets[src].push(post);
            }
        }
        for t in &mut targets {
            t.sort_unstable();
        }

        let mut init = Vec::with_capacity(2 * n);
        for _ in 0..n {
            init.push(rng.gen_range(0.4e-9..0.5e-9));
            init.push(rng.gen_range(-65e-3..-64e-3));
        }
        let incidence = (0..n).flat_map(|k| [[2 * k, 2 * k], [2 * k, 2 * k + 1]]).collect();
        Ok(Self { p, efficacy, external, targets, init, incidence })
    }

    pub fn params(&self) -> &SnnParams {
        &self.p
    }

    pub fn neurons(&self) -> usize {
        self.p.neurons
    }

    pub fn targets(&self, neuron: usize) -> &[usize] {
        &self.targets[neuron]
    }

    pub fn efficacy(&self, neuron: usize) -> f64 {
        self.efficacy[neuron]
    }

    pub fn current_index(neuron: usize) -> usize {
        2 * neuron
    }

    pub fn voltage_index(neuron: usize) -> usize {
        2 * neuron + 1
    }
}

impl Model for SnnModel {
    fn name(&self) -> &'static str {
        "snn"
    }

    fn dimension(&self) -> usize {
        2 * self.p.neurons
    }

    fn initial_state(&self) -> Vec<f64> {
        self.init.clone()
    }

    fn var_name(&self, i: usize) -> String {
        if i.is_multiple_of(2) {
            format!("Is{}", i / 2)
        } else {
            format!("V{}", i / 2)
        }
    }

    fn incidence(&self, i: usize) -> &[usize] {
        let inc = &self.incidence[i];
        if inc[0] == inc[1] {
            &inc[..1]
        } else {
            &inc[..]
        }
    }

    fn rhs<C: Carrier, S: Fn(usize) -> C>(&self, i: usize, q: &S, _t: C) -> C {
        let cur = q(i & !1);
        if i.is_multiple_of(2) {
            cur.scale(-1.0 / self.p.tau_s)
        } else {
            let v = q(i);
            (v - C::constant(self.p.e_leak)).scale(-1.0 / self.p.tau_m) + cur.scale(1.0 / self.p.c_m)
        }
    }

    fn diag_jacobian<S: Fn(usize) -> f64>(&self, i: usize, _q: &S, _t: f64) -> Option<f64> {
        Some(if i.is_multiple_of(2) { -1.0 / self.p.tau_s } else { -1.0 / self.p.tau_m })
    }

    /// Quanta are given in millivolts and nanoamperes.
    fn quantum_scale(&self, i: usize) -> f64 {
        if i.is_multiple_of(2) {
            1e-9
        } else {
            1e-3
        }
    }

    fn zero_crossings(&self) -> Vec<ZeroCrossing> {
        (0..self.p.neurons)
            .map(|k| ZeroCrossing { var: Self::voltage_index(k), level: self.p.theta, direction: Crossing::Rising })
            .collect()
    }

    fn timed_events(&self, t_end: f64) -> Vec<(f64, u64)> {
        let rate = self.p.nu_ext();
        if !(rate > 0.0) {
            return Vec::new();
        }
        let exp = Exp::new(rate).expect("positive rate");
        let mut out = Vec::with_capacity((rate * t_end * self.p.neurons as f64 * 1.1) as usize);
        for k in 0..self.p.neurons {
            let mut rng = ChaCha8Rng::seed_from_u64(self.p.seed);
            rng.set_stream(1 + k as u64);
            let mut t = 0.0;
            loop {
                t += exp.sample(&mut rng);
                if t > t_end {
                    break;
                }
                out.push((t, tag(EXTERNAL, k)));
            }
        }
        out
    }

    fn on_zero_crossing(&self, z: usize, t: f64, ctx: &mut dyn EventContext) {
        let v = Self::voltage_index(z);
        ctx.set_state(v, self.p.v_reset);
        ctx.freeze(v);
        ctx.schedule(t + self.p.tau_r, tag(REFRACTORY_END, z));
        let j = self.efficacy[z];
        for &post in &self.targets[z] {
            let c = Self::current_index(post);
            ctx.set_state(c, ctx.state(c) + j);
        }
    }

    fn on_timed_event(&self, tag: u64, _t: f64, ctx: &mut dyn EventContext) {
        let k = (tag & 0xffff_ffff) as usize;
        match tag >> 32 {
            EXTERNAL => {
                let c = Self::current_index(k);
                ctx.set_state(c, ctx.state(c) + self.external[k]);
            }
            REFRACTORY_END => ctx.release(Self::voltage_index(k)),
            _ => unreachable!("unknown event tag"),
        }
    }
}
