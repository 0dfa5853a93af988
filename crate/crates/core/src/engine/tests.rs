use proptest::prelude::*;
use crate::engine::{effective_quantum, EventKind};
use crate::models::{dependents, AdrModel, AdrParams, EventContext, Model, ScalarModel, SnnModel, SnnParams};
use crate::{simulate, Engine, Error, Jet, Method, QuantumSpec, SimConfig, SimStats};

const FAMILY: [Method; 3] = [Method::Liqss, Method::Eliqss, Method::Cheqss];
const ALL: [Method; 4] = [Method::Qss, Method::Liqss, Method::Eliqss, Method::Cheqss];

fn scalar_cfg(method: Method, order: usize, dq: f64) -> SimConfig {
    SimConfig::new(method, order, QuantumSpec::absolute(dq), 5.0)
}

fn without_clock(mut s: SimStats) -> SimStats {
    s.wall_ms = 0.0;
    s
}

#[test]
fn effective_quantum_examples() {
    let q = QuantumSpec::new(1e-3, 1e-5).unwrap();
    assert_eq!(effective_quantum(&q, 2.0), 2e-3);
    assert_eq!(effective_quantum(&q, 0.0), 1e-5);
    assert_eq!(effective_quantum(&QuantumSpec::new(0.0, 1e-2).unwrap(), 100.0), 1e-2);
    assert!(QuantumSpec::new(1e-3, 0.0).is_err());
    assert!(QuantumSpec::new(-1.0, 1e-3).is_err());
}

#[test]
fn rejects_bad_configs() {
    for order in [0, 4] {
        let err = Engine::new(&ScalarModel, scalar_cfg(Method::Liqss, order, 1e-2)).err().unwrap();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
    let mut cfg = scalar_cfg(Method::Liqss, 1, 1e-2);
    cfg.t_end = 0.0;
    assert!(Engine::new(&ScalarModel, cfg).is_err());
}

#[test]
fn initial_quantization_and_first_events() {
    // ẋ = 1 - q with q = 0.01 is 0.99, so q is reached at 0.01/0.99 and
    // the upper band edge 0.02 at 0.02/0.99
    let e = Engine::new(&ScalarModel, scalar_cfg(Method::Liqss, 1, 1e-2)).unwrap();
    assert!((e.variables()[0].q.value() - 0.01).abs() < 1e-15);
    assert!((e.next_event_time() - 0.01 / 0.99).abs() < 1e-12);

    let mut e = Engine::new(&ScalarModel, scalar_cfg(Method::Eliqss, 1, 1e-2)).unwrap();
    assert!((e.next_event_time() - 0.02 / 0.99).abs() < 1e-10);
    let ev = e.step().unwrap().unwrap();
    assert_eq!(ev.kind, EventKind::Internal(0));
    assert!((e.variables()[0].x.value() - 0.02).abs() < 1e-10);
}

#[test]
fn model_structure() {
    let adr = AdrModel::default();
    let e = Engine::new(&adr, SimConfig::new(Method::Cheqss, 2, QuantumSpec::new(1e-3, 1e-5).unwrap(), 3.0)).unwrap();
    assert_eq!(e.variables().len(), 100);
    assert_eq!(adr.incidence(0), &[0, 1]);
    assert_eq!(adr.incidence(50), &[49, 50, 51]);

    let snn = SnnModel::new(SnnParams::default()).unwrap();
    assert_eq!(snn.dimension(), 2000);
    assert_eq!(snn.zero_crossings().len(), 1000);
}

#[test]
fn steps_sum_and_samples() {
    for method in ALL {
        for order in 1..=3 {
            let s = simulate(&ScalarModel, scalar_cfg(method, order, 1e-3)).unwrap();
            assert_eq!(s.total_steps, s.steps.iter().sum::<u64>());
            assert_eq!(s.samples.len(), 500);
            assert_eq!(s.grid.len(), 500);
            assert_eq!(s.grid[499], 5.0);
        }
    }
}

#[test]
fn scalar_error_is_bounded_by_twice_the_quantum() {
    for method in ALL {
        for order in 1..=3 {
            for dq in [1e-2, 1e-3, 1e-4] {
                let s = simulate(&ScalarModel, scalar_cfg(method, order, dq)).unwrap();
                let err = s
                    .grid
                    .iter()
                    .zip(&s.samples)
                    .map(|(t, row)| (row[0] - (1.0 - (-t).exp())).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 2.0 * dq, "{method} order {order} dq {dq}: error {err}");
            }
        }
    }
}

#[test]
fn halving_the_quantum_never_reduces_steps() {
    // explicit third-order QSS is excluded: a near-zero cubic coefficient at
    // a coarse quantum occasionally yields one long step
    let cases = FAMILY.iter().flat_map(|&m| (1..=3).map(move |o| (m, o))).chain([(Method::Qss, 1), (Method::Qss, 2)]);
    for (method, order) in cases {
        {
            let mut prev = 0;
            let mut dq = 1e-2;
            while dq >= 1e-5 {
                let s = simulate(&ScalarModel, scalar_cfg(method, order, dq)).unwrap();
                assert!(s.total_steps >= prev, "{method}{order} at {dq}: {} < {prev}", s.total_steps);
                prev = s.total_steps;
                dq /= 2.0;
            }
        }
    }
}

#[test]
fn internal_events_are_local() {
    let adr = AdrModel::new(AdrParams { n: 30, ..AdrParams::default() }).unwrap();
    let deps = dependents(&adr);
    for method in FAMILY {
        let cfg = SimConfig::new(method, 2, QuantumSpec::new(1e-3, 1e-4).unwrap(), 3.0);
        let mut e = Engine::new(&adr, cfg).unwrap();
        let mut internal = 0;
        while let Some(ev) = e.step().unwrap() {
            if let EventKind::Internal(i) = ev.kind {
                internal += 1;
                for &j in e.touched() {
                    assert!(j == i || deps[i].contains(&j), "event on {i} touched {j}");
                }
            }
        }
        assert!(internal > 100);
    }
}

#[test]
fn runs_are_deterministic() {
    let adr = AdrModel::default();
    let cfg = SimConfig::new(Method::Cheqss, 3, QuantumSpec::new(1e-3, 1e-5).unwrap(), 3.0);
    let a = without_clock(simulate(&adr, cfg.clone()).unwrap());
    let b = without_clock(simulate(&adr, cfg).unwrap());
    assert_eq!(a, b);

    let snn = SnnModel::new(SnnParams { seed: 3, ..SnnParams::scaled(100) }).unwrap();
    let cfg = SimConfig::new(Method::Eliqss, 2, QuantumSpec::absolute(1e-3), 0.02);
    let a = without_clock(simulate(&snn, cfg.clone()).unwrap());
    let b = without_clock(simulate(&snn, cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn spike_resets_and_propagates() {
    let snn = SnnModel::new(SnnParams { seed: 5, ..SnnParams::scaled(100) }).unwrap();
    let p = snn.params().clone();
    let mut e = Engine::new(&snn, SimConfig::new(Method::Cheqss, 2, QuantumSpec::absolute(1e-3), 0.05)).unwrap();
    let mut before = Vec::new();
    loop {
        let t_next = e.next_event_time();
        assert!(t_next <= 0.05, "no spike before t_end");
        // currents just before the event
        before.clear();
        before.extend(e.variables().iter().map(|v| v.x.eval(t_next)));
        let ev = e.step().unwrap().unwrap();
        if let EventKind::ZeroCrossing(z) = ev.kind {
            let vi = SnnModel::voltage_index(z);
            let v = &e.variables()[vi];
            assert!((before[vi] - p.theta).abs() <= 1e-9);
            assert_eq!(v.x.value(), p.v_reset);
            assert!(v.frozen);
            assert_eq!(v.x.coeffs[1], 0.0);
            let j = snn.efficacy(z);
            for &post in snn.targets(z) {
                let c = SnnModel::current_index(post);
                let now = e.variables()[c].x.value();
                assert!((now - before[c] - j).abs() <= 1e-12 * j.abs().max(before[c].abs()));
            }
            break;
        }
    }
    // refractory release reopens the dynamics
    let vi_frozen: Vec<usize> = (0..e.variables().len()).filter(|&i| e.variables()[i].frozen).collect();
    let t_spike = e.time();
    while e.time() < t_spike + p.tau_r * 1.01 {
        if e.step().unwrap().is_none() {
            break;
        }
    }
    for i in vi_frozen {
        let v = &e.variables()[i];
        assert!(!v.frozen || e.time() < t_spike + p.tau_r);
    }
}

/// Repeatedly schedules a discontinuity at the current time.
struct Zeno;

impl Model for Zeno {
    fn name(&self) -> &'static str {
        "zeno"
    }
    fn dimension(&self) -> usize {
        1
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn incidence(&self, _i: usize) -> &[usize] {
        &[]
    }
    fn rhs<C: crate::jet::Carrier, S: Fn(usize) -> C>(&self, _i: usize, _q: &S, _t: C) -> C {
        C::constant(1.0)
    }
    fn timed_events(&self, _t_end: f64) -> Vec<(f64, u64)> {
        vec![(0.5, 0)]
    }
    fn on_timed_event(&self, _tag: u64, t: f64, ctx: &mut dyn EventContext) {
        ctx.schedule(t, 0);
    }
}

#[test]
fn stalled_simulation_is_reported() {
    let cfg = SimConfig::new(Method::Qss, 1, QuantumSpec::absolute(1e-2), 1.0);
    match simulate(&Zeno, cfg) {
        Err(Error::StalledSimulation { t }) => assert_eq!(t, 0.5),
        other => panic!("expected a stall, got {other:?}"),
    }
}

#[test]
fn jet_carrier_is_exported() {
    let t = Jet::time(1.0);
    assert_eq!(t.0, [1.0, 1.0, 0.0, 0.0]);
}

fn method_strategy() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::Liqss), Just(Method::Eliqss), Just(Method::Cheqss)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn band_holds_on_scalar(method in method_strategy(), order in 1usize..=3, exp in -5.0f64..-1.0) {
        let dq = 10f64.powf(exp);
        let s = simulate(&ScalarModel, scalar_cfg(method, order, dq)).unwrap();
        prop_assert!(s.max_band_ratio <= 1.0 + 1e-6, "ratio {}", s.max_band_ratio);
    }

    #[test]
    fn band_holds_on_small_adr(method in method_strategy(), order in 1usize..=3, rel_exp in -4.0f64..-2.0) {
        let adr = AdrModel::new(AdrParams { n: 20, ..AdrParams::default() }).unwrap();
        let rel = 10f64.powf(rel_exp);
        let cfg = SimConfig::new(method, order, QuantumSpec::new(rel, rel * 1e-2).unwrap(), 3.0);
        let s = simulate(&adr, cfg).unwrap();
        prop_assert!(s.max_band_ratio <= 1.0 + 1e-6, "ratio {}", s.max_band_ratio);
        prop_assert!(s.final_state.iter().all(|v| v.is_finite()));
    }
}
