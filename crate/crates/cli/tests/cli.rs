use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qss_cli::{BenchRow, BENCH_HEADER};
use qss_core::io::{parse_key_values, parse_reference, parse_trajectory_csv};
use qss_core::models::ScalarModel;
use qss_core::{simulate, Method, QuantumSpec, SimConfig};
use tempfile::TempDir;

fn qss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qss")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qss(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// The benchmark row printed on stdout.
fn row(stdout: &str) -> BenchRow {
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some(BENCH_HEADER));
    BenchRow::parse(lines.next().unwrap()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn table_rows(p: &Path) -> Vec<String> {
    let text = fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(BENCH_HEADER));
    lines.map(str::to_string).collect()
}

#[test]
fn scalar_first_order_run() {
    let dir = TempDir::new().unwrap();
    let bench = path(&dir, "bench.csv");
    let r = row(&ok(&["--model", "scalar", "--method", "cheqss", "--order", "1", "--atol", "1e-2", "--tend", "5", "--bench-out", &bench]));
    assert!((r.steps_mean - 51.0).abs() <= 0.1 * 51.0, "steps {}", r.steps_mean);
    assert!((r.theor_min.unwrap() - 49.66).abs() < 0.01);
    assert!(r.mae_or_mre.unwrap() <= 1e-2);
    let rows = table_rows(Path::new(&bench));
    assert_eq!(rows.len(), 1);
    assert_eq!(BenchRow::parse(&rows[0]).unwrap(), r);
}

#[test]
fn step_counts_match_the_library() {
    let r = row(&ok(&["--model", "scalar", "--method", "liqss", "--order", "3", "--atol", "1e-4"]));
    let s = simulate(&ScalarModel, SimConfig::new(Method::Liqss, 3, QuantumSpec::absolute(1e-4), 5.0)).unwrap();
    assert_eq!(r.steps_mean, s.total_steps as f64);
    assert_eq!((r.model.as_str(), r.method.as_str(), r.order), ("scalar", "liqss", 3));
}

#[test]
fn adr_dopri_smoke() {
    let r = row(&ok(&["--model", "adr", "--method", "dopri", "--rtol", "1e-3", "--atol", "1e-5"]));
    let e = r.mae_or_mre.unwrap();
    assert!(e.is_finite() && e <= 1e-2, "mae {e}");
    assert!(r.theor_min.is_none());
}

#[test]
fn scalar_reference_matches_analytic_solution() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "ref.csv");
    ok(&["--model", "scalar", "--ref-out", &out]);
    let r = parse_reference(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.samples.len(), 500);
    let worst = r.grid.iter().zip(&r.samples).map(|(t, x)| (x[0] + (-t).exp_m1()).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "max deviation {worst}");
}

#[test]
fn adr_reference_is_reproducible() {
    // looser than the default reference quanta to keep the test short
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    for p in [&a, &b] {
        ok(&["--model", "adr", "--ref-out", p, "--rtol", "1e-5", "--atol", "1e-7"]);
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let t = parse_trajectory_csv(std::str::from_utf8(&ta).unwrap()).unwrap();
    assert_eq!(t.names.len(), 100);
}

#[test]
fn snn_reference_and_error() {
    let dir = TempDir::new().unwrap();
    let reference = path(&dir, "spikes.csv");
    let common = ["--model", "snn", "--param", "neurons=60", "--runs", "3", "--seed", "4", "--tend", "0.03"];
    let mut args = common.to_vec();
    args.extend(["--ref-out", &reference, "--atol", "1e-4"]);
    ok(&args);
    let r = parse_reference(&fs::read_to_string(&reference).unwrap()).unwrap();
    assert_eq!(r.seeds, vec![4, 5, 6]);
    assert_eq!(r.spike_counts.len(), 3);
    assert!(r.spike_counts.iter().all(|&c| c > 0));

    // the reference configuration measured against itself
    let mut args = common.to_vec();
    args.extend(["--method", "cheqss", "--order", "3", "--atol", "1e-4", "--ref-in", &reference]);
    assert_eq!(row(&ok(&args)).mae_or_mre, Some(0.0));

    // a seed missing from the reference is an error
    let mut args = common.to_vec();
    args.extend(["--seed", "9", "--ref-in", &reference]);
    args.retain(|a| *a != "4");
    assert!(!qss(&args).status.success());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# scalar sweep\nmodel=scalar\nmethod=eliqss\norder=3\natol=1e-2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let r = row(&ok(&["--config", cfg]));
    assert_eq!((r.method.as_str(), r.order, r.atol), ("eliqss", 3, 1e-2));
    let r = row(&ok(&["--config", cfg, "--order", "1", "--method", "cheqss"]));
    assert_eq!((r.method.as_str(), r.order, r.atol), ("cheqss", 1, 1e-2));
}

#[test]
fn outputs_parse_back() {
    let dir = TempDir::new().unwrap();
    let (traj, stats) = (path(&dir, "traj.csv"), path(&dir, "stats.txt"));
    let r = row(&ok(&["--method", "cheqss", "--order", "2", "--atol", "1e-3", "--sample-dt", "0.05", "--traj-out", &traj, "--stats-out", &stats]));
    let t = parse_trajectory_csv(&fs::read_to_string(&traj).unwrap()).unwrap();
    assert_eq!(t.names, vec!["x".to_string()]);
    assert_eq!(t.grid.len(), 101);
    assert_eq!(t.grid[100], 5.0);
    let kv = parse_key_values(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(kv["total_steps"].parse::<f64>().unwrap(), r.steps_mean);
    assert_eq!(kv["steps[0]"], kv["total_steps"]);
    assert!(kv["mae"].parse::<f64>().unwrap() <= 2e-3);
    assert!(kv.contains_key("wall_ms") && kv.contains_key("events") && kv.contains_key("theor_min"));
}

fn without_wall_clock(rows: Vec<String>) -> Vec<String> {
    rows.into_iter()
        .map(|r| {
            let mut f: Vec<&str> = r.split(',').collect();
            f[6] = "";
            f.join(",")
        })
        .collect()
}

#[test]
fn bench_table_is_order_insensitive() {
    let dir = TempDir::new().unwrap();
    let configs: [&[&str]; 3] = [
        &["--method", "liqss", "--order", "1", "--atol", "1e-2"],
        &["--method", "cheqss", "--order", "2", "--atol", "1e-3"],
        &["--method", "cheqss", "--order", "2", "--atol", "1e-2"],
    ];
    let mut tables = Vec::new();
    for (name, order) in [("fwd.csv", [0, 1, 2]), ("rev.csv", [2, 1, 0])] {
        let bench = path(&dir, name);
        for k in order {
            let mut args = configs[k].to_vec();
            args.extend(["--bench-out", &bench]);
            ok(&args);
        }
        tables.push(without_wall_clock(table_rows(Path::new(&bench))));
    }
    assert_eq!(tables[0], tables[1]);
    let methods: Vec<&str> = tables[0].iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(methods, ["cheqss", "cheqss", "liqss"]);
}

#[test]
fn thread_cap_is_honoured() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qss"))
            .args(["--model", "snn", "--param", "neurons=40", "--runs", "2", "--tend", "0.01", "--atol", "1e-2"])
            .env("QSS_SOLVER_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert!(one.status.success());
    let two = run("2");
    // wall time aside, the results do not depend on the thread count
    let strip = |o: &Output| {
        let r = row(std::str::from_utf8(&o.stdout).unwrap());
        (r.steps_mean, r.mae_or_mre)
    };
    assert_eq!(strip(&one), strip(&two));
    assert!(!run("0").status.success());
}

#[test]
fn invalid_input_fails_with_a_diagnostic() {
    for args in [
        &["--model", "lorenz"][..],
        &["--order", "7"],
        &["--atol", "-1"],
        &["--model", "adr", "--param", "speed=3"],
        &["--param", "novalue"],
        &["--ref-in", "/nonexistent/ref.csv"],
        &["--config", "/nonexistent/run.cfg"],
    ] {
        let out = qss(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |v| v.is_finite())
}

proptest! {
    #[test]
    fn bench_rows_round_trip(
        method in prop_oneof![Just("qss"), Just("liqss"), Just("eliqss"), Just("cheqss"), Just("dopri")],
        order in 1usize..=5,
        nums in prop::array::uniform4(finite()),
        err in prop::option::of(finite()),
        min in prop::option::of(finite()),
    ) {
        let r = BenchRow {
            model: "adr".into(),
            method: method.into(),
            order,
            rtol: nums[0],
            atol: nums[1],
            steps_mean: nums[2],
            wall_ms_mean: nums[3],
            mae_or_mre: err,
            theor_min: min,
        };
        prop_assert_eq!(BenchRow::parse(&r.to_csv()).unwrap(), r);
    }
}
