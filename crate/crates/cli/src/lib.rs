//! Batch driver behind the `qss` binary: configuration merging, benchmark
//! runs, reference generation and the aggregate benchmark table.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use qss_core::activity::min_steps_along;
use qss_core::baseline::{dopri_run, RkController};
use qss_core::engine::effective_quantum;
use qss_core::io::{fmt_f64, parse_key_values, parse_reference, reference_text, stats_text, trajectory_csv};
use qss_core::metrics::{mae_on_grid, mre_spikes};
use qss_core::models::{AdrModel, AdrParams, Model, ScalarModel, SnnModel, SnnParams};
use qss_core::{simulate, Method, QuantumSpec, ReferenceRun, SimConfig, SimStats};

pub const BENCH_HEADER: &str = "model,method,order,rtol,atol,steps_mean,wall_ms_mean,mae_or_mre,theor_min";

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "QSS_SOLVER_THREADS";

/// Output samples when no `sample-dt` is given.
pub const DEFAULT_SAMPLES: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Scalar,
    Adr,
    Snn,
}

impl FromStr for ModelKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scalar" => Ok(Self::Scalar),
            "adr" => Ok(Self::Adr),
            "snn" => Ok(Self::Snn),
            _ => bail!("unknown model {s:?} (expected scalar, adr or snn)"),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Scalar => "scalar",
            Self::Adr => "adr",
            Self::Snn => "snn",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Quantized(Method),
    Dopri,
}

impl FromStr for Solver {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("dopri") {
            return Ok(Self::Dopri);
        }
        s.parse::<Method>().map(Self::Quantized).map_err(|e| anyhow!("{e}"))
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quantized(m) => m.fmt(f),
            Self::Dopri => f.write_str("dopri"),
        }
    }
}

/// Setting keys accepted in config files and as flags (without the dashes).
pub const KEYS: [&str; 14] = [
    "model", "method", "order", "rtol", "atol", "tend", "seed", "runs", "sample-dt", "traj-out", "stats-out",
    "bench-out", "ref-in", "ref-out",
];

/// Model parameter overrides are stored under this prefix.
pub const PARAM_PREFIX: &str = "param.";

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub solver: Solver,
    pub order: usize,
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Repetitions; for the network each repetition uses the next seed.
    pub runs: usize,
    pub sample_dt: Option<f64>,
    pub traj_out: Option<PathBuf>,
    pub stats_out: Option<PathBuf>,
    pub bench_out: Option<PathBuf>,
    pub ref_in: Option<PathBuf>,
    pub ref_out: Option<PathBuf>,
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    /// Experiment defaults of each model.
    pub fn defaults(model: ModelKind) -> Self {
        let (rtol, atol, t_end, runs) = match model {
            ModelKind::Scalar => (0.0, 1e-3, 5.0, 1),
            ModelKind::Adr => (1e-3, 1e-5, 3.0, 1),
            ModelKind::Snn => (0.0, 1e-3, 0.05, 10),
        };
        Self {
            model,
            solver: Solver::Quantized(Method::Cheqss),
            order: 2,
            rtol,
            atol,
            t_end,
            seed: 1,
            runs,
            sample_dt: None,
            traj_out: None,
            stats_out: None,
            bench_out: None,
            ref_in: None,
            ref_out: None,
            params: BTreeMap::new(),
        }
    }

    /// Settings of the high-accuracy reference run of each model.
    pub fn reference_defaults(model: ModelKind) -> Self {
        let mut c = Self::defaults(model);
        match model {
            ModelKind::Scalar | ModelKind::Adr => (c.order, c.rtol, c.atol) = (2, 1e-10, 1e-12),
            ModelKind::Snn => (c.order, c.rtol, c.atol) = (3, 0.0, 1e-10),
        }
        c
    }

    /// Builds a configuration from `key=value` settings (see [`KEYS`]).
    /// Keys left out take the model defaults, or the reference defaults
    /// when `ref-out` is set.
    pub fn from_settings(settings: &BTreeMap<String, String>) -> Result<Self> {
        for key in settings.keys() {
            if !KEYS.contains(&key.as_str()) && !key.starts_with(PARAM_PREFIX) {
                bail!("unknown setting {key:?}");
            }
        }
        let model: ModelKind = settings.get("model").map(|s| s.parse()).transpose()?.unwrap_or(ModelKind::Scalar);
        let mut c = if settings.contains_key("ref-out") { Self::reference_defaults(model) } else { Self::defaults(model) };
        let get = |k: &str| settings.get(k).map(String::as_str);
        fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| anyhow!("invalid value {v:?} for {key}"))
        }
        if let Some(v) = get("method") {
            c.solver = v.parse()?;
        }
        if let Some(v) = get("order") {
            c.order = parse("order", v)?;
        }
        if let Some(v) = get("rtol") {
            c.rtol = parse("rtol", v)?;
        }
        if let Some(v) = get("atol") {
            c.atol = parse("atol", v)?;
        }
        if let Some(v) = get("tend") {
            c.t_end = parse("tend", v)?;
        }
        if let Some(v) = get("seed") {
            c.seed = parse("seed", v)?;
        }
        if let Some(v) = get("runs") {
            c.runs = parse("runs", v)?;
        }
        if let Some(v) = get("sample-dt") {
            c.sample_dt = Some(parse("sample-dt", v)?);
        }
        c.traj_out = get("traj-out").map(PathBuf::from);
        c.stats_out = get("stats-out").map(PathBuf::from);
        c.bench_out = get("bench-out").map(PathBuf::from);
        c.ref_in = get("ref-in").map(PathBuf::from);
        c.ref_out = get("ref-out").map(PathBuf::from);
        c.params = settings
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(PARAM_PREFIX).map(|p| (p.to_string(), v.clone())))
            .collect();
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solver != Solver::Dopri && !(1..=3).contains(&self.order) {
            bail!("order must be 1, 2 or 3, got {}", self.order);
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            bail!("tend must be positive, got {}", self.t_end);
        }
        if !(self.rtol >= 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite()) {
            bail!("need rtol >= 0 and atol > 0, got rtol={} atol={}", self.rtol, self.atol);
        }
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt <= self.t_end) {
                bail!("sample-dt must lie in (0, tend], got {dt}");
            }
        }
        self.build_models()?;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        match self.sample_dt {
            Some(dt) => (self.t_end / dt).round() as usize + 1,
            None => DEFAULT_SAMPLES,
        }
    }

    /// Seeds of the individual runs.
    pub fn seeds(&self) -> Vec<u64> {
        match self.model {
            ModelKind::Snn => (0..self.runs as u64).map(|k| self.seed + k).collect(),
            _ => vec![self.seed; self.runs],
        }
    }

    fn quantum(&self) -> Result<QuantumSpec> {
        Ok(QuantumSpec::new(self.rtol, self.atol)?)
    }

    fn build_models(&self) -> Result<Models> {
        match self.model {
            ModelKind::Scalar => {
                if let Some(k) = self.params.keys().next() {
                    bail!("the scalar model has no parameter {k:?}");
                }
                Ok(Models::Scalar(ScalarModel))
            }
            ModelKind::Adr => Ok(Models::Adr(AdrModel::new(adr_params(&self.params)?)?)),
            ModelKind::Snn => {
                let base = snn_params(&self.params)?;
                let nets = self
                    .seeds()
                    .into_iter()
                    .map(|seed| SnnModel::new(SnnParams { seed, ..base.clone() }))
                    .collect::<qss_core::Result<Vec<_>>>()?;
                Ok(Models::Snn(nets))
            }
        }
    }
}

fn param<T: FromStr>(params: &BTreeMap<String, String>, key: &str, slot: &mut T) -> Result<()> {
    if let Some(v) = params.get(key) {
        *slot = v.trim().parse().map_err(|_| anyhow!("invalid value {v:?} for parameter {key}"))?;
    }
    Ok(())
}

fn check_known(params: &BTreeMap<String, String>, known: &[&str], model: &str) -> Result<()> {
    match params.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => bail!("the {model} model has no parameter {k:?} (known: {})", known.join(", ")),
        None => Ok(()),
    }
}

fn adr_params(params: &BTreeMap<String, String>) -> Result<AdrParams> {
    check_known(params, &["n", "advection", "diffusion", "reaction", "length", "inflow"], "adr")?;
    let mut p = AdrParams::default();
    param(params, "n", &mut p.n)?;
    param(params, "advection", &mut p.advection)?;
    param(params, "diffusion", &mut p.diffusion)?;
    param(params, "reaction", &mut p.reaction)?;
    param(params, "length", &mut p.length)?;
    param(params, "inflow", &mut p.inflow)?;
    Ok(p)
}

const SNN_KEYS: [&str; 17] = [
    "neurons", "excitatory", "in_degree", "exc_in_degree", "tau_m", "tau_r", "tau_s", "c_m", "v_reset", "theta",
    "e_leak", "nu_bg", "k_ext", "j_exc_mean", "j_exc_sd", "g", "j_ext",
];

fn snn_params(params: &BTreeMap<String, String>) -> Result<SnnParams> {
    check_known(params, &SNN_KEYS, "snn")?;
    let mut p = SnnParams::default();
    if let Some(v) = params.get("neurons") {
        let n: usize = v.trim().parse().map_err(|_| anyhow!("invalid value {v:?} for parameter neurons"))?;
        p = SnnParams::scaled(n);
    }
    param(params, "excitatory", &mut p.excitatory)?;
    param(params, "in_degree", &mut p.in_degree)?;
    param(params, "exc_in_degree", &mut p.exc_in_degree)?;
    param(params, "tau_m", &mut p.tau_m)?;
    param(params, "tau_r", &mut p.tau_r)?;
    param(params, "tau_s", &mut p.tau_s)?;
    param(params, "c_m", &mut p.c_m)?;
    param(params, "v_reset", &mut p.v_reset)?;
    param(params, "theta", &mut p.theta)?;
    param(params, "e_leak", &mut p.e_leak)?;
    param(params, "nu_bg", &mut p.nu_bg)?;
    param(params, "k_ext", &mut p.k_ext)?;
    param(params, "j_exc_mean", &mut p.j_exc_mean)?;
    param(params, "j_exc_sd", &mut p.j_exc_sd)?;
    param(params, "g", &mut p.g)?;
    if let Some(v) = params.get("j_ext") {
        p.j_ext = Some(v.trim().parse().map_err(|_| anyhow!("invalid value {v:?} for parameter j_ext"))?);
    }
    Ok(p)
}

enum Models {
    Scalar(ScalarModel),
    Adr(AdrModel),
    /// One network per seed.
    Snn(Vec<SnnModel>),
}

fn solve<M: Model>(model: &M, cfg: &RunConfig, record: bool) -> Result<SimStats> {
    let samples = cfg.samples();
    let stats = match cfg.solver {
        Solver::Dopri => dopri_run(model, RkController::new(cfg.rtol, cfg.atol), cfg.t_end, samples)?,
        Solver::Quantized(method) => {
            let mut sc = SimConfig::new(method, cfg.order, cfg.quantum()?, cfg.t_end);
            sc.samples = samples;
            sc.record = record;
            simulate(model, sc)?
        }
    };
    Ok(stats)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| anyhow!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("{THREADS_ENV} must be a positive integer");
        }
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// Runs every repetition; results are in seed order.
fn run_all(cfg: &RunConfig, models: &Models) -> Result<Vec<SimStats>> {
    let pool = thread_pool()?;
    pool.install(|| match models {
        Models::Scalar(m) => (0..cfg.runs).into_par_iter().map(|_| solve(m, cfg, true)).collect(),
        Models::Adr(m) => (0..cfg.runs).into_par_iter().map(|_| solve(m, cfg, true)).collect(),
        Models::Snn(nets) => nets
            .par_iter()
            .enumerate()
            .map(|(k, m)| solve(m, cfg, k == 0 && cfg.traj_out.is_some()))
            .collect(),
    })
}

fn var_names(models: &Models) -> Vec<String> {
    fn names<M: Model>(m: &M) -> Vec<String> {
        (0..m.dimension()).map(|i| m.var_name(i)).collect()
    }
    match models {
        Models::Scalar(m) => names(m),
        Models::Adr(m) => names(m),
        Models::Snn(nets) => names(&nets[0]),
    }
}

/// Tight Runge-Kutta solution used for error and bound estimates when no
/// reference file is supplied.
fn dense_reference<M: Model>(model: &M, t_end: f64, samples: usize) -> Result<SimStats> {
    Ok(dopri_run(model, RkController::new(1e-10, 1e-12), t_end, samples)?)
}

/// Output of one benchmark invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutcome {
    pub row: BenchRow,
    pub runs: Vec<SimStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub model: String,
    pub method: String,
    pub order: usize,
    pub rtol: f64,
    pub atol: f64,
    pub steps_mean: f64,
    pub wall_ms_mean: f64,
    pub mae_or_mre: Option<f64>,
    pub theor_min: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.model,
            self.method,
            self.order,
            fmt_f64(self.rtol),
            fmt_f64(self.atol),
            fmt_f64(self.steps_mean),
            fmt_f64(self.wall_ms_mean),
            opt(self.mae_or_mre),
            opt(self.theor_min)
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            bail!("benchmark row needs 9 fields: {line:?}");
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| anyhow!("bad number {s:?} in {line:?}"));
        let opt_num = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        Ok(Self {
            model: f[0].to_string(),
            method: f[1].to_string(),
            order: f[2].parse().map_err(|_| anyhow!("bad order in {line:?}"))?,
            rtol: num(f[3])?,
            atol: num(f[4])?,
            steps_mean: num(f[5])?,
            wall_ms_mean: num(f[6])?,
            mae_or_mre: opt_num(f[7])?,
            theor_min: opt_num(f[8])?,
        })
    }

    fn sort_key(&self) -> (&str, &str, usize) {
        (&self.model, &self.method, self.order)
    }
}

/// Orders rows by model, method, order, then decreasing tolerances.
pub fn sort_rows(rows: &mut [BenchRow]) {
    rows.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then(b.rtol.total_cmp(&a.rtol))
            .then(b.atol.total_cmp(&a.atol))
            .then(a.to_csv().cmp(&b.to_csv()))
    });
}

/// Adds `row` to the table at `path`, keeping it sorted.
pub fn append_bench_row(path: &Path, row: BenchRow) -> Result<()> {
    let mut rows = Vec::new();
    if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            rows.push(BenchRow::parse(line)?);
        }
    }
    rows.push(row);
    sort_rows(&mut rows);
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    write(path, &out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_reference(path: &Path) -> Result<ReferenceRun> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_reference(&text)?)
}

/// Trajectory error of a continuous model against the reference file, or
/// against the exact or a tight Runge-Kutta solution.
fn trajectory_error<M: Model>(model: &M, cfg: &RunConfig, stats: &SimStats) -> Result<f64> {
    let reference = match &cfg.ref_in {
        Some(path) => read_reference(path)?,
        None => match model.exact_solution(0.0) {
            Some(_) => ReferenceRun {
                grid: stats.grid.clone(),
                samples: stats.grid.iter().map(|&t| model.exact_solution(t).unwrap()).collect(),
                ..ReferenceRun::default()
            },
            None => {
                let r = dense_reference(model, cfg.t_end, cfg.samples())?;
                ReferenceRun { grid: r.grid, samples: r.samples, ..ReferenceRun::default() }
            }
        },
    };
    Ok(mae_on_grid(&stats.grid, &stats.samples, &reference)?)
}

fn theoretical_minimum<M: Model>(model: &M, cfg: &RunConfig) -> Result<Option<f64>> {
    let Solver::Quantized(_) = cfg.solver else { return Ok(None) };
    let spec = cfg.quantum()?;
    let dense = dense_reference(model, cfg.t_end, 2001)?;
    let q = |i: usize, x: f64| effective_quantum(&spec, x) * model.quantum_scale(i);
    Ok(Some(min_steps_along(model, &dense.samples, cfg.t_end, cfg.order, q)))
}

/// Executes `cfg.runs` simulations and writes the requested outputs.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let models = cfg.build_models()?;
    let runs = run_all(cfg, &models)?;
    let first = &runs[0];
    let n = runs.len() as f64;
    let steps_mean = runs.iter().map(|s| s.total_steps as f64).sum::<f64>() / n;
    let wall_ms_mean = runs.iter().map(|s| s.wall_ms).sum::<f64>() / n;

    let mut extra: Vec<(String, String)> = vec![
        ("model".into(), cfg.model.to_string()),
        ("method".into(), cfg.solver.to_string()),
        ("runs".into(), cfg.runs.to_string()),
        ("steps_mean".into(), fmt_f64(steps_mean)),
        ("wall_ms_mean".into(), fmt_f64(wall_ms_mean)),
    ];
    let (error, theor_min) = match &models {
        Models::Scalar(m) => {
            let e = trajectory_error(m, cfg, first)?;
            extra.push(("mae".into(), fmt_f64(e)));
            (Some(e), theoretical_minimum(m, cfg)?)
        }
        Models::Adr(m) => {
            let e = trajectory_error(m, cfg, first)?;
            extra.push(("mae".into(), fmt_f64(e)));
            (Some(e), theoretical_minimum(m, cfg)?)
        }
        Models::Snn(_) => {
            let counts: Vec<u64> = runs.iter().map(|s| s.zero_crossings).collect();
            let seeds = cfg.seeds();
            extra.push(("spikes".into(), counts.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")));
            let e = match &cfg.ref_in {
                Some(path) => {
                    let r = read_reference(path)?;
                    let refs = seeds
                        .iter()
                        .map(|s| {
                            r.count_for_seed(*s).ok_or_else(|| anyhow!("reference {} has no seed {s}", path.display()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let e = mre_spikes(&counts, &refs)?;
                    extra.push(("mre".into(), fmt_f64(e)));
                    Some(e)
                }
                None => None,
            };
            (e, None)
        }
    };
    if let Some(t) = theor_min {
        extra.push(("theor_min".into(), fmt_f64(t)));
    }

    if let Some(path) = &cfg.traj_out {
        write(path, &trajectory_csv(&var_names(&models), &first.grid, &first.samples))?;
    }
    if let Some(path) = &cfg.stats_out {
        write(path, &stats_text(first, &extra))?;
    }
    let row = BenchRow {
        model: cfg.model.to_string(),
        method: cfg.solver.to_string(),
        order: if cfg.solver == Solver::Dopri { 5 } else { cfg.order },
        rtol: cfg.rtol,
        atol: cfg.atol,
        steps_mean,
        wall_ms_mean,
        mae_or_mre: error,
        theor_min,
    };
    if let Some(path) = &cfg.bench_out {
        append_bench_row(path, row.clone())?;
    }
    Ok(BenchOutcome { row, runs })
}

/// Runs the reference configuration and writes it to `cfg.ref_out`:
/// sampled trajectories, or one spike count per seed for the network.
pub fn make_reference(cfg: &RunConfig) -> Result<ReferenceRun> {
    cfg.validate()?;
    let path = cfg.ref_out.as_ref().ok_or_else(|| anyhow!("ref-out is required"))?;
    let models = cfg.build_models()?;
    let runs = run_all(&RunConfig { runs: 1.max(cfg.runs), ..cfg.clone() }, &models)?;
    let reference = match &models {
        Models::Snn(_) => ReferenceRun {
            spike_counts: runs.iter().map(|s| s.zero_crossings).collect(),
            seeds: cfg.seeds(),
            ..ReferenceRun::default()
        },
        _ => ReferenceRun { grid: runs[0].grid.clone(), samples: runs[0].samples.clone(), ..ReferenceRun::default() },
    };
    write(path, &reference_text(&reference, &var_names(&models)))?;
    if let Some(p) = &cfg.stats_out {
        write(p, &stats_text(&runs[0], &[("method".into(), cfg.solver.to_string())]))?;
    }
    Ok(reference)
}

/// Merges a `key=value` config file under explicit settings, which win.
pub fn merge_settings(file: Option<&Path>, explicit: BTreeMap<String, String>) -> Result<BTreeMap<String, String>> {
    let mut merged = match file {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_key_values(&text)?
        }
        None => BTreeMap::new(),
    };
    merged.extend(explicit);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn model_defaults() {
        let c = RunConfig::from_settings(&settings(&[("model", "adr")])).unwrap();
        assert_eq!((c.t_end, c.rtol, c.atol, c.runs), (3.0, 1e-3, 1e-5, 1));
        let c = RunConfig::from_settings(&settings(&[("model", "snn")])).unwrap();
        assert_eq!((c.t_end, c.runs), (0.05, 10));
        assert_eq!(c.seeds(), (1..=10).collect::<Vec<_>>());
        let c = RunConfig::from_settings(&BTreeMap::new()).unwrap();
        assert_eq!((c.model, c.t_end), (ModelKind::Scalar, 5.0));
    }

    #[test]
    fn reference_defaults_apply_with_ref_out() {
        let c = RunConfig::from_settings(&settings(&[("model", "snn"), ("ref-out", "r.csv")])).unwrap();
        assert_eq!((c.solver, c.order, c.atol), (Solver::Quantized(Method::Cheqss), 3, 1e-10));
        let c = RunConfig::from_settings(&settings(&[("model", "adr"), ("ref-out", "r.csv"), ("rtol", "1e-6")])).unwrap();
        assert_eq!((c.order, c.rtol, c.atol), (2, 1e-6, 1e-12));
    }

    #[test]
    fn rejects_bad_settings() {
        for bad in [
            settings(&[("model", "lorenz")]),
            settings(&[("order", "4")]),
            settings(&[("atol", "0")]),
            settings(&[("runs", "0")]),
            settings(&[("bogus", "1")]),
            settings(&[("param.n", "10")]),
            settings(&[("model", "adr"), ("param.n", "2")]),
            settings(&[("model", "adr"), ("param.speed", "2")]),
            settings(&[("method", "rk4")]),
            settings(&[("sample-dt", "10")]),
        ] {
            assert!(RunConfig::from_settings(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn parameter_overrides() {
        let c = RunConfig::from_settings(&settings(&[("model", "adr"), ("param.n", "40"), ("param.reaction", "50")])).unwrap();
        let p = adr_params(&c.params).unwrap();
        assert_eq!((p.n, p.reaction), (40, 50.0));
        let c = RunConfig::from_settings(&settings(&[("model", "snn"), ("param.neurons", "100")])).unwrap();
        let p = snn_params(&c.params).unwrap();
        assert_eq!((p.neurons, p.excitatory), (100, 80));
    }

    #[test]
    fn sample_grid() {
        let c = RunConfig::from_settings(&settings(&[("sample-dt", "0.01")])).unwrap();
        assert_eq!(c.samples(), 501);
        assert_eq!(RunConfig::defaults(ModelKind::Adr).samples(), DEFAULT_SAMPLES);
    }

    #[test]
    fn bench_rows_round_trip_and_sort() {
        let row = |method: &str, order, atol| BenchRow {
            model: "scalar".into(),
            method: method.into(),
            order,
            rtol: 0.0,
            atol,
            steps_mean: 51.0,
            wall_ms_mean: 0.1,
            mae_or_mre: Some(1e-3),
            theor_min: None,
        };
        let r = row("cheqss", 1, 1e-2);
        assert_eq!(BenchRow::parse(&r.to_csv()).unwrap(), r);
        let mut rows = vec![row("liqss", 1, 1e-2), row("cheqss", 2, 1e-3), row("cheqss", 2, 1e-2), row("cheqss", 1, 1e-4)];
        sort_rows(&mut rows);
        let keys: Vec<(String, usize, f64)> = rows.iter().map(|r| (r.method.clone(), r.order, r.atol)).collect();
        assert_eq!(
            keys,
            vec![("cheqss".into(), 1, 1e-4), ("cheqss".into(), 2, 1e-2), ("cheqss".into(), 2, 1e-3), ("liqss".into(), 1, 1e-2)]
        );
    }
}
