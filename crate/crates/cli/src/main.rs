use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;

use qss_cli::{make_reference, merge_settings, run_benchmark, RunConfig, PARAM_PREFIX};

/// Runs quantized-state (or Dormand-Prince) simulations of the scalar,
/// advection-diffusion-reaction and spiking-network models.
///
/// Settings come from the model defaults, then `--config`, then flags.
/// With `--ref-out` the reference configuration of the model is run and
/// saved instead of a benchmark.
#[derive(Debug, Parser)]
#[command(name = "qss", version)]
struct Cli {
    /// `key=value` file using the long flag names as keys (`param.<name>` for parameters)
    #[arg(long)]
    config: Option<PathBuf>,
    /// scalar, adr or snn
    #[arg(long)]
    model: Option<String>,
    /// qss, liqss, eliqss, cheqss or dopri
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    order: Option<String>,
    /// Relative quantum (relative tolerance for dopri)
    #[arg(long)]
    rtol: Option<String>,
    /// Absolute quantum (absolute tolerance for dopri)
    #[arg(long)]
    atol: Option<String>,
    /// Final time in seconds
    #[arg(long)]
    tend: Option<String>,
    /// Network seed; run k uses seed + k
    #[arg(long)]
    seed: Option<String>,
    /// Repetitions to average over
    #[arg(long)]
    runs: Option<String>,
    /// Output sampling interval (default: 500 samples)
    #[arg(long = "sample-dt")]
    sample_dt: Option<String>,
    /// Trajectory CSV of the first run
    #[arg(long = "traj-out")]
    traj_out: Option<String>,
    /// Statistics of the first run as key=value lines
    #[arg(long = "stats-out")]
    stats_out: Option<String>,
    /// Benchmark table to add a row to
    #[arg(long = "bench-out")]
    bench_out: Option<String>,
    /// Reference file to measure the error against
    #[arg(long = "ref-in")]
    ref_in: Option<String>,
    /// Run the reference configuration and write it here
    #[arg(long = "ref-out")]
    ref_out: Option<String>,
    /// Model parameter override, repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl Cli {
    fn explicit(&self) -> Result<BTreeMap<String, String>> {
        let mut m = BTreeMap::new();
        let flags = [
            ("model", &self.model),
            ("method", &self.method),
            ("order", &self.order),
            ("rtol", &self.rtol),
            ("atol", &self.atol),
            ("tend", &self.tend),
            ("seed", &self.seed),
            ("runs", &self.runs),
            ("sample-dt", &self.sample_dt),
            ("traj-out", &self.traj_out),
            ("stats-out", &self.stats_out),
            ("bench-out", &self.bench_out),
            ("ref-in", &self.ref_in),
            ("ref-out", &self.ref_out),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        }
        for p in &self.params {
            let (k, v) = p.split_once('=').ok_or_else(|| anyhow::anyhow!("--param expects key=value, got {p:?}"))?;
            m.insert(format!("{PARAM_PREFIX}{}", k.trim()), v.trim().to_string());
        }
        Ok(m)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let settings = merge_settings(cli.config.as_deref(), cli.explicit()?)?;
    let cfg = RunConfig::from_settings(&settings)?;
    if cfg.ref_out.is_some() {
        let r = make_reference(&cfg)?;
        if r.spike_counts.is_empty() {
            println!("reference: {} samples of {} variables", r.samples.len(), r.samples.first().map_or(0, Vec::len));
        } else {
            println!("reference spike counts: {:?}", r.spike_counts);
        }
    } else {
        let out = run_benchmark(&cfg)?;
        println!("{}", qss_cli::BENCH_HEADER);
        println!("{}", out.row.to_csv());
    }
    Ok(())
}
