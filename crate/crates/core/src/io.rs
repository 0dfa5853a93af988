//! Text formats: sampled trajectories as CSV, run statistics as `key=value`
//! lines, and reference runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::engine::SimStats;
use crate::error::{Error, Result};
use crate::metrics::ReferenceRun;

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with header `time,<names...>` and one row per grid point.
pub fn trajectory_csv(names: &[String], grid: &[f64], samples: &[Vec<f64>]) -> String {
    let mut s = String::from("time");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (t, row) in grid.iter().zip(samples) {
        s.push_str(&fmt_f64(*t));
        for v in row {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// Sampled trajectory read back from [`trajectory_csv`] output.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryTable {
    pub names: Vec<String>,
    pub grid: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))
}

pub fn parse_trajectory_csv(text: &str) -> Result<TrajectoryTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty trajectory file".into()))?;
    let mut cols = header.split(',');
    if cols.next().map(str::trim) != Some("time") {
        return Err(Error::Parse("first column must be `time`".into()));
    }
    let names: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
    let mut grid = Vec::new();
    let mut samples = Vec::new();
    for (k, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() + 1 {
            return Err(Error::Parse(format!("line {}: expected {} fields", k + 1, names.len() + 1)));
        }
        grid.push(parse_f64(fields[0], k + 1)?);
        samples.push(fields[1..].iter().map(|f| parse_f64(f, k + 1)).collect::<Result<Vec<_>>>()?);
    }
    Ok(TrajectoryTable { names, grid, samples })
}

/// `key=value` lines for the counters of a run followed by `extra` pairs.
pub fn stats_text(stats: &SimStats, extra: &[(String, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "total_steps={}", stats.total_steps);
    let _ = writeln!(s, "events={}", stats.events);
    let _ = writeln!(s, "zero_crossings={}", stats.zero_crossings);
    let _ = writeln!(s, "timed_events={}", stats.timed_events);
    let _ = writeln!(s, "requantizations={}", stats.requantizations);
    let _ = writeln!(s, "max_band_ratio={}", fmt_f64(stats.max_band_ratio));
    let _ = writeln!(s, "wall_ms={}", fmt_f64(stats.wall_ms));
    for (i, n) in stats.steps.iter().enumerate() {
        let _ = writeln!(s, "steps[{i}]={n}");
    }
    for (k, v) in extra {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

/// Flat `key=value` text; `#` starts a comment line.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", k + 1)))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Reference file: a trajectory CSV, or `seed,spikes` rows for spike counts.
pub fn reference_text(r: &ReferenceRun, names: &[String]) -> String {
    if r.spike_counts.is_empty() {
        return trajectory_csv(names, &r.grid, &r.samples);
    }
    let mut s = String::from("seed,spikes\n");
    for (k, c) in r.spike_counts.iter().enumerate() {
        let seed = r.seeds.get(k).copied().unwrap_or(k as u64);
        let _ = writeln!(s, "{seed},{c}");
    }
    s
}

pub fn parse_reference(text: &str) -> Result<ReferenceRun> {
    if text.trim_start().starts_with("seed,spikes") {
        let mut counts = Vec::new();
        let mut seeds = Vec::new();
        for (k, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", k + 1));
            let (s, c) = line.split_once(',').ok_or_else(|| bad("expected seed,spikes"))?;
            seeds.push(s.trim().parse().map_err(|_| bad("bad seed"))?);
            counts.push(c.trim().parse().map_err(|_| bad("bad count"))?);
        }
        return Ok(ReferenceRun { spike_counts: counts, seeds, ..ReferenceRun::default() });
    }
    let t = parse_trajectory_csv(text)?;
    Ok(ReferenceRun { grid: t.grid, samples: t.samples, ..ReferenceRun::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stats_keys() {
        let st = SimStats { steps: vec![3, 4], total_steps: 7, events: 1, wall_ms: 1.5, ..SimStats::default() };
        let text = stats_text(&st, &[("mae".into(), "1e-3".into())]);
        let kv = parse_key_values(&text).unwrap();
        assert_eq!(kv["total_steps"], "7");
        assert_eq!(kv["events"], "1");
        assert_eq!(kv["steps[1]"], "4");
        assert_eq!(kv["mae"], "1e-3");
        assert_eq!(kv["wall_ms"].parse::<f64>().unwrap(), 1.5);
    }

    #[test]
    fn key_values_reject_garbage() {
        assert!(parse_key_values("a=1\n# note\n\nb = 2\n").is_ok());
        assert!(parse_key_values("novalue\n").is_err());
    }

    #[test]
    fn spike_reference_round_trip() {
        let r = ReferenceRun { spike_counts: vec![12, 0, 7], seeds: vec![3, 4, 5], ..ReferenceRun::default() };
        let text = reference_text(&r, &[]);
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("\n4,0\n"));
        assert_eq!(parse_reference(&text).unwrap(), r);
    }

    #[test]
    fn bad_csv() {
        assert!(parse_trajectory_csv("").is_err());
        assert!(parse_trajectory_csv("t,x\n0,1\n").is_err());
        assert!(parse_trajectory_csv("time,x\n0,1,2\n").is_err());
        assert!(parse_trajectory_csv("time,x\n0,abc\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            rows in proptest::collection::vec((any::<f64>().prop_filter("finite", |v| v.is_finite()),
                proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3)), 0..20)
        ) {
            let names: Vec<String> = (0..3).map(|i| format!("x{i}")).collect();
            let grid: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let samples: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
            let text = trajectory_csv(&names, &grid, &samples);
            let back = parse_trajectory_csv(&text).unwrap();
            prop_assert_eq!(back.names, names);
            prop_assert_eq!(back.grid, grid);
            prop_assert_eq!(back.samples, samples);
        }
    }
}
