//! Error metrics against reference runs.

use crate::error::{Error, Result};

/// Grid samples of a reference solution, plus spike counts for spiking models.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReferenceRun {
    pub grid: Vec<f64>,
    /// `samples[k][i]` is `x_i(grid[k])`.
    pub samples: Vec<Vec<f64>>,
    /// One total output-spike count per run.
    pub spike_counts: Vec<u64>,
    /// Seed of each entry of `spike_counts`; empty means `0, 1, ...`.
    pub seeds: Vec<u64>,
}

impl ReferenceRun {
    /// Spike count recorded for `seed`.
    pub fn count_for_seed(&self, seed: u64) -> Option<u64> {
        if self.seeds.is_empty() {
            return self.spike_counts.get(usize::try_from(seed).ok()?).copied();
        }
        self.seeds.iter().position(|&s| s == seed).map(|k| self.spike_counts[k])
    }
}

/// Mean over variables of the mean absolute deviation over grid points.
pub fn mae(sim: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    if sim.len() != reference.len() || sim.is_empty() {
        return Err(Error::GridMismatch);
    }
    let dim = reference[0].len();
    if dim == 0 || sim.iter().chain(reference).any(|row| row.len() != dim) {
        return Err(Error::GridMismatch);
    }
    let mut per_var = vec![0.0; dim];
    for (a, b) in sim.iter().zip(reference) {
        for i in 0..dim {
            per_var[i] += (a[i] - b[i]).abs();
        }
    }
    let k = sim.len() as f64;
    Ok(per_var.iter().map(|s| s / k).sum::<f64>() / dim as f64)
}

/// [`mae`] that also checks the sample times agree.
pub fn mae_on_grid(grid: &[f64], sim: &[Vec<f64>], reference: &ReferenceRun) -> Result<f64> {
    let same = grid.len() == reference.grid.len()
        && grid.iter().zip(&reference.grid).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if !same {
        return Err(Error::GridMismatch);
    }
    mae(sim, &reference.samples)
}

/// Mean relative error of per-run spike counts.
pub fn mre_spikes(sim_counts: &[u64], ref_counts: &[u64]) -> Result<f64> {
    if sim_counts.len() != ref_counts.len() || ref_counts.is_empty() {
        return Err(Error::GridMismatch);
    }
    if let Some(k) = ref_counts.iter().position(|&c| c == 0) {
        return Err(Error::ZeroReference(k));
    }
    let sum: f64 = sim_counts
        .iter()
        .zip(ref_counts)
        .map(|(&s, &r)| (r as f64 - s as f64).abs() / r as f64)
        .sum();
    Ok(sum / ref_counts.len() as f64)
}
