//! Parallel versions of the core estimators.
//!
//! Work is split along the same boundaries the serial core uses (Monte-Carlo
//! chunks, ensemble proposals, heatmap cells), each piece draws from its own
//! derived stream, and results are collected in index order. Output is
//! therefore identical for any worker count.

use augfid_core::channels::{EnsembleOptions, ProcessMatrix};
use augfid_core::distributions::{BlochDistribution, BlochVector};
use augfid_core::fidelity::FidelityStats;
use augfid_core::montecarlo::{ensemble_proposal, Ensemble, HeatmapConfig, HeatmapGrid, HeatmapPlan, McJob, MC_CHUNK};
use augfid_core::rng::RngStream;
use rayon::prelude::*;

use crate::error::CliError;

/// Runs `f` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Parse("--workers must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn mc_fidelity(
    chi: &ProcessMatrix,
    dists: &[BlochDistribution],
    n_samples: u64,
    rng: &RngStream,
) -> augfid_core::Result<FidelityStats> {
    let job = McJob::new(chi, dists, n_samples, rng)?;
    let parts: Vec<_> = (0..job.n_chunks()).into_par_iter().map(|i| job.run_chunk(i)).collect();
    McJob::stats(&McJob::merge(&parts))
}

pub fn two_qubit_ensemble(
    chi0000: f64,
    n_proposals: usize,
    seed: u64,
    opts: &EnsembleOptions,
) -> augfid_core::Result<Ensemble> {
    let drawn: Vec<Option<ProcessMatrix>> = (0..n_proposals as u64)
        .into_par_iter()
        .map(|i| ensemble_proposal(chi0000, seed, i, opts))
        .collect::<augfid_core::Result<_>>()?;
    Ok(Ensemble { accepted: drawn.into_iter().flatten().collect(), proposals: n_proposals })
}

pub fn two_qubit_heatmap(config: &HeatmapConfig) -> augfid_core::Result<HeatmapGrid> {
    if !(config.chi0000 > 0.0 && config.chi0000 <= 1.0) {
        return Err(augfid_core::Error::OutOfRange { what: "chi0000", value: config.chi0000 });
    }
    let ensemble = two_qubit_ensemble(config.chi0000, config.n_proposals, config.seed, &config.ensemble)?;
    let plan = HeatmapPlan::new(config.clone(), ensemble)?;
    let cells = (0..plan.n_cells())
        .into_par_iter()
        .map(|c| plan.cell_extremes(c))
        .collect::<augfid_core::Result<Vec<_>>>()?;
    Ok(plan.assemble(&cells))
}

/// `n` states from `dist`; chunk `i` of [`MC_CHUNK`] states uses stream `i`
/// derived from `(seed, 0)`.
pub fn sample_states(dist: &BlochDistribution, n: u64, seed: u64) -> Vec<BlochVector> {
    let base = RngStream::new(seed, 0);
    let chunks = n.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<BlochVector>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = base.derive(&[i]);
            let len = MC_CHUNK.min(n - i * MC_CHUNK);
            (0..len).map(|_| dist.sample(&mut rng)).collect()
        })
        .collect();
    parts.concat()
}
