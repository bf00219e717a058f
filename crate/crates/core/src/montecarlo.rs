//! Seeded Monte-Carlo estimates and the curve/heatmap generators built on
//! the closed forms.
//!
//! Monte-Carlo work is split into fixed chunks, each with its own stream
//! derived from the caller's stream, and the chunk moments are merged in
//! chunk order. Results therefore do not depend on how chunks are scheduled.

use alloc::vec::Vec;

use libm::sqrt;

use crate::channels::{
    extremal_restricted, random_two_qubit_chi, EnsembleOptions, PauliChannel, ProcessMatrix, Proposal, Sense,
};
use crate::distributions::{BlochDistribution, BlochVector, DistKind, Family, Rotation};
use crate::fidelity::{
    analytic_mean, uniform_avg, variance_polar_cap, variance_quadrature_oracle, FidelityForm, FidelityStats,
    Provenance, TensorQuadrature,
};
use crate::rng::RngStream;
use crate::stats::Moments;
use crate::{Error, Result};

/// Samples per Monte-Carlo chunk.
pub const MC_CHUNK: u64 = 1 << 16;

/// Smallest accepted Monte-Carlo sample count.
pub const MIN_SAMPLES: u64 = 100;

const ENSEMBLE_TAG: u64 = 0x656e_7365_6d62_6c65;
const HEATMAP_TAG: u64 = 0x6865_6174_6d61_7000;

/// A Monte-Carlo estimate of the fidelity for product states, one
/// distribution per qubit.
#[derive(Debug, Clone)]
pub struct McJob {
    form: FidelityForm,
    dists: Vec<BlochDistribution>,
    n_samples: u64,
    base: RngStream,
}

impl McJob {
    pub fn new(chi: &ProcessMatrix, dists: &[BlochDistribution], n_samples: u64, rng: &RngStream) -> Result<Self> {
        if dists.len() != chi.n_qubits() {
            return Err(Error::DimensionMismatch { expected: chi.n_qubits(), found: dists.len() });
        }
        if n_samples < MIN_SAMPLES {
            return Err(Error::OutOfRange { what: "sample count", value: n_samples as f64 });
        }
        Ok(Self { form: FidelityForm::new(chi), dists: dists.to_vec(), n_samples, base: rng.clone() })
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn n_chunks(&self) -> u64 {
        self.n_samples.div_ceil(MC_CHUNK)
    }

    /// Moments of chunk `i`, drawn from the stream derived with index `i`.
    pub fn run_chunk(&self, i: u64) -> Moments {
        let start = i * MC_CHUNK;
        let n = MC_CHUNK.min(self.n_samples.saturating_sub(start));
        let mut rng = self.base.derive(&[i]);
        let mut m = Moments::new();
        let mut states = [BlochVector::PLUS_Z; 2];
        let k = self.dists.len();
        for _ in 0..n {
            for (s, d) in states.iter_mut().zip(&self.dists) {
                *s = d.sample(&mut rng);
            }
            m.push(self.form.eval(&states[..k]));
        }
        m
    }

    /// Merges chunk moments given in chunk order.
    pub fn merge(parts: &[Moments]) -> Moments {
        parts.iter().fold(Moments::new(), |acc, m| acc.merge(m))
    }

    pub fn stats(moments: &Moments) -> Result<FidelityStats> {
        FidelityStats::new(moments.mean(), moments.variance(), moments.std_error(), Provenance::MonteCarlo)
    }

    /// All chunks, serially.
    pub fn run_moments(&self) -> Moments {
        let parts: Vec<Moments> = (0..self.n_chunks()).map(|i| self.run_chunk(i)).collect();
        Self::merge(&parts)
    }

    pub fn run(&self) -> Result<FidelityStats> {
        Self::stats(&self.run_moments())
    }
}

/// Sample mean, variance and standard error of the fidelity over
/// `n_samples` product states. Deterministic in `rng`'s seed and stream id.
pub fn mc_fidelity(
    chi: &ProcessMatrix,
    dists: &[BlochDistribution],
    n_samples: u64,
    rng: &RngStream,
) -> Result<FidelityStats> {
    McJob::new(chi, dists, n_samples, rng)?.run()
}

/// `chi` turned so that its average about `center` equals the average of the
/// input about `+ẑ`.
pub fn channel_for_center(chi: &ProcessMatrix, center: &BlochVector) -> Result<ProcessMatrix> {
    let r = Rotation::z_to(&center.checked_unit()?);
    if r.is_identity() {
        return Ok(chi.clone());
    }
    chi.conjugate_rotation(&r.su2().adjoint())
}

/// `true` if `param` is the uniform-distribution end of the family.
pub fn is_uniform_limit(family: Family, param: f64) -> bool {
    match family {
        Family::PolarCap => param >= core::f64::consts::PI - 1e-12,
        Family::Vmf => param <= 1e-6,
    }
}

fn check_grid(family: Family, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::OutOfRange { what: "grid length", value: 0.0 });
    }
    for &p in grid {
        family.distribution(p, BlochVector::PLUS_Z)?;
    }
    Ok(())
}

fn check_chi00(chi00: f64) -> Result<()> {
    if !(chi00 > 0.0 && chi00 <= 1.0) {
        return Err(Error::OutOfRange { what: "chi00", value: chi00 });
    }
    Ok(())
}

/// Extreme augmented fidelities at fixed `χ00` along a family's parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub family: Family,
    pub grid: Vec<f64>,
    pub min_curve: Vec<f64>,
    pub max_curve: Vec<f64>,
    /// Standard deviations of the fidelity over the distribution.
    pub min_err: Vec<f64>,
    pub max_err: Vec<f64>,
    pub pauli_min_curve: Vec<f64>,
    pub pauli_max_curve: Vec<f64>,
    pub depolarizing_level: f64,
}

impl EnvelopeResult {
    /// `min ≤ pauli_min ≤ pauli_max ≤ max` at every grid point.
    pub fn is_nested(&self, tol: f64) -> bool {
        (0..self.grid.len()).all(|i| {
            self.min_curve[i] <= self.pauli_min_curve[i] + tol
                && self.pauli_min_curve[i] <= self.pauli_max_curve[i] + tol
                && self.pauli_max_curve[i] <= self.max_curve[i] + tol
        })
    }

    /// Whether all curves meet the depolarizing level at the uniform-limit
    /// grid points; `None` when the grid has no such point.
    pub fn meets_uniform_limit(&self, tol: f64) -> Option<bool> {
        let idx: Vec<usize> = (0..self.grid.len()).filter(|&i| is_uniform_limit(self.family, self.grid[i])).collect();
        if idx.is_empty() {
            return None;
        }
        Some(idx.iter().all(|&i| {
            [self.min_curve[i], self.max_curve[i], self.pauli_min_curve[i], self.pauli_max_curve[i]]
                .iter()
                .all(|v| (v - self.depolarizing_level).abs() <= tol)
        }))
    }
}

/// Envelope of restricted and Pauli channels with the given `χ00`.
///
/// The restricted extremes are the `+ẑ` extremal channels turned to
/// `center`; their error bars are the quadrature standard deviations. The
/// Pauli curves are the pointwise extremes over the three single-axis Pauli
/// channels, which bound every Pauli channel since the average is linear
/// in the Pauli rates.
pub fn envelope_curve(chi00: f64, family: Family, grid: &[f64], center: &BlochVector) -> Result<EnvelopeResult> {
    check_chi00(chi00)?;
    check_grid(family, grid)?;
    let center = center.checked_unit()?;
    let lo = channel_for_center(&extremal_restricted(chi00, Sense::Min)?.embed(), &center)?;
    let hi = channel_for_center(&extremal_restricted(chi00, Sense::Max)?.embed(), &center)?;
    let q = 1.0 - chi00;
    let vertices = [
        PauliChannel::new([chi00, q, 0.0, 0.0])?.to_process(),
        PauliChannel::new([chi00, 0.0, q, 0.0])?.to_process(),
        PauliChannel::new([chi00, 0.0, 0.0, q])?.to_process(),
    ];

    let n = grid.len();
    let mut out = EnvelopeResult {
        family,
        grid: grid.to_vec(),
        min_curve: Vec::with_capacity(n),
        max_curve: Vec::with_capacity(n),
        min_err: Vec::with_capacity(n),
        max_err: Vec::with_capacity(n),
        pauli_min_curve: Vec::with_capacity(n),
        pauli_max_curve: Vec::with_capacity(n),
        depolarizing_level: (2.0 * chi00 + 1.0) / 3.0,
    };
    for &p in grid {
        let dist = family.distribution(p, center)?;
        out.min_curve.push(analytic_mean(&lo, &dist)?);
        out.max_curve.push(analytic_mean(&hi, &dist)?);
        out.min_err.push(sqrt(distribution_variance(&lo, &dist)?));
        out.max_err.push(sqrt(distribution_variance(&hi, &dist)?));
        let mut pmin = f64::INFINITY;
        let mut pmax = f64::NEG_INFINITY;
        for v in &vertices {
            let f = analytic_mean(v, &dist)?;
            pmin = pmin.min(f);
            pmax = pmax.max(f);
        }
        out.pauli_min_curve.push(pmin);
        out.pauli_max_curve.push(pmax);
    }
    Ok(out)
}

/// Quadrature variance of the single-qubit fidelity under `dist`.
pub fn distribution_variance(chi: &ProcessMatrix, dist: &BlochDistribution) -> Result<f64> {
    match dist.kind() {
        DistKind::Point => Ok(0.0),
        DistKind::PolarCap { theta_max } => {
            let z = crate::fidelity::rotate_center_to_z(chi, &dist.center())?;
            Ok(variance_polar_cap(&z, theta_max)?.value)
        }
        _ => Ok(variance_quadrature_oracle(chi, dist)?.variance),
    }
}

/// Fidelity curves of Pauli channels for several distribution centers.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasTable {
    pub family: Family,
    pub grid: Vec<f64>,
    pub centers: Vec<BlochVector>,
    /// `curves[channel][center][grid point]`.
    pub curves: Vec<Vec<Vec<f64>>>,
    /// Uniform-average (depolarizing-equivalent) level of each channel.
    pub depolarizing_levels: Vec<f64>,
}

pub fn bias_curves(
    channels: &[PauliChannel],
    centers: &[BlochVector],
    family: Family,
    grid: &[f64],
) -> Result<BiasTable> {
    check_grid(family, grid)?;
    let centers: Vec<BlochVector> = centers.iter().map(|c| c.checked_unit()).collect::<Result<_>>()?;
    let mut curves = Vec::with_capacity(channels.len());
    let mut levels = Vec::with_capacity(channels.len());
    for ch in channels {
        let chi = ch.to_process();
        levels.push(uniform_avg(&chi));
        let mut per_center = Vec::with_capacity(centers.len());
        for c in &centers {
            let row = grid
                .iter()
                .map(|&p| analytic_mean(&chi, &family.distribution(p, *c)?))
                .collect::<Result<Vec<f64>>>()?;
            per_center.push(row);
        }
        curves.push(per_center);
    }
    Ok(BiasTable { family, grid: grid.to_vec(), centers, curves, depolarizing_levels: levels })
}

/// The random two-qubit ensemble with its acceptance count.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub accepted: Vec<ProcessMatrix>,
    pub proposals: usize,
}

/// Stream of proposal `i` of the ensemble for `seed`.
pub fn proposal_stream(seed: u64, i: u64) -> RngStream {
    RngStream::new(seed, 0).derive(&[ENSEMBLE_TAG, i])
}

/// One proposal of the ensemble; [`Ensemble`] keeps the accepted ones in index order.
pub fn ensemble_proposal(chi0000: f64, seed: u64, i: u64, opts: &EnsembleOptions) -> Result<Option<ProcessMatrix>> {
    let mut rng = proposal_stream(seed, i);
    Ok(match random_two_qubit_chi(chi0000, &mut rng, opts)? {
        Proposal::Accepted(pm, _) => Some(pm),
        Proposal::Rejected { .. } => None,
    })
}

pub fn two_qubit_ensemble(chi0000: f64, n_proposals: usize, seed: u64, opts: &EnsembleOptions) -> Result<Ensemble> {
    check_chi00(chi0000)?;
    let mut accepted = Vec::new();
    for i in 0..n_proposals as u64 {
        if let Some(pm) = ensemble_proposal(chi0000, seed, i, opts)? {
            accepted.push(pm);
        }
    }
    Ok(Ensemble { accepted, proposals: n_proposals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    MonteCarlo,
    /// Product Gauss quadrature, see [`TensorQuadrature`].
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapConfig {
    pub chi0000: f64,
    pub n_proposals: usize,
    pub family: Family,
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    pub n_mc: u64,
    pub seed: u64,
    pub estimator: Estimator,
    pub ensemble: EnsembleOptions,
}

/// Cellwise extremes of the two-qubit fidelity over the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub family: Family,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major over `(axis1, axis2)`.
    pub min_surface: Vec<f64>,
    pub max_surface: Vec<f64>,
    pub ensemble_size: usize,
    pub proposals: usize,
    pub seed: u64,
}

impl HeatmapGrid {
    pub fn cell(&self, i1: usize, i2: usize) -> (f64, f64) {
        let k = i1 * self.axis2.len() + i2;
        (self.min_surface[k], self.max_surface[k])
    }
}

/// A heatmap split into independent cells.
#[derive(Debug, Clone)]
pub struct HeatmapPlan {
    config: HeatmapConfig,
    channels: Vec<ProcessMatrix>,
}

impl HeatmapPlan {
    /// Validates the configuration and takes an already generated ensemble.
    pub fn new(config: HeatmapConfig, ensemble: Ensemble) -> Result<Self> {
        check_chi00(config.chi0000)?;
        check_grid(config.family, &config.grid1)?;
        check_grid(config.family, &config.grid2)?;
        if config.n_proposals == 0 {
            return Err(Error::OutOfRange { what: "proposal count", value: 0.0 });
        }
        if config.estimator == Estimator::MonteCarlo && config.n_mc < MIN_SAMPLES {
            return Err(Error::OutOfRange { what: "sample count", value: config.n_mc as f64 });
        }
        Ok(Self { config, channels: ensemble.accepted })
    }

    pub fn config(&self) -> &HeatmapConfig {
        &self.config
    }

    pub fn channels(&self) -> &[ProcessMatrix] {
        &self.channels
    }

    pub fn n_cells(&self) -> usize {
        self.config.grid1.len() * self.config.grid2.len()
    }

    fn cell_dists(&self, cell: usize) -> Result<[BlochDistribution; 2]> {
        let n2 = self.config.grid2.len();
        let f = self.config.family;
        Ok([
            f.distribution(self.config.grid1[cell / n2], BlochVector::PLUS_Z)?,
            f.distribution(self.config.grid2[cell % n2], BlochVector::PLUS_Z)?,
        ])
    }

    /// Fidelity estimate of channel `ch` in cell `cell` (row-major index).
    pub fn cell_value(&self, cell: usize, ch: usize) -> Result<FidelityStats> {
        let dists = self.cell_dists(cell)?;
        let chi = &self.channels[ch];
        match self.config.estimator {
            Estimator::MonteCarlo => {
                let rng = RngStream::new(self.config.seed, 0).derive(&[HEATMAP_TAG, cell as u64, ch as u64]);
                mc_fidelity(chi, &dists, self.config.n_mc, &rng)
            }
            Estimator::Quadrature => TensorQuadrature::default().two_qubit_stats(chi, [&dists[0], &dists[1]]),
        }
    }

    /// `(min, max)` over the ensemble in one cell; `NaN` for an empty ensemble.
    pub fn cell_extremes(&self, cell: usize) -> Result<(f64, f64)> {
        let mut lo = f64::NAN;
        let mut hi = f64::NAN;
        for ch in 0..self.channels.len() {
            let m = self.cell_value(cell, ch)?.mean;
            lo = if lo.is_nan() { m } else { lo.min(m) };
            hi = if hi.is_nan() { m } else { hi.max(m) };
        }
        Ok((lo, hi))
    }

    /// Assembles per-cell extremes given in row-major cell order.
    pub fn assemble(&self, cells: &[(f64, f64)]) -> HeatmapGrid {
        HeatmapGrid {
            family: self.config.family,
            axis1: self.config.grid1.clone(),
            axis2: self.config.grid2.clone(),
            min_surface: cells.iter().map(|c| c.0).collect(),
            max_surface: cells.iter().map(|c| c.1).collect(),
            ensemble_size: self.channels.len(),
            proposals: self.config.n_proposals,
            seed: self.config.seed,
        }
    }
}

/// Generates the ensemble and evaluates every cell serially.
pub fn two_qubit_heatmap(config: &HeatmapConfig) -> Result<HeatmapGrid> {
    let ensemble = two_qubit_ensemble(config.chi0000, config.n_proposals, config.seed, &config.ensemble)?;
    let plan = HeatmapPlan::new(config.clone(), ensemble)?;
    let cells = (0..plan.n_cells()).map(|c| plan.cell_extremes(c)).collect::<Result<Vec<_>>>()?;
    Ok(plan.assemble(&cells))
}
