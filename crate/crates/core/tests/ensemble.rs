use std::f64::consts::PI;

use augfid_core::channels::{EnsembleOptions, ProcessMatrix};
use augfid_core::distributions::{BlochDistribution, Family};
use augfid_core::fidelity::{two_qubit_uniform_local, uniform_avg, TensorQuadrature};
use augfid_core::montecarlo::{
    mc_fidelity, two_qubit_ensemble, two_qubit_heatmap, Estimator, HeatmapConfig, HeatmapPlan,
};
use augfid_core::rng::RngStream;

fn config(n_proposals: usize, estimator: Estimator) -> HeatmapConfig {
    HeatmapConfig {
        chi0000: 0.985,
        n_proposals,
        family: Family::PolarCap,
        grid1: vec![PI, 1.0],
        grid2: vec![PI, 0.3],
        n_mc: 4000,
        seed: 17,
        estimator,
        ensemble: EnsembleOptions::default(),
    }
}

#[test]
fn acceptance_rate_band() {
    let e = two_qubit_ensemble(0.985, 6000, 1, &EnsembleOptions::default()).unwrap();
    assert_eq!(e.proposals, 6000);
    assert!((900..=2700).contains(&e.accepted.len()), "{}", e.accepted.len());
    for pm in &e.accepted {
        let r = pm.validate(1e-10);
        assert!(r.min_eigenvalue >= -1e-10 && r.diag_sum_defect <= 1e-10);
    }
}

#[test]
fn heatmap_uniform_cell_matches_local_closed_form() {
    let cfg = config(120, Estimator::MonteCarlo);
    let e = two_qubit_ensemble(cfg.chi0000, cfg.n_proposals, cfg.seed, &cfg.ensemble).unwrap();
    let plan = HeatmapPlan::new(cfg.clone(), e).unwrap();
    assert!(!plan.channels().is_empty());
    for (ch, chi) in plan.channels().iter().enumerate() {
        let s = plan.cell_value(0, ch).unwrap();
        let exact = two_qubit_uniform_local(chi).unwrap();
        assert!((s.mean - exact).abs() < 5.0 * s.std_error + 1e-15);
    }
    let grid = two_qubit_heatmap(&cfg).unwrap();
    let (lo, hi) = grid.cell(0, 0);
    assert!(lo < 0.99 && lo <= hi);
    assert!(grid.min_surface.iter().zip(&grid.max_surface).all(|(a, b)| a <= b));
    assert_eq!(grid, two_qubit_heatmap(&cfg).unwrap());
}

#[test]
fn quadrature_estimator_agrees_with_mc() {
    let mc = two_qubit_heatmap(&config(40, Estimator::MonteCarlo)).unwrap();
    let q = two_qubit_heatmap(&config(40, Estimator::Quadrature)).unwrap();
    assert_eq!(mc.ensemble_size, q.ensemble_size);
    for (a, b) in mc.min_surface.iter().zip(&q.min_surface) {
        assert!((a - b).abs() < 2e-3);
    }
    // the uniform cell is exact under the quadrature
    let e = two_qubit_ensemble(0.985, 40, 17, &EnsembleOptions::default()).unwrap();
    let lo = e.accepted.iter().map(|c| two_qubit_uniform_local(c).unwrap()).fold(f64::INFINITY, f64::min);
    assert!((q.cell(0, 0).0 - lo).abs() < 1e-12);
}

#[test]
fn single_channel_heatmap_is_degenerate() {
    let grid = two_qubit_heatmap(&config(1, Estimator::Quadrature)).unwrap();
    assert!(grid.ensemble_size <= 1);
    if grid.ensemble_size == 1 {
        assert_eq!(grid.min_surface, grid.max_surface);
    }
}

#[test]
fn two_qubit_mc_matches_local_uniform() {
    let e = two_qubit_ensemble(0.985, 60, 3, &EnsembleOptions::default()).unwrap();
    let u = BlochDistribution::uniform();
    for (i, chi) in e.accepted.iter().take(5).enumerate() {
        let s = mc_fidelity(chi, &[u, u], 100_000, &RngStream::new(9, i as u64)).unwrap();
        let exact = two_qubit_uniform_local(chi).unwrap();
        assert!((s.mean - exact).abs() < 5.0 * s.std_error);
        let q = TensorQuadrature::default().two_qubit_stats(chi, [&u, &u]).unwrap();
        assert!((q.mean - exact).abs() < 1e-12);
    }
    let depol = ProcessMatrix::depolarizing(2, 0.985).unwrap();
    assert!((uniform_avg(&depol) - 0.988).abs() < 1e-12);
}
