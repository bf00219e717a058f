//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use augfid::drivers;
use augfid_core::channels::{
    extremal_restricted, noise_bias, random_cptp, Axis, EnsembleOptions, PauliChannel, ProcessMatrix,
    RestrictedChi, Sense,
};
use augfid_core::distributions::{BlochDistribution, BlochVector, Family};
use augfid_core::fidelity::{
    analytic_mean, single_state_fidelity, two_qubit_uniform_local, uniform_avg,
    variance_polar_cap, variance_quadrature_oracle, variance_vmf,
};
use augfid_core::montecarlo::{bias_curves, envelope_curve, is_uniform_limit, Estimator, HeatmapConfig};
use augfid_core::rng::RngStream;
use augfid_core::stats::{ks_pvalue, ks_statistic};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

const CHI00: f64 = 0.985;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pc1() -> PauliChannel {
    PauliChannel::new([0.985, 0.012, 0.002, 0.001]).unwrap()
}

fn pc2() -> PauliChannel {
    PauliChannel::new([0.985, 0.010, 0.004, 0.001]).unwrap()
}

fn uniform_baseline() -> Verdict {
    let one = uniform_avg(&ProcessMatrix::depolarizing(1, CHI00).unwrap());
    let two = uniform_avg(&ProcessMatrix::depolarizing(2, CHI00).unwrap());
    let (e1, e2) = ((one - 0.99).abs(), (two - 0.988).abs());
    check(e1 <= 1e-12 && e2 <= 1e-12, format!("n=1 {one:.15} (err {e1:.1e}), n=2 {two:.15} (err {e2:.1e})"))
}

fn limit_recovery() -> Verdict {
    let mut rng = RngStream::new(2, 0);
    let (mut cap_u, mut vmf_u, mut cap_p, mut vmf_p) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut vmf_u_fail = 0;
    for _ in 0..1000 {
        let chi00 = 1.0 - rng.uniform();
        let chi = RestrictedChi::random(chi00, &mut rng).map_err(|e| e.to_string())?.embed();
        let u = uniform_avg(&chi);
        let mut channel_fails = false;
        for c in BlochVector::AXES {
            let f = single_state_fidelity(&chi, &c).unwrap();
            let d = |fam: Family, p: f64| analytic_mean(&chi, &fam.distribution(p, c).unwrap()).unwrap();
            cap_u = cap_u.max((d(Family::PolarCap, PI) - u).abs());
            let dv = (d(Family::Vmf, 1e-6) - u).abs();
            channel_fails |= dv > 1e-8;
            vmf_u = vmf_u.max(dv);
            cap_p = cap_p.max((d(Family::PolarCap, 1e-6) - f).abs());
            vmf_p = vmf_p.max((d(Family::Vmf, 1e7) - f).abs());
        }
        vmf_u_fail += channel_fails as usize;
    }
    check(
        cap_u <= 1e-12 && vmf_u <= 1e-8 && cap_p <= 1e-6 && vmf_p <= 1e-6,
        format!(
            "max |Θ=π - uniform| {cap_u:.1e} (tol 1e-12), max |κ=1e-6 - uniform| {vmf_u:.1e} (tol 1e-8, \
             {vmf_u_fail}/1000 channels over), max |Θ=1e-6 - point| {cap_p:.1e}, max |κ=1e7 - point| {vmf_p:.1e} (tol 1e-6)"
        ),
    )
}

fn envelope_endpoints() -> Verdict {
    let lo = (2.0 * CHI00.sqrt() - 1.0).powi(2);
    let mut notes = Vec::new();
    let mut ok = true;
    for (family, point) in [(Family::PolarCap, 1e-8), (Family::Vmf, 1e13)] {
        let e = envelope_curve(CHI00, family, &[point], &BlochVector::PLUS_Z).map_err(|e| e.to_string())?;
        let errs = [
            ((e.max_curve[0] - 1.0).abs(), 1e-9),
            ((e.min_curve[0] - lo).abs(), 1e-9),
            ((e.pauli_min_curve[0] - CHI00).abs(), 1e-12),
            ((e.pauli_max_curve[0] - 1.0).abs(), 1e-12),
        ];
        ok &= errs.iter().all(|(e, t)| e <= t);
        let grid = envelope_curve(CHI00, family, &family.default_grid(50), &BlochVector::PLUS_Z).unwrap();
        let nested = grid.is_nested(1e-10);
        ok &= nested;
        notes.push(format!(
            "{}: point max {:.12}, min {:.12}, pauli {:.12}/{:.12}, nested on 50 points {nested}",
            family.name(),
            e.max_curve[0],
            e.min_curve[0],
            e.pauli_min_curve[0],
            e.pauli_max_curve[0]
        ));
    }
    check(ok, format!("(2√0.985-1)² = {lo:.12}; {}", notes.join("; ")))
}

fn depolarizing_flatness() -> Verdict {
    let chi = ProcessMatrix::depolarizing(1, CHI00).unwrap();
    let mut worst = 0.0f64;
    for family in [Family::PolarCap, Family::Vmf] {
        for p in family.default_grid(50) {
            for c in BlochVector::AXES {
                let f = analytic_mean(&chi, &family.distribution(p, c).unwrap()).unwrap();
                worst = worst.max((f - 0.99).abs());
            }
        }
    }
    check(worst < 1e-12, format!("max |F - 0.99| = {worst:.1e} over both default grids and 6 centers"))
}

fn oracle_triangle() -> Verdict {
    let general = random_cptp(1, 3, &mut RngStream::new(5, 0)).unwrap();
    let tilted = BlochVector::normalized(0.3, -0.5, 0.8).unwrap();
    let channels = [
        ("ext-min", extremal_restricted(CHI00, Sense::Min).unwrap().embed(), BlochVector::PLUS_Z),
        ("pc1", pc1().to_process(), BlochVector::PLUS_X),
        ("random", general, tilted),
    ];
    let grids = [(Family::PolarCap, [0.3, 0.8, 1.5, 2.5, PI]), (Family::Vmf, [0.1, 1.0, 5.0, 20.0, 100.0])];
    let (mut worst_rel, mut worst_z) = (0.0f64, 0.0f64);
    let mut k = 0u64;
    for (_, chi, center) in &channels {
        for (family, params) in &grids {
            for &p in params {
                let d = family.distribution(p, *center).unwrap();
                let a = analytic_mean(chi, &d).unwrap();
                let q = variance_quadrature_oracle(chi, &d).unwrap().mean;
                let mc = drivers::mc_fidelity(chi, &[d], 1_000_000, &RngStream::new(20_240, k)).unwrap();
                k += 1;
                worst_rel = worst_rel.max((a - q).abs() / a.abs());
                let z = (mc.mean - a).abs().max((mc.mean - q).abs()) / mc.std_error;
                worst_z = worst_z.max(z);
            }
        }
    }
    check(
        worst_rel <= 1e-8 && worst_z <= 5.0,
        format!("30 cases: max analytic/quadrature rel. diff {worst_rel:.1e}, max MC deviation {worst_z:.2} SE"),
    )
}

fn variance_sanity() -> Verdict {
    let mut zero = 0.0f64;
    for chi in [ProcessMatrix::identity(1).unwrap(), ProcessMatrix::depolarizing(1, CHI00).unwrap()] {
        for k in Family::Vmf.default_grid(50) {
            let d = BlochDistribution::von_mises_fisher(k).unwrap();
            zero = zero.max(variance_vmf(&chi, k).unwrap().abs());
            zero = zero.max(variance_quadrature_oracle(&chi, &d).unwrap().variance.abs());
        }
        for t in Family::PolarCap.default_grid(50) {
            zero = zero.max(variance_polar_cap(&chi, t).unwrap().value.abs());
        }
    }
    let mut rng = RngStream::new(6, 0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let chi = random_cptp(1, 1 + i % 4, &mut rng).unwrap();
        let kappa = rng.uniform_in(0.1, 50.0);
        let oracle = variance_quadrature_oracle(&chi, &BlochDistribution::von_mises_fisher(kappa).unwrap()).unwrap();
        worst = worst.max((variance_vmf(&chi, kappa).unwrap() - oracle.variance).abs() / oracle.variance);
    }
    let id = ProcessMatrix::identity(1).unwrap();
    let defect = variance_polar_cap(&id, 1.0).unwrap().residual;
    // envelope error bars are oracle standard deviations
    let env = envelope_curve(CHI00, Family::PolarCap, &[1.0], &BlochVector::PLUS_Z).unwrap();
    let lo = extremal_restricted(CHI00, Sense::Min).unwrap().embed();
    let oracle_sd = variance_quadrature_oracle(&lo, &BlochDistribution::polar_cap(1.0).unwrap()).unwrap().variance.sqrt();
    let bar = (env.min_err[0] - oracle_sd).abs();
    check(
        zero <= 1e-12 && worst <= 1e-8 && defect.abs() > 1e-8 && bar <= 1e-15,
        format!(
            "isotropic max |var| {zero:.1e}; vMF closed form vs oracle max rel. diff {worst:.1e} (100 channels); \
             printed cap form on identity {defect:.6} (defect detected); error bar vs oracle {bar:.1e}"
        ),
    )
}

fn noise_bias_discrimination() -> Verdict {
    let (e1, e2) = (noise_bias(&pc1(), Axis::Z).unwrap().eta, noise_bias(&pc2(), Axis::Z).unwrap().eta);
    let eta_ok = (e1 - 1.0 / 14.0).abs() <= f64::EPSILON && e1 == e2;
    let centers = [BlochVector::PLUS_Z, BlochVector::PLUS_X];
    let mut z_diff = 0.0f64;
    let mut min_sep = f64::INFINITY;
    let mut at = (Family::PolarCap, 0.0);
    let mut below = Vec::new();
    for family in [Family::PolarCap, Family::Vmf] {
        let grid = family.default_grid(50);
        let t = bias_curves(&[pc1(), pc2()], &centers, family, &grid).unwrap();
        for (i, &p) in grid.iter().enumerate() {
            z_diff = z_diff.max((t.curves[0][0][i] - t.curves[1][0][i]).abs());
            let in_range = match family {
                Family::PolarCap => p < 2.0,
                Family::Vmf => p > 1.0,
            };
            if in_range {
                let sep = (t.curves[0][1][i] - t.curves[1][1][i]).abs();
                if sep <= 1e-4 {
                    below.push(format!("{}={p:.4}", family.name()));
                }
                if sep < min_sep {
                    min_sep = sep;
                    at = (family, p);
                }
            }
        }
    }
    let p1 = single_state_fidelity(&pc1().to_process(), &BlochVector::PLUS_X).unwrap();
    let p2 = single_state_fidelity(&pc2().to_process(), &BlochVector::PLUS_X).unwrap();
    let point_ok = (p1 - 0.997).abs() <= 1e-12 && (p2 - 0.995).abs() <= 1e-12;
    check(
        eta_ok && z_diff <= 1e-15 && point_ok && below.is_empty(),
        format!(
            "η_Z {e1:.17}/{e2:.17}; ẑ max diff {z_diff:.1e}; +x̂ point {p1:.12} vs {p2:.12}; \
             min +x̂ separation {min_sep:.2e} at {} {:.4}; grid points at or below 1e-4: [{}]",
            at.0.name(),
            at.1,
            below.join(", ")
        ),
    )
}

fn two_qubit_local_uniform() -> Verdict {
    let e = drivers::two_qubit_ensemble(CHI00, 200, 8, &EnsembleOptions::default()).unwrap();
    if e.accepted.len() < 20 {
        return Err(format!("only {} accepted channels", e.accepted.len()));
    }
    let u = BlochDistribution::uniform();
    let full = 0.988;
    let (mut worst_z, mut worst_gap_z) = (0.0f64, 0.0f64);
    let mut sign_checked = 0;
    for (i, chi) in e.accepted.iter().take(20).enumerate() {
        let closed = two_qubit_uniform_local(chi).unwrap();
        let mc = drivers::mc_fidelity(chi, &[u, u], 1_000_000, &RngStream::new(808, i as u64)).unwrap();
        worst_z = worst_z.max((mc.mean - closed).abs() / mc.std_error);
        let w: f64 = [1, 2, 3, 4, 8, 12].iter().map(|&k| chi.entry(k, k).re).sum();
        let gap = (10.0 * w - 4.0 * (1.0 - chi.chi00())) / 45.0;
        worst_gap_z = worst_gap_z.max(((mc.mean - full) - gap).abs() / mc.std_error);
        if gap.abs() > 5.0 * mc.std_error {
            if (mc.mean - full).signum() != gap.signum() {
                return Err(format!("channel {i}: sign of local - full differs from the formula"));
            }
            sign_checked += 1;
        }
    }
    let mut d = vec![0.0; 16];
    d[0] = CHI00;
    d[5] = 1.0 - CHI00;
    let nonlocal = two_qubit_uniform_local(&ProcessMatrix::from_diagonal(2, &d).unwrap()).unwrap();
    let nonlocal_gap = nonlocal - full + 4.0 * (1.0 - CHI00) / 45.0;
    check(
        worst_z <= 5.0 && worst_gap_z <= 5.0 && nonlocal_gap.abs() <= 1e-12,
        format!(
            "20 channels: max MC deviation {worst_z:.2} SE; local - full vs (10W - 4(1-χ0000))/45 max {worst_gap_z:.2} SE; \
             sign confirmed on {sign_checked}; zero local weight gives {nonlocal:.12}"
        ),
    )
}

fn ensemble_and_heatmap() -> Verdict {
    let opts = EnsembleOptions::default();
    let e = drivers::two_qubit_ensemble(CHI00, 6000, 1, &opts).unwrap();
    let n = e.accepted.len();
    let mut psd_ok = true;
    for pm in &e.accepted {
        let r = pm.validate(1e-10);
        psd_ok &= r.min_eigenvalue >= -1e-10 && r.diag_sum_defect <= 1e-10;
    }
    let mut lows = Vec::new();
    let mut heat_ok = true;
    for (family, grid) in [(Family::PolarCap, vec![PI, 1.0]), (Family::Vmf, vec![1e-6, 5.0])] {
        let cfg = HeatmapConfig {
            chi0000: CHI00,
            n_proposals: 6000,
            family,
            grid1: grid.clone(),
            grid2: grid.clone(),
            n_mc: 1000,
            seed: 1,
            estimator: Estimator::MonteCarlo,
            ensemble: opts,
        };
        let h = drivers::two_qubit_heatmap(&cfg).unwrap();
        for (i1, &p1) in h.axis1.iter().enumerate() {
            for (i2, &p2) in h.axis2.iter().enumerate() {
                let (lo, hi) = h.cell(i1, i2);
                heat_ok &= lo <= hi;
                if is_uniform_limit(family, p1) && is_uniform_limit(family, p2) {
                    heat_ok &= lo < 0.99;
                    lows.push(format!("{} {lo:.6}", family.name()));
                }
            }
        }
    }
    check(
        (900..=2700).contains(&n) && psd_ok && heat_ok && lows.len() == 2,
        format!("accepted {n}/6000; PSD and unit trace {psd_ok}; uniform-limit cell minima [{}]", lows.join(", ")),
    )
}

fn sampler_correctness() -> Verdict {
    let center = BlochVector::normalized(-0.2, 0.7, 0.4).unwrap();
    let mut ps = Vec::new();
    let dists = [
        BlochDistribution::polar_cap(0.1).unwrap(),
        BlochDistribution::polar_cap(PI / 2.0).unwrap(),
        BlochDistribution::polar_cap(PI).unwrap(),
        BlochDistribution::von_mises_fisher(0.1).unwrap(),
        BlochDistribution::von_mises_fisher(10.0).unwrap(),
        BlochDistribution::von_mises_fisher(100.0).unwrap(),
    ];
    for (i, d) in dists.iter().enumerate() {
        let d = d.recenter(center).unwrap();
        let t: Vec<f64> = drivers::sample_states(&d, 100_000, 300 + i as u64).iter().map(|v| v.dot(&center)).collect();
        ps.push(ks_pvalue(ks_statistic(&t, |x| d.axis_cdf(x)), t.len()));
    }
    let vmf = BlochDistribution::von_mises_fisher(10.0).unwrap();
    let s = drivers::sample_states(&vmf, 1_000_000, 77);
    let mut m = [0.0; 3];
    for v in &s {
        m.iter_mut().zip(v.to_array()).for_each(|(a, b)| *a += b);
    }
    let r = m.iter().map(|x| x * x).sum::<f64>().sqrt() / s.len() as f64;
    let ps_txt: Vec<String> = ps.iter().map(|p| format!("{p:.3}")).collect();
    check(
        ps.iter().all(|&p| p > 0.01) && (r - 0.9).abs() <= 1e-3,
        format!("KS p-values [{}]; vMF(10) mean resultant {r:.5}", ps_txt.join(", ")),
    )
}

fn reproducibility() -> Verdict {
    let dir = std::env::temp_dir().join(format!("augfid-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let chi = dir.join("pc1.json");
    std::fs::write(&chi, r#"{"pauli": [0.985, 0.012, 0.002, 0.001]}"#).map_err(|e| e.to_string())?;
    let chi = chi.to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", &chi],
        vec!["fidelity", &chi, "--dist", "vmf", "--kappa", "4", "--center", "+x", "--mc", "300000"],
        vec!["variance", "ext-min:0.985", "--dist", "polar-cap", "--theta", "1.1"],
        vec!["envelope", "--chi00", "0.985", "--family", "vmf"],
        vec!["bias", "--channels", "pc1,pc2", "--centers", "+z,+x", "--family", "polar-cap"],
        vec!["heatmap", "--family", "polar-cap", "--proposals", "300", "--grid-n", "3", "--n-mc", "400"],
        vec!["sample", "--dist", "polar-cap", "--theta", "0.5", "--n", "150000"],
    ];
    let mut same = 0;
    for (i, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for w in ["1", "2", "8"] {
            let out = dir.join(format!("{i}-{w}"));
            let status = Command::new(env!("CARGO_BIN_EXE_augfid"))
                .args(args)
                .args(["--seed", "99", "--workers", w, "--out", out.to_str().unwrap()])
                .env_remove("SOURCE_DATE_EPOCH")
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{} failed with {status}", args[0]));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if outputs.windows(2).all(|w| w[0] == w[1]) {
            same += 1;
        } else {
            let _ = std::fs::remove_dir_all(&dir);
            return Err(format!("{} output differs across --workers 1/2/8", args[0]));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(same == commands.len(), format!("{same}/{} commands byte-identical for --workers 1, 2, 8", commands.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("uniform baseline", uniform_baseline),
        ("limit recovery", limit_recovery),
        ("envelope endpoints", envelope_endpoints),
        ("depolarizing flatness", depolarizing_flatness),
        ("oracle triangle", oracle_triangle),
        ("variance sanity", variance_sanity),
        ("noise-bias discrimination", noise_bias_discrimination),
        ("two-qubit local-uniform", two_qubit_local_uniform),
        ("two-qubit ensemble", ensemble_and_heatmap),
        ("sampler correctness", sampler_correctness),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = f();
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
