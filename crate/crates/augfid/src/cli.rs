//! Command-line interface. Exit status 0 on success, 1 on domain or
//! validation failure, 2 on usage or parse failure.

use std::io::Write as _;
use std::path::PathBuf;

use augfid_core::channels::{EnsembleOptions, PauliChannel, ProcessMatrix};
use augfid_core::distributions::{BlochDistribution, DistKind, Family};
use augfid_core::fidelity::{
    analytic_mean, printed_polar_cap_variance, rotate_center_to_z, two_qubit_uniform_local,
    variance_quadrature_oracle, variance_vmf, FidelityStats, Provenance, TensorQuadrature,
};
use augfid_core::montecarlo::{bias_curves, distribution_variance, envelope_curve, Estimator, HeatmapConfig};
use augfid_core::rng::RngStream;
use augfid_core::DEFAULT_TOL;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::drivers;
use crate::error::CliError;
use crate::format::{center_label, load_channel, parse_center, Field, Format, LoadedChannel, Table};
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "augfid", version, about = "Augmented average gate fidelities of noisy qubit channels")]
pub struct Cli {
    /// Seed of every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; tables default to csv, single results to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistName {
    Uniform,
    PolarCap,
    Vmf,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    PolarCap,
    Vmf,
}

impl From<FamilyName> for Family {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::PolarCap => Family::PolarCap,
            FamilyName::Vmf => Family::Vmf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorName {
    Mc,
    Quadrature,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    /// Distribution of the first (or only) qubit.
    #[arg(long, value_enum, default_value = "uniform")]
    pub dist: DistName,
    /// Polar-cap opening angle in radians.
    #[arg(long)]
    pub theta: Option<f64>,
    /// von Mises-Fisher concentration.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Center: +x, -x, +y, -y, +z, -z or x:y:z.
    #[arg(long, default_value = "+z", allow_hyphen_values = true)]
    pub center: String,
    /// Distribution of the second qubit (defaults to the first).
    #[arg(long, value_enum)]
    pub dist2: Option<DistName>,
    #[arg(long)]
    pub theta2: Option<f64>,
    #[arg(long)]
    pub kappa2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub center2: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, value_enum)]
    pub family: FamilyName,
    /// Explicit parameter grid, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// Size of the default grid.
    #[arg(long, default_value_t = 50)]
    pub grid_n: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CPTP report of a channel file.
    Validate {
        chi: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Mean fidelity and its spread under a state distribution.
    Fidelity {
        chi: String,
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, group = "mode")]
        analytic: bool,
        /// Monte-Carlo with this many samples.
        #[arg(long, group = "mode")]
        mc: Option<u64>,
        #[arg(long, group = "mode")]
        quadrature: bool,
    },
    /// Closed-form variance checked against quadrature.
    Variance {
        chi: String,
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Extremal fidelity curves at fixed chi00.
    Envelope {
        #[arg(long)]
        chi00: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "+z", allow_hyphen_values = true)]
        center: String,
    },
    /// Fidelity curves of Pauli channels for several centers.
    Bias {
        /// Channel aliases or files, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        channels: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "+z", allow_hyphen_values = true)]
        centers: Vec<String>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Cellwise extremes over a random two-qubit ensemble.
    Heatmap {
        #[arg(long, default_value_t = 0.985)]
        chi0000: f64,
        #[arg(long, default_value_t = 6000)]
        proposals: usize,
        #[arg(long, value_enum)]
        family: FamilyName,
        #[arg(long, value_delimiter = ',')]
        grid1: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        grid2: Option<Vec<f64>>,
        /// Size of each default axis grid.
        #[arg(long, default_value_t = 10)]
        grid_n: usize,
        #[arg(long, default_value_t = 1000)]
        n_mc: u64,
        #[arg(long, value_enum, default_value = "mc")]
        estimator: EstimatorName,
        #[arg(long)]
        real_offdiag: bool,
        #[arg(long)]
        project_tp: bool,
        #[arg(long, default_value_t = 1.0)]
        offdiag_scale: f64,
    },
    /// States drawn from a distribution.
    Sample {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
    },
}

/// The rendered result of a command together with its exit status.
struct Outcome {
    table: Table,
    status: u8,
    default_format: Format,
}

impl Outcome {
    fn table(table: Table) -> Self {
        Self { table, status: 0, default_format: Format::Csv }
    }

    fn object(table: Table) -> Self {
        Self { table, status: 0, default_format: Format::Json }
    }
}

fn build_dist(name: DistName, theta: Option<f64>, kappa: Option<f64>, center: &str) -> Result<BlochDistribution, CliError> {
    let c = parse_center(center)?;
    let d = match name {
        DistName::Uniform => BlochDistribution::uniform(),
        DistName::PolarCap => {
            BlochDistribution::polar_cap(theta.ok_or_else(|| CliError::Parse("polar-cap needs --theta".into()))?)?
        }
        DistName::Vmf => {
            BlochDistribution::von_mises_fisher(kappa.ok_or_else(|| CliError::Parse("vmf needs --kappa".into()))?)?
        }
        DistName::Point => BlochDistribution::point(c)?,
    };
    Ok(d.recenter(c)?)
}

impl DistArgs {
    fn first(&self) -> Result<BlochDistribution, CliError> {
        build_dist(self.dist, self.theta, self.kappa, &self.center)
    }

    fn second(&self) -> Result<BlochDistribution, CliError> {
        build_dist(
            self.dist2.unwrap_or(self.dist),
            self.theta2.or(self.theta),
            self.kappa2.or(self.kappa),
            self.center2.as_deref().unwrap_or(&self.center),
        )
    }

    fn for_qubits(&self, n: usize) -> Result<Vec<BlochDistribution>, CliError> {
        match n {
            1 => Ok(vec![self.first()?]),
            _ => Ok(vec![self.first()?, self.second()?]),
        }
    }
}

impl GridArgs {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        match &self.grid {
            Some(g) if g.is_empty() => Err(CliError::Domain("empty grid".into())),
            Some(g) => Ok(g.clone()),
            None if self.grid_n == 0 => Err(CliError::Domain("grid size must be positive".into())),
            None => Ok(Family::from(self.family).default_grid(self.grid_n)),
        }
    }
}

fn dist_label(d: &BlochDistribution) -> String {
    let c = center_label(&d.center());
    match d.kind() {
        DistKind::Uniform => "uniform".into(),
        DistKind::PolarCap { theta_max } => format!("polar-cap({theta_max}) about {c}"),
        DistKind::VonMisesFisher { kappa } => format!("vmf({kappa}) about {c}"),
        DistKind::Point => format!("point {c}"),
    }
}

fn require_valid(ch: &LoadedChannel) -> Result<(), CliError> {
    let r = ch.process.validate(DEFAULT_TOL);
    if r.is_valid(DEFAULT_TOL) {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "{} is not CPTP (min eigenvalue {:e}, trace-preservation defect {:e})",
            ch.label, r.min_eigenvalue, r.tp_defect
        )))
    }
}

fn stats_table(s: &FidelityStats, n: Option<u64>) -> Table {
    let mut fields = vec![
        ("mean", Field::Num(s.mean)),
        ("variance", Field::Num(s.variance)),
        ("std_error", Field::Num(s.std_error)),
        ("provenance", Field::Text(s.provenance.as_str().into())),
    ];
    if let Some(n) = n {
        fields.push(("n_samples", Field::Int(n)));
    }
    Table::object(fields)
}

fn cmd_validate(ch: &LoadedChannel, tol: f64) -> Outcome {
    let r = ch.process.validate(tol);
    let table = Table::object(vec![
        ("n_qubits", Field::Int(ch.process.n_qubits() as u64)),
        ("hermiticity_defect", Field::Num(r.hermiticity_defect)),
        ("diag_sum_defect", Field::Num(r.diag_sum_defect)),
        ("min_eigenvalue", Field::Num(r.min_eigenvalue)),
        ("tp_defect", Field::Num(r.tp_defect)),
        ("is_cp", Field::Bool(r.is_cp)),
        ("is_tp", Field::Bool(r.is_tp)),
    ]);
    Outcome { table, status: if r.is_cp && r.is_tp { 0 } else { 1 }, default_format: Format::Json }
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Analytic,
    Mc(u64),
    Quadrature,
}

fn analytic_stats(chi: &ProcessMatrix, dists: &[BlochDistribution]) -> Result<FidelityStats, CliError> {
    if let [d] = dists {
        let mean = analytic_mean(chi, d)?;
        let variance = match d.kind() {
            DistKind::VonMisesFisher { kappa } => variance_vmf(&rotate_center_to_z(chi, &d.center())?, kappa)?,
            _ => distribution_variance(chi, d)?,
        };
        return Ok(FidelityStats::new(mean, variance, 0.0, Provenance::Analytic)?);
    }
    if dists.iter().all(|d| d.kind() == DistKind::Uniform) {
        let mean = two_qubit_uniform_local(chi)?;
        let q = TensorQuadrature::default().two_qubit_stats(chi, [&dists[0], &dists[1]])?;
        return Ok(FidelityStats::new(mean, q.variance, 0.0, Provenance::Analytic)?);
    }
    Err(CliError::Domain(
        "no closed form for two-qubit averages over non-uniform distributions; use --mc N or --quadrature".into(),
    ))
}

fn cmd_fidelity(ch: &LoadedChannel, dist: &DistArgs, mode: Mode, seed: u64) -> Result<Outcome, CliError> {
    require_valid(ch)?;
    let chi = &ch.process;
    let dists = dist.for_qubits(chi.n_qubits())?;
    let (stats, n) = match mode {
        Mode::Analytic => (analytic_stats(chi, &dists)?, None),
        Mode::Mc(n) => (drivers::mc_fidelity(chi, &dists, n, &RngStream::new(seed, 0))?, Some(n)),
        Mode::Quadrature => match dists.as_slice() {
            [d] if d.kind() == DistKind::Point => {
                (FidelityStats::new(analytic_mean(chi, d)?, 0.0, 0.0, Provenance::Quadrature)?, None)
            }
            [d] => (variance_quadrature_oracle(chi, d)?, None),
            [a, b] => (TensorQuadrature::default().two_qubit_stats(chi, [a, b])?, None),
            _ => unreachable!("one or two qubits"),
        },
    };
    let mut table = stats_table(&stats, n).meta("channel", &ch.label);
    for (i, d) in dists.iter().enumerate() {
        table = table.meta(&format!("dist{}", i + 1), dist_label(d));
    }
    Ok(Outcome::object(table))
}

fn cmd_variance(ch: &LoadedChannel, dist: &DistArgs) -> Result<Outcome, CliError> {
    require_valid(ch)?;
    let chi = &ch.process;
    if chi.n_qubits() != 1 {
        return Err(CliError::Domain("closed-form variances are single-qubit; use fidelity --quadrature".into()));
    }
    let d = dist.first()?;
    let z = rotate_center_to_z(chi, &d.center())?;
    let (family, param, closed, oracle) = match d.kind() {
        DistKind::Point => ("point", 0.0, 0.0, 0.0),
        DistKind::VonMisesFisher { kappa } => {
            ("vmf", kappa, variance_vmf(&z, kappa)?, variance_quadrature_oracle(chi, &d)?.variance)
        }
        DistKind::PolarCap { theta_max } => {
            ("polar-cap", theta_max, printed_polar_cap_variance(&z, theta_max)?, distribution_variance(chi, &d)?)
        }
        DistKind::Uniform => {
            let pi = std::f64::consts::PI;
            ("uniform", pi, printed_polar_cap_variance(&z, pi)?, variance_quadrature_oracle(chi, &d)?.variance)
        }
    };
    let residual = closed - oracle;
    let defect = residual.abs() > (1e-8 * oracle.abs()).max(1e-12);
    // a defective closed form never supplies the reported value
    let value = if defect || family != "vmf" { oracle } else { closed };
    let table = Table::object(vec![
        ("family", Field::Text(family.into())),
        ("param", Field::Num(param)),
        ("variance", Field::Num(value)),
        ("closed_form", Field::Num(closed)),
        ("oracle", Field::Num(oracle)),
        ("residual", Field::Num(residual)),
        ("closed_form_defect", Field::Bool(defect)),
    ])
    .meta("channel", &ch.label)
    .meta("dist", dist_label(&d));
    Ok(Outcome::object(table))
}

fn cmd_envelope(chi00: f64, grid: &GridArgs, center: &str) -> Result<Outcome, CliError> {
    let center = parse_center(center)?;
    let family = Family::from(grid.family);
    let env = envelope_curve(chi00, family, &grid.values()?, &center)?;
    let mut t = Table::new(&["param", "min", "min_err", "max", "max_err", "pauli_min", "pauli_max", "depol"])
        .meta("family", family.name())
        .meta("chi00", chi00)
        .meta("center", center_label(&center));
    for i in 0..env.grid.len() {
        t.push(vec![
            Field::Num(env.grid[i]),
            Field::Num(env.min_curve[i]),
            Field::Num(env.min_err[i]),
            Field::Num(env.max_curve[i]),
            Field::Num(env.max_err[i]),
            Field::Num(env.pauli_min_curve[i]),
            Field::Num(env.pauli_max_curve[i]),
            Field::Num(env.depolarizing_level),
        ]);
    }
    Ok(Outcome::table(t))
}

fn pauli_of(ch: &LoadedChannel) -> Result<PauliChannel, CliError> {
    let chi = &ch.process;
    let off_diag = (0..chi.dim()).any(|k| (0..chi.dim()).any(|l| k != l && chi.entry(k, l).norm() != 0.0));
    if chi.n_qubits() != 1 || off_diag {
        return Err(CliError::Domain(format!("{} is not a single-qubit Pauli channel", ch.label)));
    }
    Ok(PauliChannel::new([0, 1, 2, 3].map(|k| chi.entry(k, k).re))?)
}

fn cmd_bias(channels: &[LoadedChannel], centers: &[String], grid: &GridArgs) -> Result<Outcome, CliError> {
    let paulis = channels.iter().map(pauli_of).collect::<Result<Vec<_>, _>>()?;
    let centers = centers.iter().map(|c| parse_center(c)).collect::<Result<Vec<_>, _>>()?;
    let family = Family::from(grid.family);
    let table = bias_curves(&paulis, &centers, family, &grid.values()?)?;
    let mut t = Table::new(&["param", "channel_id", "center", "fidelity"]).meta("family", family.name());
    for (i, &p) in table.grid.iter().enumerate() {
        for (c, ch) in channels.iter().enumerate() {
            for (k, center) in table.centers.iter().enumerate() {
                t.push(vec![
                    Field::Num(p),
                    Field::Text(ch.label.clone()),
                    Field::Text(center_label(center)),
                    Field::Num(table.curves[c][k][i]),
                ]);
            }
            // the center-independent reference level of the same channel
            t.push(vec![
                Field::Num(p),
                Field::Text(ch.label.clone()),
                Field::Text("uniform".into()),
                Field::Num(table.depolarizing_levels[c]),
            ]);
        }
    }
    Ok(Outcome::table(t))
}

fn cmd_sample(dist: &DistArgs, n: u64, seed: u64) -> Result<Outcome, CliError> {
    let d = dist.first()?;
    if n == 0 {
        return Err(CliError::Domain("sample count must be positive".into()));
    }
    let mu = d.center();
    let states = drivers::sample_states(&d, n, seed);
    let mut t = Table::new(&["x", "y", "z", "fidelity_vs_center"]).meta("dist", dist_label(&d));
    t.rows.reserve(states.len());
    for v in &states {
        let [x, y, z] = v.to_array();
        t.push(vec![Field::Num(x), Field::Num(y), Field::Num(z), Field::Num(0.5 * (1.0 + mu.dot(v)))]);
    }
    Ok(Outcome::table(t))
}

fn axis(values: &Option<Vec<f64>>, family: Family, n: usize) -> Result<Vec<f64>, CliError> {
    match values {
        Some(v) if !v.is_empty() => Ok(v.clone()),
        Some(_) => Err(CliError::Domain("empty grid".into())),
        None if n == 0 => Err(CliError::Domain("grid size must be positive".into())),
        None => Ok(family.default_grid(n)),
    }
}

fn execute(cli: &Cli, manifest: &mut RunManifest) -> Result<Outcome, CliError> {
    let mut load = |spec: &str| -> Result<LoadedChannel, CliError> {
        let ch = load_channel(spec)?;
        if let Some((path, bytes)) = &ch.source {
            manifest.add_input(path, bytes);
        }
        Ok(ch)
    };
    match &cli.command {
        Command::Validate { chi, tol } => Ok(cmd_validate(&load(chi)?, *tol)),
        Command::Fidelity { chi, dist, analytic: _, mc, quadrature } => {
            let mode = match (mc, quadrature) {
                (Some(n), _) => Mode::Mc(*n),
                (None, true) => Mode::Quadrature,
                (None, false) => Mode::Analytic,
            };
            cmd_fidelity(&load(chi)?, dist, mode, cli.seed)
        }
        Command::Variance { chi, dist } => cmd_variance(&load(chi)?, dist),
        Command::Envelope { chi00, grid, center } => cmd_envelope(*chi00, grid, center),
        Command::Bias { channels, centers, grid } => {
            let loaded = channels.iter().map(|c| load(c)).collect::<Result<Vec<_>, _>>()?;
            cmd_bias(&loaded, centers, grid)
        }
        Command::Heatmap {
            chi0000,
            proposals,
            family,
            grid1,
            grid2,
            grid_n,
            n_mc,
            estimator,
            real_offdiag,
            project_tp,
            offdiag_scale,
        } => {
            let family = Family::from(*family);
            let config = HeatmapConfig {
                chi0000: *chi0000,
                n_proposals: *proposals,
                family,
                grid1: axis(grid1, family, *grid_n)?,
                grid2: axis(grid2, family, *grid_n)?,
                n_mc: *n_mc,
                seed: cli.seed,
                estimator: match estimator {
                    EstimatorName::Mc => Estimator::MonteCarlo,
                    EstimatorName::Quadrature => Estimator::Quadrature,
                },
                ensemble: EnsembleOptions {
                    real_offdiag: *real_offdiag,
                    project_tp: *project_tp,
                    offdiag_scale: *offdiag_scale,
                },
            };
            let grid = drivers::two_qubit_heatmap(&config)?;
            let mut t = Table::new(&["p1", "p2", "min", "max"])
                .meta("family", family.name())
                .meta("chi0000", chi0000)
                .meta("proposals", grid.proposals)
                .meta("ensemble_size", grid.ensemble_size)
                .meta("estimator", format!("{estimator:?}").to_lowercase());
            if config.estimator == Estimator::MonteCarlo {
                t = t.meta("n_mc", n_mc);
            }
            for (i1, &p1) in grid.axis1.iter().enumerate() {
                for (i2, &p2) in grid.axis2.iter().enumerate() {
                    let (lo, hi) = grid.cell(i1, i2);
                    t.push(vec![Field::Num(p1), Field::Num(p2), Field::Num(lo), Field::Num(hi)]);
                }
            }
            Ok(Outcome::table(t))
        }
        Command::Sample { dist, n } => cmd_sample(dist, *n, cli.seed),
    }
}

/// Parses `argv` (program name first), runs the command and writes its
/// output. Returns the exit status.
pub fn run(argv: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut manifest = RunManifest::new(argv.get(1..).unwrap_or(&[]), cli.seed);
    let outcome = drivers::with_workers(cli.workers, || execute(&cli, &mut manifest)).and_then(|r| r);
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("augfid: {e}");
            return e.exit_code();
        }
    };
    let text = outcome.table.render(&manifest, cli.format.unwrap_or(outcome.default_format));
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text.as_bytes()).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("augfid: {e}");
        return 1;
    }
    outcome.status
}
