//! Subcommands and their options.
//!
//! Every option struct doubles as the schema of its config-file table, so a
//! flag and a key share one name (`--spin-in` / `spin_in`).

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlambda_core::amplitudes::{
    compton_total, moller_total, scan_row, AmplitudeConfig, AmplitudeResult, ComptonStates, MollerSpins, ScanProcess,
};
use qlambda_core::dirac::{Normalization, Spin};
use qlambda_core::dynamics::{effective_coupling, evolve_sampled, fit_rabi_rate, magnus_second_order, LevelSystem};
use qlambda_core::kinematics::{compton_kinematics, moller_kinematics};
use qlambda_core::vacpol::{total_shift, GridSpec};
use qlambda_core::{Boost, Constants, ThreeVector, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{merge, merge_constants, ConstantsArgs, FileConfig};
use crate::error::CliError;
use crate::formats::{self, AmplitudeDoc, ConvergenceSummary, GridDoc, ScanDoc, ScanRowDoc};

#[derive(Debug, Parser)]
#[command(
    name = "qlambda",
    version,
    about = "Lambda-system QED amplitudes, level dynamics and vacuum-polarization shifts"
)]
pub struct Cli {
    /// TOML file with constants and per-command tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub constants: ConstantsArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a level system and compare the transfer rate with the effective coupling.
    LambdaSim(LambdaSimArgs),
    /// Compton amplitude as a sum of time-ordered three-level paths.
    Compton(ComptonArgs),
    /// Møller amplitude by single photon exchange.
    Moller(MollerArgs),
    /// Pair-creation shift of the photon level and its cutoff convergence.
    Vacpol(VacpolArgs),
    /// |M| and eta along a family of boosted frames.
    BoostScan(BoostScanArgs),
}

impl Command {
    fn section(&self) -> &'static str {
        match self {
            Command::LambdaSim(_) => "lambda-sim",
            Command::Compton(_) => "compton",
            Command::Moller(_) => "moller",
            Command::Vacpol(_) => "vacpol",
            Command::BoostScan(_) => "boost-scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinArg {
    Up,
    Down,
}

impl From<SpinArg> for Spin {
    fn from(s: SpinArg) -> Spin {
        match s {
            SpinArg::Up => Spin::Up,
            SpinArg::Down => Spin::Down,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    Box,
    Covariant,
}

impl NormArg {
    fn name(self) -> &'static str {
        match self {
            NormArg::Box => "box",
            NormArg::Covariant => "covariant",
        }
    }
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Normalization {
        match n {
            NormArg::Box => Normalization::Box,
            NormArg::Covariant => Normalization::Covariant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameArg {
    /// centre of mass; ignores `beta`
    Cm,
    /// boosted by `beta` along `axis`
    Boosted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessArg {
    Compton,
    Moller,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct LambdaSimArgs {
    /// Level-system JSON: {energies, couplings: [[re, im], ...] row-major, hbar?}.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Defaults to one full transfer time pi hbar / (2 |M|) for a lambda system.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every n-th step; by default about 2000 samples are written.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Initially occupied level (1-based).
    #[arg(long)]
    pub initial: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct ComptonArgs {
    /// Centre-of-mass photon energy.
    #[arg(long)]
    pub energy: Option<f64>,
    /// Scattering angle in radians.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub spin_in: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_out: Option<SpinArg>,
    #[arg(long)]
    pub pol_in: Option<u8>,
    #[arg(long)]
    pub pol_out: Option<u8>,
    #[arg(long, value_enum)]
    pub frame: Option<FrameArg>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub axis: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct MollerArgs {
    /// Total centre-of-mass energy.
    #[arg(long)]
    pub e_cm: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub spin_p1: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_q1: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_p2: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_q2: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub frame: Option<FrameArg>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub axis: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct VacpolArgs {
    /// Photon wavevector, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// Energy of the photon level; defaults to |k|.
    #[arg(long)]
    pub photon_energy: Option<f64>,
    /// Momentum cutoff.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub radial_nodes: Option<usize>,
    #[arg(long)]
    pub panels_per_octave: Option<usize>,
    #[arg(long)]
    pub theta_nodes: Option<usize>,
    #[arg(long)]
    pub phi_nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct BoostScanArgs {
    #[arg(long, value_enum)]
    pub process: Option<ProcessArg>,
    /// Boost speeds, comma separated; default 0, 0.1, ..., 0.9.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub axis: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormArg>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Compton: centre-of-mass photon energy.
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long, value_enum)]
    pub spin_in: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_out: Option<SpinArg>,
    #[arg(long)]
    pub pol_in: Option<u8>,
    #[arg(long)]
    pub pol_out: Option<u8>,
    /// Møller: total centre-of-mass energy.
    #[arg(long)]
    pub e_cm: Option<f64>,
    #[arg(long, value_enum)]
    pub spin_p1: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_q1: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_p2: Option<SpinArg>,
    #[arg(long, value_enum)]
    pub spin_q2: Option<SpinArg>,
}

/// Where a command's documents go.
struct Sink<'a> {
    out: Option<&'a Path>,
}

impl Sink<'_> {
    fn primary(&self, bytes: &[u8]) -> Result<(), CliError> {
        match self.out {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    /// Written beside the primary file as `<stem>.summary.json`, or to
    /// stderr when the primary goes to stdout.
    fn summary(&self, bytes: &[u8]) -> Result<(), CliError> {
        match self.out {
            Some(path) => std::fs::write(path.with_extension("summary.json"), bytes)?,
            None => std::io::stderr().lock().write_all(bytes)?,
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path, cli.command.section())?,
        None => FileConfig::default(),
    };
    let constants = merge_constants(&cli.constants, &file.constants)?;
    let section = file.section.as_ref();
    let sink = Sink { out: cli.out.as_deref() };
    let pool = thread_pool()?;
    pool.install(|| match &cli.command {
        Command::LambdaSim(a) => lambda_sim(&merge(a, section)?, &constants, cli.format, &sink),
        Command::Compton(a) => compton(&merge(a, section)?, &constants, cli.format, &sink),
        Command::Moller(a) => moller(&merge(a, section)?, &constants, cli.format, &sink),
        Command::Vacpol(a) => vacpol(&merge(a, section)?, &constants, cli.format, &sink),
        Command::BoostScan(a) => boost_scan(&merge(a, section)?, &constants, cli.format, &sink),
    })
}

/// Pool sized by `QLAMBDA_THREADS` when set.
fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("QLAMBDA_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config(format!("QLAMBDA_THREADS = {raw:?} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|err| CliError::config(format!("thread pool: {err}")))
}

fn finite(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::config(format!("`{name}` must be finite, got {x}")))
    }
}

fn vector(name: &str, v: &Option<Vec<f64>>, default: [f64; 3]) -> Result<ThreeVector, CliError> {
    let Some(v) = v else { return Ok(ThreeVector(default)) };
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(ThreeVector::new(*x, *y, *z)),
        _ => Err(CliError::config(format!("`{name}` needs three finite components"))),
    }
}

fn polarization_index(name: &str, p: Option<u8>) -> Result<u8, CliError> {
    match p.unwrap_or(1) {
        p @ (1 | 2) => Ok(p),
        p => Err(CliError::config(format!("`{name}` must be 1 or 2, got {p}"))),
    }
}

fn frame_boost(frame: Option<FrameArg>, beta: Option<f64>, axis: &Option<Vec<f64>>) -> Result<Boost, CliError> {
    let beta = finite("beta", beta.unwrap_or(0.0))?;
    if frame == Some(FrameArg::Cm) || beta == 0.0 {
        return Ok(Boost::identity());
    }
    let axis = vector("axis", axis, [0.0, 0.0, 1.0])?;
    if axis.is_zero() {
        return Err(CliError::config("`axis` must be non-zero"));
    }
    Ok(Boost::along(axis, beta)?)
}

fn amplitude_config(constants: &Constants, normalization: Option<NormArg>) -> (AmplitudeConfig, NormArg) {
    let norm = normalization.unwrap_or(NormArg::Box);
    (AmplitudeConfig { constants: *constants, normalization: norm.into() }, norm)
}

fn write_amplitude(
    r: &AmplitudeResult,
    cfg: &AmplitudeConfig,
    norm: NormArg,
    format: Option<Format>,
    sink: &Sink,
) -> Result<(), CliError> {
    match format.unwrap_or(Format::Json) {
        Format::Json => sink.primary(&formats::to_json(&AmplitudeDoc::new(r, norm.name(), &cfg.constants))?),
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_parts_csv(&mut buf, r)?;
            sink.primary(&buf)
        }
    }
}

fn with_context(err: qlambda_core::Error, context: String) -> CliError {
    CliError::Core { source: err, context: Some(context) }
}

fn compton_states(
    spin_in: Option<SpinArg>,
    spin_out: Option<SpinArg>,
    pol_in: Option<u8>,
    pol_out: Option<u8>,
) -> Result<ComptonStates, CliError> {
    Ok(ComptonStates {
        spin_in: spin_in.unwrap_or(SpinArg::Up).into(),
        spin_out: spin_out.unwrap_or(SpinArg::Up).into(),
        pol_in: polarization_index("pol_in", pol_in)?,
        pol_out: polarization_index("pol_out", pol_out)?,
    })
}

fn moller_spins(s: [Option<SpinArg>; 4]) -> MollerSpins {
    let [p1, q1, p2, q2] = s.map(|s| Spin::from(s.unwrap_or(SpinArg::Up)));
    MollerSpins { p1, q1, p2, q2 }
}

fn compton(a: &ComptonArgs, constants: &Constants, format: Option<Format>, sink: &Sink) -> Result<(), CliError> {
    let energy = finite("energy", a.energy.unwrap_or(1.0))?;
    let theta = finite("theta", a.theta.unwrap_or(FRAC_PI_2))?;
    let boost = frame_boost(a.frame, a.beta, &a.axis)?;
    let states = compton_states(a.spin_in, a.spin_out, a.pol_in, a.pol_out)?;
    let (cfg, norm) = amplitude_config(constants, a.normalization);
    let where_ = || format!("compton energy={energy} theta={theta} beta={:?}", boost.beta().0);
    let kin = compton_kinematics(energy, theta, &boost, constants.m_e).map_err(|e| with_context(e, where_()))?;
    let r = compton_total(&kin, &states, &cfg)
        .map_err(|e| with_context(e, format!("{}; p={:?} k={:?} k'={:?}", where_(), kin.p.0, kin.k.0, kin.k_out.0)))?;
    write_amplitude(&r, &cfg, norm, format, sink)
}

fn moller(a: &MollerArgs, constants: &Constants, format: Option<Format>, sink: &Sink) -> Result<(), CliError> {
    let e_cm = finite("e_cm", a.e_cm.unwrap_or(4.0))?;
    let theta = finite("theta", a.theta.unwrap_or(FRAC_PI_2))?;
    let boost = frame_boost(a.frame, a.beta, &a.axis)?;
    let spins = moller_spins([a.spin_p1, a.spin_q1, a.spin_p2, a.spin_q2]);
    let (cfg, norm) = amplitude_config(constants, a.normalization);
    let where_ = || format!("moller e_cm={e_cm} theta={theta} beta={:?}", boost.beta().0);
    let kin = moller_kinematics(e_cm, theta, &boost, constants.m_e).map_err(|e| with_context(e, where_()))?;
    let r = moller_total(&kin, &spins, &cfg).map_err(|e| {
        with_context(e, format!("{}; p1={:?} p2={:?} k={:?}", where_(), kin.p1.0, kin.p2.0, kin.transfer().0))
    })?;
    write_amplitude(&r, &cfg, norm, format, sink)
}

fn boost_scan(a: &BoostScanArgs, constants: &Constants, format: Option<Format>, sink: &Sink) -> Result<(), CliError> {
    let theta = finite("theta", a.theta.unwrap_or(FRAC_PI_2))?;
    let process = match a.process.unwrap_or(ProcessArg::Compton) {
        ProcessArg::Compton => ScanProcess::Compton {
            photon_energy: finite("energy", a.energy.unwrap_or(1.0))?,
            theta,
            states: compton_states(a.spin_in, a.spin_out, a.pol_in, a.pol_out)?,
        },
        ProcessArg::Moller => ScanProcess::Moller {
            e_cm: finite("e_cm", a.e_cm.unwrap_or(4.0))?,
            theta,
            spins: moller_spins([a.spin_p1, a.spin_q1, a.spin_p2, a.spin_q2]),
        },
    };
    let betas = a.betas.clone().unwrap_or_else(|| (0..10).map(|i| i as f64 / 10.0).collect());
    for &b in &betas {
        if !(b.is_finite() && b.abs() < 1.0) {
            return Err(CliError::config(format!("boost speed {b} must satisfy |beta| < 1")));
        }
    }
    let axis = vector("axis", &a.axis, [0.0, 0.0, 1.0])?;
    if axis.is_zero() {
        return Err(CliError::config("`axis` must be non-zero"));
    }
    let (cfg, norm) = amplitude_config(constants, a.normalization);
    let cm_abs = process.evaluate(&Boost::identity(), &cfg)?.total.norm();
    // collect keeps input order, so the table does not depend on scheduling
    let rows = betas
        .par_iter()
        .map(|&b| scan_row(&process, axis, b, &cfg, cm_abs))
        .collect::<qlambda_core::Result<Vec<_>>>()?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_scan_csv(&mut buf, norm.name(), &rows)?;
            sink.primary(&buf)
        }
        Format::Json => sink.primary(&formats::to_json(&ScanDoc {
            process: process.process().name(),
            normalization: norm.name(),
            axis: axis.0,
            rows: rows.iter().map(ScanRowDoc::from).collect(),
        })?),
    }
}

fn vacpol(a: &VacpolArgs, constants: &Constants, format: Option<Format>, sink: &Sink) -> Result<(), CliError> {
    let k = vector("k", &a.k, [0.0, 0.3, 0.4])?;
    if k.is_zero() {
        return Err(CliError::config("`k` must be non-zero"));
    }
    let photon_energy = finite("photon_energy", a.photon_energy.unwrap_or_else(|| k.norm()))?;
    let cutoff = finite("cutoff", a.cutoff.unwrap_or(1e3))?;
    let d = GridSpec::default();
    let grid = GridSpec {
        radial_nodes: a.radial_nodes.unwrap_or(d.radial_nodes),
        panels_per_octave: a.panels_per_octave.unwrap_or(d.panels_per_octave),
        theta_nodes: a.theta_nodes.unwrap_or(d.theta_nodes),
        phi_nodes: a.phi_nodes.unwrap_or(d.phi_nodes),
    };
    let (report, doubled) = rayon::join(
        || total_shift(k, photon_energy, cutoff, &grid, constants),
        || total_shift(k, photon_energy, 2.0 * cutoff, &grid, constants),
    );
    let (report, doubled) = (report?, doubled?);
    let summary = formats::to_json(&ConvergenceSummary {
        k: k.0,
        photon_energy,
        cutoff,
        fitted_slope: report.fitted_slope,
        shift: report.shift,
        extrapolated_shift: report.extrapolated(),
        refined_shift: report.refined_shift,
        refinement_change: report.refinement_change,
        doubled_cutoff_change: ((report.shift - doubled.shift) / doubled.shift).abs(),
        grid: GridDoc {
            radial_nodes: grid.radial_nodes,
            panels_per_octave: grid.panels_per_octave,
            theta_nodes: grid.theta_nodes,
            phi_nodes: grid.phi_nodes,
        },
    })?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_convergence_csv(&mut buf, &report)?;
            sink.primary(&buf)?;
            sink.summary(&summary)
        }
        Format::Json => sink.primary(&summary),
    }
}

#[derive(Debug, Serialize)]
struct LambdaSummary {
    dim: usize,
    hbar: f64,
    initial: usize,
    duration: f64,
    dt: f64,
    samples: usize,
    period: Option<f64>,
    /// `Omega1 Omega2 / (E1 - E2)` when the system has lambda shape
    effective_coupling: Option<[f64; 2]>,
    analytic_rate: Option<f64>,
    fitted_rate: Option<f64>,
    relative_deviation: Option<f64>,
    /// analytic vs quadrature second-order average
    magnus_deviation: Option<f64>,
    max_norm_drift: f64,
}

/// `Omega1 Omega2 / (E1 - E2)` if levels 1 and 3 are degenerate and
/// talk only through level 2.
fn lambda_coupling(sys: &LevelSystem) -> Option<C64> {
    let (e, v) = (sys.energies(), sys.couplings());
    let shaped =
        sys.dim() == 3 && v[(2, 0)] == C64::new(0.0, 0.0) && (e[0] - e[2]).abs() <= 1e-12 * e[0].abs().max(1.0);
    if !shaped {
        return None;
    }
    effective_coupling(v[(1, 0)], v[(2, 1)], e[0], e[1]).ok().filter(|m| m.norm() > 0.0)
}

fn lambda_sim(a: &LambdaSimArgs, constants: &Constants, format: Option<Format>, sink: &Sink) -> Result<(), CliError> {
    let path = a.system.as_ref().ok_or_else(|| CliError::config("`system` (level-system JSON path) is required"))?;
    let text = std::fs::read_to_string(path).map_err(|err| CliError::config(format!("{}: {err}", path.display())))?;
    let sys = formats::parse_level_system(&text)
        .and_then(|doc| doc.into_system(constants.hbar))
        .map_err(|err| err.located(path.display()))?;
    let n = sys.dim();
    let initial = a.initial.unwrap_or(1);
    if !(1..=n).contains(&initial) {
        return Err(CliError::config(format!("`initial` must be a level in 1..={n}")));
    }
    let m = lambda_coupling(&sys);
    let hbar = sys.hbar();
    let duration = match (a.duration, m) {
        (Some(d), _) => finite("duration", d)?,
        (None, Some(m)) => FRAC_PI_2 * hbar / m.norm(),
        (None, None) => return Err(CliError::config("`duration` is required unless the system is a lambda system")),
    };
    let e = sys.energies();
    let gap = e.iter().flat_map(|x| e.iter().map(move |y| (x - y).abs())).fold(0.0, f64::max);
    let dt = finite("dt", a.dt.unwrap_or(if gap > 0.0 { 0.05 * hbar / gap } else { duration / 1000.0 }))?;
    let steps = if dt > 0.0 { (duration / dt).ceil() as usize } else { 1 };
    let stride = a.stride.unwrap_or((steps / 2000).max(1));

    let mut psi0 = vec![C64::new(0.0, 0.0); n];
    psi0[initial - 1] = C64::new(1.0, 0.0);
    let traj = evolve_sampled(&sys, &psi0, duration, dt, stride)?;

    // transfer between the two lower levels of a lambda system
    let target = match initial {
        1 => Some(3),
        3 => Some(1),
        _ => None,
    };
    let analytic_rate = m.map(|m| m.norm() / hbar);
    let fitted_rate = match (m, target) {
        (Some(_), Some(t)) => fit_rabi_rate(&traj.times, &traj.populations(t - 1)),
        _ => None,
    };
    let relative_deviation = match (analytic_rate, fitted_rate) {
        (Some(a), Some(f)) => Some(((f - a) / a).abs()),
        _ => None,
    };
    let summary = LambdaSummary {
        dim: n,
        hbar,
        initial,
        duration,
        dt,
        samples: traj.times.len(),
        period: sys.period().ok(),
        effective_coupling: m.map(|m| [m.re, m.im]),
        analytic_rate,
        fitted_rate,
        relative_deviation,
        magnus_deviation: magnus_second_order(&sys).ok().map(|s| s.relative_deviation()),
        max_norm_drift: traj.max_norm_drift(),
    };
    let summary = formats::to_json(&summary)?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            formats::write_trajectory_csv(&mut buf, &traj)?;
            sink.primary(&buf)?;
            sink.summary(&summary)
        }
        Format::Json => sink.primary(&summary),
    }
}
