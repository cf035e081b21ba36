//! File formats: level-system JSON, trajectory / scan / convergence CSV and
//! the JSON documents written by each command.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) in both CSV
//! and JSON, so output is locale-free and round-trips exactly.

use std::io::{self, Write};

use qlambda_core::amplitudes::{AmplitudeResult, ScanRow};
use qlambda_core::dynamics::{LevelSystem, Trajectory};
use qlambda_core::linalg::CMatrix;
use qlambda_core::vacpol::ConvergenceReport;
use qlambda_core::C64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::path_error;
use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct SigFigs<'a>(PrettyFormatter<'a>);

impl Formatter for SigFigs<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigs(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io::Error::from)?;
    out.push(b'\n');
    Ok(out)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

// ---- level systems ---------------------------------------------------------

/// `{energies: [...], couplings: [[re, im], ...], hbar?}` with the coupling
/// matrix flattened row-major, `couplings[j * n + k] = <j|H|k>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSystemDoc {
    pub energies: Vec<f64>,
    pub couplings: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
}

impl LevelSystemDoc {
    pub fn from_system(sys: &LevelSystem) -> Self {
        LevelSystemDoc {
            energies: sys.energies().to_vec(),
            couplings: sys.couplings().as_slice().iter().copied().map(pair).collect(),
            hbar: Some(sys.hbar()),
        }
    }

    pub fn into_system(self, default_hbar: f64) -> Result<LevelSystem, CliError> {
        let n = self.energies.len();
        if self.couplings.len() != n * n {
            return Err(CliError::config(format!(
                "key `couplings`: expected {} entries for {n} levels, found {}",
                n * n,
                self.couplings.len()
            )));
        }
        let data = self.couplings.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        let matrix =
            CMatrix::from_row_major(data).ok_or_else(|| CliError::config("key `couplings`: not a square matrix"))?;
        LevelSystem::new(self.energies, matrix, self.hbar.unwrap_or(default_hbar))
            .map_err(|err| CliError::config(format!("level system: {err}")))
    }
}

/// Parses a level-system document; errors name the offending key.
pub fn parse_level_system(text: &str) -> Result<LevelSystemDoc, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(path_error)
}

// ---- CSV ---------------------------------------------------------------------

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

fn csv_err(err: csv::Error) -> CliError {
    CliError::Io(err.into())
}

/// `t, re_1, im_1, ..., re_n, im_n, pop_1, ..., pop_n`
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<(), CliError> {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut w = csv_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    header.extend((1..=n).map(|i| format!("pop_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, psi) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![num(*t)];
        for z in psi {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        row.extend(psi.iter().map(|z| num(z.norm_sqr())));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const SCAN_COLUMNS: [&str; 5] = ["beta", "eta", "abs_m", "ratio_to_cm", "sqrt_one_minus_beta2"];

/// One `# normalization=...` line, then the five scan columns.
pub fn write_scan_csv<W: Write>(mut out: W, normalization: &str, rows: &[ScanRow]) -> Result<(), CliError> {
    writeln!(out, "# normalization={normalization}")?;
    let mut w = csv_writer(out);
    w.write_record(SCAN_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.beta, r.eta, r.abs_m, r.ratio_to_cm, r.sqrt_one_minus_beta2].map(num)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ScanDoc<'a> {
    pub process: &'a str,
    pub normalization: &'a str,
    pub axis: [f64; 3],
    pub rows: Vec<ScanRowDoc>,
}

#[derive(Debug, Serialize)]
pub struct ScanRowDoc {
    pub beta: f64,
    pub eta: f64,
    pub abs_m: f64,
    pub ratio_to_cm: f64,
    pub sqrt_one_minus_beta2: f64,
}

impl From<&ScanRow> for ScanRowDoc {
    fn from(r: &ScanRow) -> Self {
        ScanRowDoc {
            beta: r.beta,
            eta: r.eta,
            abs_m: r.abs_m,
            ratio_to_cm: r.ratio_to_cm,
            sqrt_one_minus_beta2: r.sqrt_one_minus_beta2,
        }
    }
}

/// `cutoff, partial_sum, tail_estimate`, one row per octave.
pub fn write_convergence_csv<W: Write>(out: W, report: &ConvergenceReport) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(["cutoff", "partial_sum", "tail_estimate"]).map_err(csv_err)?;
    for ((c, s), t) in report.cutoffs.iter().zip(&report.partial_sums).zip(&report.tail_estimates) {
        w.write_record([*c, *s, *t].map(num)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct GridDoc {
    pub radial_nodes: usize,
    pub panels_per_octave: usize,
    pub theta_nodes: usize,
    pub phi_nodes: usize,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceSummary {
    pub k: [f64; 3],
    pub photon_energy: f64,
    pub cutoff: f64,
    pub fitted_slope: f64,
    /// `E2'` up to the cutoff
    pub shift: f64,
    pub extrapolated_shift: f64,
    pub refined_shift: f64,
    pub refinement_change: f64,
    /// `|E2'(cutoff) - E2'(2 cutoff)| / |E2'(2 cutoff)|`
    pub doubled_cutoff_change: f64,
    pub grid: GridDoc,
}

// ---- amplitudes --------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct PartDoc {
    pub name: String,
    pub omega1: [f64; 2],
    pub omega2: [f64; 2],
    pub denom: f64,
    pub value: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct FrameDoc {
    pub beta: [f64; 3],
    pub gamma: f64,
}

#[derive(Debug, Serialize)]
pub struct ConstantsDoc {
    pub hbar: f64,
    pub c: f64,
    pub eps0: f64,
    pub e: f64,
    pub m_e: f64,
    #[serde(rename = "V")]
    pub volume: f64,
}

/// `{process, frame: {beta}, eta, parts: [...], total, closed_form, textbook_ratio}`
/// plus the inputs needed to reproduce the number.
#[derive(Debug, Serialize)]
pub struct AmplitudeDoc {
    pub process: &'static str,
    pub frame: FrameDoc,
    pub eta: f64,
    pub parts: Vec<PartDoc>,
    pub ordering_weight: f64,
    pub total: [f64; 2],
    pub closed_form: [f64; 2],
    pub textbook: [f64; 2],
    pub textbook_ratio: [f64; 2],
    pub normalization: &'static str,
    pub constants: ConstantsDoc,
}

impl AmplitudeDoc {
    pub fn new(r: &AmplitudeResult, normalization: &'static str, k: &qlambda_core::Constants) -> Self {
        AmplitudeDoc {
            process: r.process.name(),
            frame: FrameDoc { beta: r.frame.beta().0, gamma: r.frame.gamma() },
            eta: r.eta,
            parts: r
                .parts
                .iter()
                .map(|p| PartDoc {
                    name: p.name.clone(),
                    omega1: pair(p.omega1),
                    omega2: pair(p.omega2),
                    denom: p.denom,
                    value: pair(p.value),
                })
                .collect(),
            ordering_weight: r.ordering_weight,
            total: pair(r.total),
            closed_form: pair(r.closed_form),
            textbook: pair(r.textbook),
            textbook_ratio: pair(r.textbook_ratio),
            normalization,
            constants: ConstantsDoc { hbar: k.hbar, c: k.c, eps0: k.eps0, e: k.e, m_e: k.m_e, volume: k.volume },
        }
    }
}

/// The parts table of an amplitude as CSV.
pub fn write_parts_csv<W: Write>(out: W, r: &AmplitudeResult) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(["name", "omega1_re", "omega1_im", "omega2_re", "omega2_im", "denom", "value_re", "value_im"])
        .map_err(csv_err)?;
    for p in &r.parts {
        let mut row = vec![p.name.clone()];
        row.extend([p.omega1.re, p.omega1.im, p.omega2.re, p.omega2.im, p.denom, p.value.re, p.value.im].map(num));
        w.write_record(&row).map_err(csv_err)?;
    }
    let mut total = vec!["total".to_string()];
    total.extend(std::iter::repeat_n(String::new(), 5));
    total.extend([r.total.re, r.total.im].map(num));
    w.write_record(&total).map_err(csv_err)?;
    w.flush()?;
    Ok(())
}
