//! Compton and Møller amplitudes as sums of three-level transfer amplitudes.
//!
//! Each tree diagram splits into two time orderings. Every ordering is a
//! lambda system with couplings `Omega = eta e c hbar sqrt(1/(V eps0 E_q))
//! ubar gamma.eps u` and rate `Omega1 Omega2 / (E1 - E2)`; the intermediate
//! electron is the on-shell spinor `u_s(q)` summed over `s`. Summing the
//! orderings reproduces a propagator `1 / (q^2 - m^2)`, which is evaluated
//! separately as `closed_form`. `textbook` is the coupling-free Feynman-rule
//! expression used only for ratios.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::dirac::{
    gamma_set, polarization, sandwich, spin_sum_closed_form, u_spinor, u_spinor_normalized, vector_current,
    vertex_bilinear, BiSpinor, Normalization, PolarizationVector, Spin,
};
use crate::kinematics::{compton_kinematics, moller_kinematics, ComptonKinematics, MollerKinematics};
use crate::linalg::{c, Mat4, C64, ZERO};
use crate::lorentz::{eta, minkowski_dot, on_shell_energy, Boost, FourVector, ThreeVector};
use crate::units::Constants;
use crate::{Error, Result};

const SHELL_TOL: f64 = 1e-10;
const POLE_TOL: f64 = 1e-9;
const FORWARD_TOL: f64 = 1e-12;

/// Physical constants plus the normalization of the external spinors.
/// Intermediate spinors are always box-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AmplitudeConfig {
    pub constants: Constants,
    pub normalization: Normalization,
}

/// `eta e c hbar sqrt(1 / (V eps0 E))` with its inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingFactor {
    pub value: f64,
    pub eta: f64,
    pub energy: f64,
    pub volume: f64,
}

impl CouplingFactor {
    pub fn new(constants: &Constants, eta: f64, energy: f64) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(Error::NonpositiveEnergy { energy });
        }
        let value = eta * constants.vertex_prefactor(constants.volume, energy);
        Ok(CouplingFactor { value, eta, energy, volume: constants.volume })
    }
}

/// One time ordering with a fixed intermediate label.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramAmplitude {
    pub name: String,
    pub omega1: C64,
    pub omega2: C64,
    /// `E1 - E2`
    pub denom: f64,
    pub value: C64,
}

impl DiagramAmplitude {
    fn new(name: String, omega1: C64, omega2: C64, denom: f64, scale: f64) -> Result<Self> {
        if !(denom.abs() >= POLE_TOL * scale) {
            return Err(Error::PoleEncountered { denominator: denom });
        }
        Ok(DiagramAmplitude { name, omega1, omega2, denom, value: omega1 * omega2 / denom })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    Compton,
    Moller,
}

impl Process {
    pub fn name(self) -> &'static str {
        match self {
            Process::Compton => "compton",
            Process::Moller => "moller",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeResult {
    pub process: Process,
    /// `ordering_weight * sum(parts.value)`
    pub total: C64,
    pub parts: Vec<DiagramAmplitude>,
    /// Weight of each time ordering: 1 for Compton, 1/2 for Møller where
    /// both orderings exchange the same photon mode.
    pub ordering_weight: f64,
    pub eta: f64,
    /// Boost taking the centre-of-mass frame to the evaluation frame.
    pub frame: Boost,
    pub closed_form: C64,
    pub textbook: C64,
    /// `total / textbook`
    pub textbook_ratio: C64,
}

impl AmplitudeResult {
    fn assemble(
        process: Process,
        parts: Vec<DiagramAmplitude>,
        weight: f64,
        eta: f64,
        total_p: &FourVector,
    ) -> Result<Self> {
        let total = parts.iter().fold(ZERO, |acc, d| acc + d.value) * weight;
        Ok(AmplitudeResult {
            process,
            total,
            parts,
            ordering_weight: weight,
            eta,
            frame: Boost::new(total_p.spatial() * (1.0 / total_p.t()))?,
            closed_form: ZERO,
            textbook: ZERO,
            textbook_ratio: ZERO,
        })
    }

    fn with_comparisons(mut self, closed_form: C64, textbook: C64) -> Self {
        self.closed_form = closed_form;
        self.textbook = textbook;
        self.textbook_ratio = self.total / textbook;
        self
    }

    /// Weighted sums of consecutive ordering pairs (one entry per
    /// intermediate spin or photon polarization).
    pub fn ordering_sums(&self) -> Vec<C64> {
        self.parts.chunks(2).map(|pair| pair.iter().fold(ZERO, |acc, d| acc + d.value) * self.ordering_weight).collect()
    }

    /// `|total - closed_form| / |closed_form|`
    pub fn closed_form_deviation(&self) -> f64 {
        relative_deviation(self.total, self.closed_form)
    }
}

pub fn relative_deviation(a: C64, b: C64) -> f64 {
    let scale = b.norm();
    if scale == 0.0 {
        (a - b).norm()
    } else {
        (a - b).norm() / scale
    }
}

/// External labels of a Compton event; polarization indices are 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComptonStates {
    pub spin_in: Spin,
    pub spin_out: Spin,
    pub pol_in: u8,
    pub pol_out: u8,
}

impl Default for ComptonStates {
    fn default() -> Self {
        ComptonStates { spin_in: Spin::Up, spin_out: Spin::Up, pol_in: 1, pol_out: 1 }
    }
}

/// External spins of a Møller event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MollerSpins {
    pub p1: Spin,
    pub q1: Spin,
    pub p2: Spin,
    pub q2: Spin,
}

impl Default for MollerSpins {
    fn default() -> Self {
        MollerSpins { p1: Spin::Up, q1: Spin::Up, p2: Spin::Up, q2: Spin::Up }
    }
}

fn check_electron(p: &FourVector, m: f64) -> Result<()> {
    let expected = on_shell_energy(p.spatial(), m);
    if !((p.t() - expected).abs() <= SHELL_TOL * expected) {
        return Err(Error::OffShellInput { reason: "electron energy does not match its momentum" });
    }
    Ok(())
}

fn check_photon(k: &FourVector) -> Result<()> {
    let expected = k.spatial().norm();
    if !(expected > 0.0 && (k.t() - expected).abs() <= SHELL_TOL * expected) {
        return Err(Error::OffShellInput { reason: "photon energy does not match its momentum" });
    }
    Ok(())
}

fn check_conservation(incoming: FourVector, outgoing: FourVector) -> Result<()> {
    if !((incoming - outgoing).max_abs() <= SHELL_TOL * incoming.max_abs()) {
        return Err(Error::OffShellInput { reason: "four-momentum is not conserved" });
    }
    Ok(())
}

fn external(p: &FourVector, spin: Spin, cfg: &AmplitudeConfig) -> Result<BiSpinor> {
    u_spinor_normalized(p.spatial(), spin, cfg.constants.m_e, cfg.normalization)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    /// intermediate `q = p + k`
    A,
    /// intermediate `q = p - k'`
    B,
}

/// Photon polarizations already resolved to vectors: `eps_in` for the
/// absorbed photon and `eps_out` for the emitted one (conjugated inside).
#[derive(Debug, Clone, Copy)]
pub struct PhotonStates {
    pub eps_in: PolarizationVector,
    pub eps_out: PolarizationVector,
}

impl PhotonStates {
    pub fn from_indices(kin: &ComptonKinematics, pol_in: u8, pol_out: u8) -> Result<Self> {
        Ok(PhotonStates {
            eps_in: polarization(kin.k.spatial(), pol_in)?,
            eps_out: polarization(kin.k_out.spatial(), pol_out)?,
        })
    }
}

/// Diagram A (absorb `k` first): orderings `M1a` and `M1b`.
pub fn compton_pair_a(
    kin: &ComptonKinematics,
    states: &ComptonStates,
    cfg: &AmplitudeConfig,
) -> Result<AmplitudeResult> {
    let photons = PhotonStates::from_indices(kin, states.pol_in, states.pol_out)?;
    compton_channel(kin, states.spin_in, states.spin_out, &photons, cfg, Channel::A)
}

/// Diagram B (emit `k'` first): orderings `M2a` and `M2b`.
pub fn compton_pair_b(
    kin: &ComptonKinematics,
    states: &ComptonStates,
    cfg: &AmplitudeConfig,
) -> Result<AmplitudeResult> {
    let photons = PhotonStates::from_indices(kin, states.pol_in, states.pol_out)?;
    compton_channel(kin, states.spin_in, states.spin_out, &photons, cfg, Channel::B)
}

pub fn compton_total(
    kin: &ComptonKinematics,
    states: &ComptonStates,
    cfg: &AmplitudeConfig,
) -> Result<AmplitudeResult> {
    let photons = PhotonStates::from_indices(kin, states.pol_in, states.pol_out)?;
    compton_total_with(kin, states.spin_in, states.spin_out, &photons, cfg)
}

/// Both diagrams with explicit polarization vectors.
pub fn compton_total_with(
    kin: &ComptonKinematics,
    spin_in: Spin,
    spin_out: Spin,
    photons: &PhotonStates,
    cfg: &AmplitudeConfig,
) -> Result<AmplitudeResult> {
    let a = compton_channel(kin, spin_in, spin_out, photons, cfg, Channel::A)?;
    let b = compton_channel(kin, spin_in, spin_out, photons, cfg, Channel::B)?;
    let closed_form = a.closed_form + b.closed_form;
    let textbook = a.textbook + b.textbook;
    let mut parts = a.parts;
    parts.extend(b.parts);
    Ok(AmplitudeResult::assemble(Process::Compton, parts, 1.0, a.eta, &kin.total())?
        .with_comparisons(closed_form, textbook))
}

fn compton_channel(
    kin: &ComptonKinematics,
    spin_in: Spin,
    spin_out: Spin,
    photons: &PhotonStates,
    cfg: &AmplitudeConfig,
    channel: Channel,
) -> Result<AmplitudeResult> {
    let m = cfg.constants.m_e;
    check_electron(&kin.p, m)?;
    check_electron(&kin.p_out, m)?;
    check_photon(&kin.k)?;
    check_photon(&kin.k_out)?;
    check_conservation(kin.p + kin.k, kin.p_out + kin.k_out)?;

    let total_p = kin.total();
    let eta = eta(&total_p)?;
    let u_in = external(&kin.p, spin_in, cfg)?;
    let u_out = external(&kin.p_out, spin_out, cfg)?;
    let eps_out = photons.eps_out.conj();
    // `first` acts on u(p), `second` next to ubar(p')
    let (q, first, second, label) = match channel {
        Channel::A => (kin.p + kin.k, photons.eps_in, eps_out, 1),
        Channel::B => (kin.p - kin.k_out, eps_out, photons.eps_in, 2),
    };
    let q3 = q.spatial();
    let q0 = q.t();
    let e_q = on_shell_energy(q3, m);
    let coupling = CouplingFactor::new(&cfg.constants, eta, e_q)?.value;
    let scale = q0.abs().max(e_q);

    let mut parts = Vec::with_capacity(4);
    for s in Spin::BOTH {
        let u_s = u_spinor(q3, s, m)?;
        let absorb = vertex_bilinear(&u_s, &first, &u_in) * coupling;
        let emit = vertex_bilinear(&u_out, &second, &u_s) * coupling;
        let idx = s.index();
        parts.push(DiagramAmplitude::new(format!("M{label}a(s={idx})"), absorb, emit, q0 - e_q, scale)?);
        parts.push(DiagramAmplitude::new(format!("M{label}b(s={idx})"), emit, absorb, -(q0 + e_q), scale)?);
    }

    let g = gamma_set();
    let left = g.slash_complex(&second.components);
    let right = g.slash_complex(&first.components);
    let off_shell = q.norm_sq() - m * m;
    // on-shell completeness (qslash_on + m) = 2 E_q sum_s u_s ubar_s
    let on_shell = spin_sum_closed_form(q3, m, Normalization::Box)?.scale(c(2.0 * e_q));
    let pref = cfg.constants.propagator_prefactor(cfg.constants.volume) * eta * eta / e_q;
    let closed_form = sandwich(&u_out, &(left * on_shell * right), &u_in) * (pref / off_shell);
    let textbook_kernel = g.slash(&q) + Mat4::identity().scale(c(m));
    let textbook = sandwich(&u_out, &(left * textbook_kernel * right), &u_in) / off_shell;

    Ok(AmplitudeResult::assemble(Process::Compton, parts, 1.0, eta, &total_p)?.with_comparisons(closed_form, textbook))
}

/// Møller scattering by single photon exchange `k = p1 - p2`, summed over
/// the two transverse polarizations. Parts alternate ordering A
/// (`E1 - E2 = k0 - E_k`) and ordering B (`-(k0 + E_k)`, photon `-k`).
pub fn moller_total(kin: &MollerKinematics, spins: &MollerSpins, cfg: &AmplitudeConfig) -> Result<AmplitudeResult> {
    let m = cfg.constants.m_e;
    for p in [&kin.p1, &kin.q1, &kin.p2, &kin.q2] {
        check_electron(p, m)?;
    }
    check_conservation(kin.p1 + kin.q1, kin.p2 + kin.q2)?;
    let total_p = kin.total();
    let k = kin.transfer();
    let t = k.norm_sq();
    if !(t.abs() > FORWARD_TOL * total_p.norm_sq()) {
        return Err(Error::ForwardSingularity { t });
    }
    let k3 = k.spatial();
    let e_k = k3.norm();
    if e_k == 0.0 {
        return Err(Error::ForwardSingularity { t });
    }
    let k0 = k.t();
    let eta = eta(&total_p)?;
    let coupling = CouplingFactor::new(&cfg.constants, eta, e_k)?.value;
    let u_p1 = external(&kin.p1, spins.p1, cfg)?;
    let u_q1 = external(&kin.q1, spins.q1, cfg)?;
    let u_p2 = external(&kin.p2, spins.p2, cfg)?;
    let u_q2 = external(&kin.q2, spins.q2, cfg)?;
    let scale = k0.abs().max(e_k);

    let mut parts = Vec::with_capacity(4);
    let mut closed_form = ZERO;
    for alpha in [1u8, 2] {
        let eps = polarization(k3, alpha)?;
        let eps_rev = polarization(-k3, alpha)?;
        let a1 = vertex_bilinear(&u_p2, &eps.conj(), &u_p1) * coupling;
        let a2 = vertex_bilinear(&u_q2, &eps, &u_q1) * coupling;
        let b1 = vertex_bilinear(&u_q2, &eps_rev.conj(), &u_q1) * coupling;
        let b2 = vertex_bilinear(&u_p2, &eps_rev, &u_p1) * coupling;
        parts.push(DiagramAmplitude::new(format!("M1(eps={alpha})"), a1, a2, k0 - e_k, scale)?);
        parts.push(DiagramAmplitude::new(format!("M2(eps={alpha})"), b1, b2, -(k0 + e_k), scale)?);
        closed_form += a1 * a2 * (e_k / t);
    }

    let j1 = vector_current(&u_p2, &u_p1);
    let j2 = vector_current(&u_q2, &u_q1);
    let dot = j1[0] * j2[0] - j1[1] * j2[1] - j1[2] * j2[2] - j1[3] * j2[3];
    let textbook = -dot / t;
    Ok(AmplitudeResult::assemble(Process::Moller, parts, 0.5, eta, &total_p)?.with_comparisons(closed_form, textbook))
}

/// One global constant relating two amplitude series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionalityFit {
    /// Least-squares `c` in `lambda_form ~ c textbook`.
    pub constant: C64,
    /// `max |lambda_form - c textbook| / max |lambda_form|`
    pub max_relative_residual: f64,
    /// `max |r_i - mean(r)| / |mean(r)|` for `r_i = lambda_i / textbook_i`
    pub ratio_spread: f64,
}

pub fn fit_proportionality(lambda_form: &[C64], textbook: &[C64]) -> Option<ProportionalityFit> {
    if lambda_form.is_empty() || lambda_form.len() != textbook.len() {
        return None;
    }
    let num = lambda_form.iter().zip(textbook).fold(ZERO, |acc, (p, t)| acc + t.conj() * p);
    let den: f64 = textbook.iter().map(|t| t.norm_sqr()).sum();
    if den == 0.0 {
        return None;
    }
    let constant = num / den;
    let peak = lambda_form.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let worst = lambda_form.iter().zip(textbook).map(|(p, t)| (p - constant * t).norm()).fold(0.0, f64::max);
    let ratios: Vec<C64> = lambda_form.iter().zip(textbook).map(|(p, t)| p / t).collect();
    let mean = ratios.iter().fold(ZERO, |acc, r| acc + r) / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max) / mean.norm();
    Some(ProportionalityFit {
        constant,
        max_relative_residual: if peak == 0.0 { worst } else { worst / peak },
        ratio_spread: spread,
    })
}

/// A process fixed in its centre-of-mass frame, ready to be boosted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanProcess {
    Compton { photon_energy: f64, theta: f64, states: ComptonStates },
    Moller { e_cm: f64, theta: f64, spins: MollerSpins },
}

impl ScanProcess {
    pub fn process(&self) -> Process {
        match self {
            ScanProcess::Compton { .. } => Process::Compton,
            ScanProcess::Moller { .. } => Process::Moller,
        }
    }

    /// Kinematics boosted by `boost` and evaluated with `cfg` unchanged.
    pub fn evaluate(&self, boost: &Boost, cfg: &AmplitudeConfig) -> Result<AmplitudeResult> {
        let m = cfg.constants.m_e;
        match *self {
            ScanProcess::Compton { photon_energy, theta, states } => {
                compton_total(&compton_kinematics(photon_energy, theta, boost, m)?, &states, cfg)
            }
            ScanProcess::Moller { e_cm, theta, spins } => {
                moller_total(&moller_kinematics(e_cm, theta, boost, m)?, &spins, cfg)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub beta: f64,
    pub eta: f64,
    pub abs_m: f64,
    pub ratio_to_cm: f64,
    pub sqrt_one_minus_beta2: f64,
}

/// Evaluates the process in the frame moving with speed `beta` along
/// `axis`, contracting the mode volume to `V sqrt(1 - beta^2)`.
pub fn scan_row(
    process: &ScanProcess,
    axis: ThreeVector,
    beta: f64,
    cfg: &AmplitudeConfig,
    cm_abs: f64,
) -> Result<ScanRow> {
    let boost = Boost::along(axis, beta)?;
    let contraction = (1.0 - beta * beta).sqrt();
    let mut frame_cfg = *cfg;
    frame_cfg.constants.volume = cfg.constants.volume * contraction;
    let result = process.evaluate(&boost, &frame_cfg)?;
    let abs_m = result.total.norm();
    Ok(ScanRow { beta, eta: result.eta, abs_m, ratio_to_cm: abs_m / cm_abs, sqrt_one_minus_beta2: contraction })
}

pub fn boost_scan(
    process: &ScanProcess,
    axis: ThreeVector,
    betas: &[f64],
    cfg: &AmplitudeConfig,
) -> Result<Vec<ScanRow>> {
    let cm_abs = process.evaluate(&Boost::identity(), cfg)?.total.norm();
    betas.iter().map(|&b| scan_row(process, axis, b, cfg, cm_abs)).collect()
}

/// Invariant `(p1 - p2)^2` of a Møller event.
pub fn momentum_transfer_sq(kin: &MollerKinematics) -> f64 {
    minkowski_dot(&kin.transfer(), &kin.transfer())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn cfg() -> AmplitudeConfig {
        AmplitudeConfig::default()
    }

    #[test]
    fn compton_cm_has_unit_eta_and_matches_closed_form() {
        let kin = compton_kinematics(0.7, 1.1, &Boost::identity(), 1.0).unwrap();
        let a = compton_pair_a(&kin, &ComptonStates::default(), &cfg()).unwrap();
        assert_eq!(a.eta, 1.0);
        assert!(a.frame.is_identity());
        assert!(a.closed_form_deviation() < 1e-12);
        let b = compton_pair_b(&kin, &ComptonStates::default(), &cfg()).unwrap();
        assert!(b.closed_form_deviation() < 1e-12);
        let total = compton_total(&kin, &ComptonStates::default(), &cfg()).unwrap();
        assert!((total.total - a.total - b.total).norm() < 1e-15);
        assert_eq!(total.parts.len(), 8);
    }

    #[test]
    fn reversed_orderings_carry_the_minus_sign() {
        let kin = compton_kinematics(0.7, 1.1, &Boost::identity(), 1.0).unwrap();
        let a = compton_pair_a(&kin, &ComptonStates::default(), &cfg()).unwrap();
        for pair in a.parts.chunks(2) {
            assert!(pair[0].denom > 0.0 && pair[1].denom < 0.0);
            assert_eq!(pair[0].omega1 * pair[0].omega2, pair[1].omega1 * pair[1].omega2);
            assert!((pair[1].value * pair[1].denom - pair[1].omega1 * pair[1].omega2).norm() < 1e-18);
        }
        assert!(a.parts[0].name.starts_with("M1a") && a.parts[1].name.starts_with("M1b"));
    }

    #[test]
    fn u_channel_is_below_mass_shell_for_backscatter() {
        let kin = compton_kinematics(0.9, PI, &Boost::identity(), 1.0).unwrap();
        let q = kin.p - kin.k_out;
        assert!(q.norm_sq() < 1.0);
    }

    #[test]
    fn crossing_maps_channel_a_onto_channel_b() {
        let kin =
            compton_kinematics(0.6, 0.8, &Boost::along(ThreeVector::new(1.0, 1.0, 0.0), 0.3).unwrap(), 1.0).unwrap();
        let ph = PhotonStates::from_indices(&kin, 1, 2).unwrap();
        let b = compton_channel(&kin, Spin::Up, Spin::Down, &ph, &cfg(), Channel::B).unwrap();
        // k -> -k', eps -> eps'*, and back
        let crossed = ComptonKinematics { p: kin.p, k: -kin.k_out, p_out: kin.p_out, k_out: -kin.k };
        let g = gamma_set();
        let u = external(&kin.p, Spin::Up, &cfg()).unwrap();
        let u_out = external(&kin.p_out, Spin::Down, &cfg()).unwrap();
        let q = crossed.p + crossed.k;
        let kernel = g.slash(&q) + Mat4::identity().scale(c(1.0));
        let mut eps_in = ph.eps_out.conj();
        let mut eps_out = ph.eps_in;
        eps_in.wavevector = crossed.k.spatial();
        eps_out.wavevector = crossed.k_out.spatial();
        let crossed_a = sandwich(
            &u_out,
            &(g.slash_complex(&eps_out.conj().components) * kernel * g.slash_complex(&eps_in.components)),
            &u,
        ) / (q.norm_sq() - 1.0);
        assert!(relative_deviation(crossed_a, b.textbook) < 1e-13);
    }

    #[test]
    fn zero_polarization_gives_zero_amplitude() {
        let kin = compton_kinematics(0.6, 0.8, &Boost::identity(), 1.0).unwrap();
        let mut ph = PhotonStates::from_indices(&kin, 1, 1).unwrap();
        ph.eps_in = PolarizationVector::from_components([ZERO; 4], kin.k.spatial());
        let r = compton_total_with(&kin, Spin::Up, Spin::Up, &ph, &cfg()).unwrap();
        assert_eq!(r.total, ZERO);
        assert_eq!(r.closed_form, ZERO);
    }

    #[test]
    fn off_shell_inputs_rejected() {
        let mut kin = compton_kinematics(0.6, 0.8, &Boost::identity(), 1.0).unwrap();
        kin.p.0[0] += 1e-6;
        assert!(matches!(compton_total(&kin, &ComptonStates::default(), &cfg()), Err(Error::OffShellInput { .. })));
        let mut kin = compton_kinematics(0.6, 0.8, &Boost::identity(), 1.0).unwrap();
        kin.k_out = kin.k_out * 1.001;
        assert!(matches!(compton_total(&kin, &ComptonStates::default(), &cfg()), Err(Error::OffShellInput { .. })));
    }

    #[test]
    fn moller_orderings_sum_to_propagator() {
        let kin = moller_kinematics(3.0, 0.9, &Boost::identity(), 1.0).unwrap();
        let r = moller_total(&kin, &MollerSpins::default(), &cfg()).unwrap();
        assert_eq!(r.eta, 1.0);
        assert!(r.closed_form_deviation() < 1e-12);
        let k = kin.transfer();
        let e_k = k.spatial().norm();
        assert!((k.t() * k.t() - e_k * e_k - momentum_transfer_sq(&kin)).abs() < 1e-12);
        let sums = r.ordering_sums();
        for (alpha, sum) in sums.iter().enumerate() {
            let a = &r.parts[2 * alpha];
            let oracle = e_k * a.omega1 * a.omega2 / (k.t() * k.t() - e_k * e_k);
            assert!(relative_deviation(*sum, oracle) < 1e-12);
        }
    }

    #[test]
    fn moller_forward_is_singular() {
        let kin = moller_kinematics(3.0, 0.0, &Boost::identity(), 1.0).unwrap();
        assert!(matches!(moller_total(&kin, &MollerSpins::default(), &cfg()), Err(Error::ForwardSingularity { .. })));
    }

    #[test]
    fn moller_grows_toward_forward_direction() {
        let mut last = 0.0;
        for i in (1..=10).rev() {
            let theta = 0.5 * i as f64 / 10.0;
            let kin = moller_kinematics(3.0, theta, &Boost::identity(), 1.0).unwrap();
            let v = moller_total(&kin, &MollerSpins::default(), &cfg()).unwrap().total.norm();
            assert!(v > last, "theta {theta}");
            last = v;
        }
    }

    #[test]
    fn boost_scan_eta_column() {
        let process = ScanProcess::Moller { e_cm: 3.0, theta: 1.0, spins: MollerSpins::default() };
        let betas = [0.0, 0.3, 0.6, 0.9];
        let rows = boost_scan(&process, ThreeVector::new(0.0, 0.0, 1.0), &betas, &cfg()).unwrap();
        assert_eq!(rows[0].ratio_to_cm, 1.0);
        assert_eq!(rows[0].eta, 1.0);
        for row in &rows {
            assert!((row.eta - row.sqrt_one_minus_beta2).abs() < 1e-12);
        }
    }

    #[test]
    fn proportionality_fit_recovers_constant() {
        let t = [C64::new(1.0, 2.0), C64::new(-0.5, 0.1), C64::new(3.0, -1.0)];
        let k = C64::new(0.3, -0.7);
        let p: Vec<C64> = t.iter().map(|x| x * k).collect();
        let fit = fit_proportionality(&p, &t).unwrap();
        assert!((fit.constant - k).norm() < 1e-15);
        assert!(fit.max_relative_residual < 1e-15 && fit.ratio_spread < 1e-15);
        assert!(fit_proportionality(&p, &t[..2]).is_none());
    }
}
