//! Pair-creation energy shift of the exchanged photon.
//!
//! The photon level couples to electron-positron pair levels through
//! `Omega = eta1 e c hbar sqrt(1/(V eps0 (E_p + E_{p+k}))) ubar(p+k) eps.gamma u(p)`
//! with `eta1 = m / E_{p+k}`. Each pair level shifts the photon level by
//! `|Omega|^2 / (E_photon - E_pair)`; the two pair orderings give
//! `|Omega_A|^2 / (E_k - S) - |Omega_C|^2 / (E_k + S)` with `S = E_p + E_{p+k}`.
//! The density falls as `|p|^-4`, so `sum_p -> V/(2 pi)^3 int d^3p` converges
//! with a `1/Lambda` tail.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::amplitudes::{moller_total, AmplitudeConfig, MollerSpins};
use crate::dirac::{gamma_set, polarization_pair, sandwich, u_spinor, BiSpinor, PolarizationVector, Spin};
use crate::kinematics::MollerKinematics;
use crate::linalg::{Mat4, C64, ZERO};
use crate::lorentz::{eta, on_shell_energy, Boost, FourVector, ThreeVector};
use crate::quadrature::GaussLegendre;
use crate::units::Constants;
use crate::{Error, Result};

/// Relative change allowed when the grid is doubled.
pub const GRID_TOLERANCE: f64 = 1e-3;
/// Default first-order validity guard `|E2'| / |E1 - E2|`.
pub const CORRECTION_GUARD: f64 = 0.1;

/// Which of the two pair couplings to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairVariant {
    /// `ubar(p+k) eps(k).gamma u(p)`: photon absorbed into the pair.
    Creation,
    /// `ubar(p) eps*(k).gamma u(p+k)`: pair created together with the photon.
    Conjugate,
}

/// `eta1 = sqrt(P.P) / P0` for the outgoing electron `P = (E_{p+k}, p + k)`.
pub fn pair_eta(p3: ThreeVector, k3: ThreeVector, m: f64) -> Result<f64> {
    let pk = p3 + k3;
    eta(&FourVector::on_shell(pk, m))
}

/// Two-level coupling for the pair state `(p, p+k)`.
/// `spin_p` labels `u(p)` and `spin_pk` labels `u(p+k)`.
pub fn pair_coupling(
    p3: ThreeVector,
    k3: ThreeVector,
    spin_p: Spin,
    spin_pk: Spin,
    alpha: u8,
    variant: PairVariant,
    constants: &Constants,
) -> Result<C64> {
    if k3.is_zero() {
        return Err(Error::ZeroWavevector);
    }
    let m = constants.m_e;
    let eps = if alpha == 2 { polarization_pair(k3)?.1 } else { polarization_pair(k3)?.0 };
    let u_p = u_spinor(p3, spin_p, m)?;
    let u_pk = u_spinor(p3 + k3, spin_pk, m)?;
    let g = gamma_set();
    let bilinear = match variant {
        PairVariant::Creation => sandwich(&u_pk, &g.slash_complex(&eps.components), &u_p),
        PairVariant::Conjugate => sandwich(&u_p, &g.slash_complex(&eps.conj().components), &u_pk),
    };
    let s = u_p.energy() + u_pk.energy();
    Ok(bilinear * pair_prefactor(p3, k3, s, constants)?)
}

/// `eta1 e c hbar sqrt(1 / (V eps0 S))`
fn pair_prefactor(p3: ThreeVector, k3: ThreeVector, s: f64, constants: &Constants) -> Result<f64> {
    Ok(pair_eta(p3, k3, constants.m_e)? * constants.vertex_prefactor(constants.volume, s))
}

/// Pair coupling with `sqrt(1/(V eps0 S)) -> sqrt(P0/P) sqrt(1/(V eps0 S))`,
/// where `P0` is the first-order momentum factor in the centre-of-mass frame.
#[allow(clippy::too_many_arguments)]
pub fn corrected_pair_coupling(
    p3: ThreeVector,
    k3: ThreeVector,
    spin_p: Spin,
    spin_pk: Spin,
    alpha: u8,
    variant: PairVariant,
    constants: &Constants,
    p_cm: f64,
    p_here: f64,
) -> Result<C64> {
    Ok(pair_coupling(p3, k3, spin_p, spin_pk, alpha, variant, constants)? * rescale_factor(p_cm, p_here)?.sqrt())
}

/// `P0 / P`, defined only when both factors are nonzero with equal sign.
pub fn rescale_factor(p_cm: f64, p_here: f64) -> Result<f64> {
    if !(p_cm * p_here > 0.0) {
        return Err(Error::SignMismatch { cm: p_cm, here: p_here });
    }
    Ok(p_cm / p_here)
}

/// One evaluation of the shift density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairShiftSample {
    pub p3: ThreeVector,
    pub k3: ThreeVector,
    pub eta1: f64,
    /// `sum_{s,s'} (1/2) sum_alpha |ubar(p+k) eps.gamma u(p)|^2`
    pub spinor_factor: f64,
    pub shift_density: f64,
}

/// Fixed per-photon data shared by all density evaluations.
struct PhotonContext {
    k3: ThreeVector,
    photon_energy: f64,
    slashes: [Mat4; 2],
    slashes_conj: [Mat4; 2],
    constants: Constants,
}

impl PhotonContext {
    fn new(k3: ThreeVector, photon_energy: f64, constants: &Constants) -> Result<Self> {
        if k3.is_zero() {
            return Err(Error::ZeroWavevector);
        }
        if !(photon_energy >= 0.0) {
            return Err(Error::NonpositiveEnergy { energy: photon_energy });
        }
        let (e1, e2) = polarization_pair(k3)?;
        let g = gamma_set();
        let slash = |e: &PolarizationVector| g.slash_complex(&e.components);
        Ok(PhotonContext {
            k3,
            photon_energy,
            slashes: [slash(&e1), slash(&e2)],
            slashes_conj: [slash(&e1.conj()), slash(&e2.conj())],
            constants: *constants,
        })
    }

    fn sample(&self, p3: ThreeVector) -> Result<PairShiftSample> {
        let m = self.constants.m_e;
        let spinors =
            |q: ThreeVector| -> Result<[BiSpinor; 2]> { Ok([u_spinor(q, Spin::Up, m)?, u_spinor(q, Spin::Down, m)?]) };
        let u_p = spinors(p3)?;
        let u_pk = spinors(p3 + self.k3)?;
        let s = u_p[0].energy() + u_pk[0].energy();
        if self.photon_energy >= s {
            return Err(Error::RealPairThreshold { photon_energy: self.photon_energy, threshold: s });
        }
        let eta1 = pair_eta(p3, self.k3, m)?;
        let pref = pair_prefactor(p3, self.k3, s, &self.constants)?;
        let (mut creation, mut conjugate) = (0.0, 0.0);
        for a in &u_p {
            for b in &u_pk {
                for alpha in 0..2 {
                    creation += 0.5 * sandwich(b, &self.slashes[alpha], a).norm_sqr();
                    conjugate += 0.5 * sandwich(a, &self.slashes_conj[alpha], b).norm_sqr();
                }
            }
        }
        let pref2 = pref * pref;
        let e_k = self.photon_energy;
        let shift_density = pref2 * creation / (e_k - s) - pref2 * conjugate / (e_k + s);
        Ok(PairShiftSample { p3, k3: self.k3, eta1, spinor_factor: creation, shift_density })
    }
}

/// Spin-summed, polarization-averaged shift contribution of the pair
/// states at `p`. `photon_energy` is the energy of the photon level
/// (normally `|k|`).
pub fn shift_density(
    p3: ThreeVector,
    k3: ThreeVector,
    photon_energy: f64,
    constants: &Constants,
) -> Result<PairShiftSample> {
    PhotonContext::new(k3, photon_energy, constants)?.sample(p3)
}

/// Product grid: Gauss-Legendre radial panels (octaves below the cutoff,
/// each split `panels_per_octave` times), Gauss-Legendre in `cos theta`
/// about `k` and uniform in `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub radial_nodes: usize,
    pub panels_per_octave: usize,
    pub theta_nodes: usize,
    pub phi_nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { radial_nodes: 8, panels_per_octave: 1, theta_nodes: 12, phi_nodes: 4 }
    }
}

impl GridSpec {
    /// Every dimension doubled.
    pub fn refined(&self) -> Self {
        GridSpec {
            radial_nodes: self.radial_nodes,
            panels_per_octave: 2 * self.panels_per_octave,
            theta_nodes: 2 * self.theta_nodes,
            phi_nodes: 2 * self.phi_nodes,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radial_nodes == 0 || self.panels_per_octave == 0 || self.theta_nodes == 0 || self.phi_nodes == 0 {
            return Err(Error::InvalidStep { reason: "grid dimensions must be positive" });
        }
        Ok(())
    }
}

struct AngularRule {
    /// unit directions and weights (summing to 4 pi)
    points: Vec<(ThreeVector, f64)>,
}

impl AngularRule {
    fn new(ctx: &PhotonContext, grid: &GridSpec) -> Result<Self> {
        let (e1, e2) = polarization_pair(ctx.k3)?;
        let (x, y) = (e1.spatial_re(), e2.spatial_re());
        let z = ctx.k3 * (1.0 / ctx.k3.norm());
        let theta = GaussLegendre::new(grid.theta_nodes);
        let dphi = 2.0 * PI / grid.phi_nodes as f64;
        let mut points = Vec::with_capacity(grid.theta_nodes * grid.phi_nodes);
        for (cos_t, w) in theta.mapped(-1.0, 1.0) {
            let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
            for j in 0..grid.phi_nodes {
                let phi = (j as f64 + 0.5) * dphi;
                let n = x * (sin_t * phi.cos()) + y * (sin_t * phi.sin()) + z * cos_t;
                points.push((n, w * dphi));
            }
        }
        Ok(AngularRule { points })
    }

    /// `int dOmega density(|p| n)`
    fn integrate(&self, ctx: &PhotonContext, radius: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (n, w) in &self.points {
            acc += w * ctx.sample(*n * radius)?.shift_density;
        }
        Ok(acc)
    }
}

/// Cumulative shift at successive cutoffs plus large-momentum diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub cutoff: f64,
    /// `Lambda / 2^j`, ascending, ending at `Lambda`.
    pub cutoffs: Vec<f64>,
    /// Shift integrated up to each cutoff.
    pub partial_sums: Vec<f64>,
    /// Estimated remainder beyond each cutoff: the integral up to `Lambda`
    /// minus the partial sum, plus a power-law tail beyond `Lambda`.
    pub tail_estimates: Vec<f64>,
    /// Log-log slope of the angle-integrated density over `[Lambda/100, Lambda]`.
    pub fitted_slope: f64,
    /// `E2'` integrated up to `Lambda`.
    pub shift: f64,
    /// Same integral on the doubled grid.
    pub refined_shift: f64,
    pub refinement_change: f64,
    pub grid: GridSpec,
}

impl ConvergenceReport {
    /// `shift` plus the extrapolated tail beyond the cutoff.
    pub fn extrapolated(&self) -> f64 {
        self.shift + self.tail_estimates.last().copied().unwrap_or(0.0)
    }

    /// Tail estimate at the listed cutoff closest to `cutoff`.
    pub fn tail_at(&self, cutoff: f64) -> Option<f64> {
        let idx = self.cutoffs.iter().position(|c| (c / cutoff - 1.0).abs() < 1e-12)?;
        Some(self.tail_estimates[idx])
    }
}

/// Photon energy at which real pairs appear for wavevector `k`.
pub fn pair_threshold(k3: ThreeVector, m: f64) -> f64 {
    (k3.norm_sq() + 4.0 * m * m).sqrt()
}

/// Total shift `E2' = V/(2 pi)^3 int_{|p| < Lambda} d^3p density(p)`.
pub fn total_shift(
    k3: ThreeVector,
    photon_energy: f64,
    cutoff: f64,
    grid: &GridSpec,
    constants: &Constants,
) -> Result<ConvergenceReport> {
    grid.validate()?;
    let ctx = PhotonContext::new(k3, photon_energy, constants)?;
    let m = constants.m_e;
    let minimum = 10.0 * m.max(k3.norm());
    if !(cutoff > minimum) {
        return Err(Error::CutoffTooSmall { cutoff, minimum });
    }
    let threshold = pair_threshold(k3, m);
    if photon_energy >= threshold {
        return Err(Error::RealPairThreshold { photon_energy, threshold });
    }

    let (cutoffs, partial_sums) = radial_ladder(&ctx, cutoff, grid)?;
    let shift = *partial_sums.last().unwrap();
    let refined_shift = *radial_ladder(&ctx, cutoff, &grid.refined())?.1.last().unwrap();
    let refinement_change = (shift - refined_shift).abs() / refined_shift.abs();
    if !(refinement_change <= GRID_TOLERANCE) {
        return Err(Error::GridTooCoarse { relative_change: refinement_change, tolerance: GRID_TOLERANCE });
    }

    let angular = AngularRule::new(&ctx, grid)?;
    let fitted_slope = slope_with(&ctx, &angular, cutoff / 100.0, cutoff, 21)?;
    let measure = constants.volume / (8.0 * PI * PI * PI);
    let g_top = angular.integrate(&ctx, cutoff)?;
    // int_L^inf p^2 g(L) (p/L)^s dp for s < -3
    let beyond = if fitted_slope < -3.0 { measure * g_top * cutoff.powi(3) / (-fitted_slope - 3.0) } else { f64::NAN };
    let tail_estimates = partial_sums.iter().map(|s| shift - s + beyond).collect();

    Ok(ConvergenceReport {
        cutoff,
        cutoffs,
        partial_sums,
        tail_estimates,
        fitted_slope,
        shift,
        refined_shift,
        refinement_change,
        grid: *grid,
    })
}

/// Octave-aligned panels below `cutoff`; returns the cutoffs and the
/// cumulative integral at each.
fn radial_ladder(ctx: &PhotonContext, cutoff: f64, grid: &GridSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let angular = AngularRule::new(ctx, grid)?;
    let rule = GaussLegendre::new(grid.radial_nodes);
    let floor = ctx.constants.m_e.max(ctx.k3.norm());
    let mut bounds = Vec::new();
    let mut b = cutoff;
    while b > floor {
        bounds.push(b);
        b *= 0.5;
    }
    bounds.push(b);
    bounds.reverse();
    let measure = ctx.constants.volume / (8.0 * PI * PI * PI);
    let mut acc = 0.0;
    let mut lower = 0.0;
    let mut partial = Vec::with_capacity(bounds.len());
    for &upper in &bounds {
        let width = (upper - lower) / grid.panels_per_octave as f64;
        for j in 0..grid.panels_per_octave {
            let a = lower + j as f64 * width;
            for (r, w) in rule.mapped(a, a + width) {
                acc += w * measure * r * r * angular.integrate(ctx, r)?;
            }
        }
        partial.push(acc);
        lower = upper;
    }
    Ok((bounds, partial))
}

fn slope_with(ctx: &PhotonContext, angular: &AngularRule, p_min: f64, p_max: f64, samples: usize) -> Result<f64> {
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let n = samples.max(2);
    for i in 0..n {
        let x = p_min.ln() + (p_max / p_min).ln() * i as f64 / (n - 1) as f64;
        let y = angular.integrate(ctx, x.exp())?.abs().ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let nf = n as f64;
    Ok((nf * sxy - sx * sy) / (nf * sxx - sx * sx))
}

/// Least-squares log-log slope of the angle-integrated density on
/// `samples` log-spaced radii in `[p_min, p_max]`.
pub fn radial_slope(
    k3: ThreeVector,
    photon_energy: f64,
    p_min: f64,
    p_max: f64,
    samples: usize,
    grid: &GridSpec,
    constants: &Constants,
) -> Result<f64> {
    grid.validate()?;
    let ctx = PhotonContext::new(k3, photon_energy, constants)?;
    let angular = AngularRule::new(&ctx, grid)?;
    slope_with(&ctx, &angular, p_min, p_max, samples)
}

/// Base, first-order and exact Møller amplitudes with the photon level
/// shifted by `E2'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedAmplitude {
    /// `(1/2) sum Omega1 Omega2 / dE`
    pub base: C64,
    /// `(1/2) sum Omega1 Omega2 E2' / dE^2`, summed ordering by ordering.
    pub correction: C64,
    /// `P = (E2' / E_k) (k0^2 + E_k^2) / (k0^2 - E_k^2)`
    pub p_factor: f64,
    /// `(1/2) sum Omega1 Omega2 / (dE - E2')`
    pub exact: C64,
}

impl CorrectedAmplitude {
    pub fn first_order(&self) -> C64 {
        self.base + self.correction
    }

    /// `|exact - (base + correction)|`
    pub fn remainder(&self) -> f64 {
        (self.exact - self.first_order()).norm()
    }
}

/// `P` for photon energy `E_k = |p1 - p2|` and shift `shift`.
pub fn p_factor(kin: &MollerKinematics, shift: f64) -> f64 {
    let k = kin.transfer();
    let e_k = k.spatial().norm();
    let k0 = k.t();
    shift / e_k * (k0 * k0 + e_k * e_k) / (k0 * k0 - e_k * e_k)
}

pub fn corrected_amplitude(
    kin: &MollerKinematics,
    spins: &MollerSpins,
    cfg: &AmplitudeConfig,
    shift: f64,
    guard: f64,
) -> Result<CorrectedAmplitude> {
    let base = moller_total(kin, spins, cfg)?;
    let min_gap = base.parts.iter().map(|d| d.denom.abs()).fold(f64::INFINITY, f64::min);
    let ratio = shift.abs() / min_gap;
    if !(ratio <= guard) {
        return Err(Error::CorrectionTooLarge { ratio, guard });
    }
    let (mut correction, mut exact) = (ZERO, ZERO);
    for d in &base.parts {
        let product = d.omega1 * d.omega2;
        let shifted = d.denom - shift;
        if shifted == 0.0 {
            return Err(Error::PoleEncountered { denominator: shifted });
        }
        correction += product * (shift / (d.denom * d.denom));
        exact += product / shifted;
    }
    let w = base.ordering_weight;
    Ok(CorrectedAmplitude {
        base: base.total,
        correction: correction * w,
        p_factor: p_factor(kin, shift),
        exact: exact * w,
    })
}

/// Photon self-energy shift for the exchanged momentum of a Møller event.
pub fn moller_shift(
    kin: &MollerKinematics,
    cutoff: f64,
    grid: &GridSpec,
    constants: &Constants,
) -> Result<ConvergenceReport> {
    let k3 = kin.transfer().spatial();
    total_shift(k3, k3.norm(), cutoff, grid, constants)
}

/// `P` here and in the centre-of-mass frame, each with its own shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PFactors {
    pub here: f64,
    pub cm: f64,
    /// `P0 / P`, the squared coupling rescale.
    pub rescale: f64,
}

/// Recomputes the shift and `P` after boosting the event to its
/// centre-of-mass frame. Already in that frame the same numbers are reused,
/// so the rescale is exactly one.
pub fn p_factors(kin: &MollerKinematics, cutoff: f64, grid: &GridSpec, constants: &Constants) -> Result<PFactors> {
    let here = p_factor(kin, moller_shift(kin, cutoff, grid, constants)?.shift);
    let total = kin.total();
    let cm = if total.spatial().is_zero() {
        here
    } else {
        let cm_kin = kin.boosted(&Boost::to_rest_frame_of(&total)?);
        p_factor(&cm_kin, moller_shift(&cm_kin, cutoff, grid, constants)?.shift)
    };
    Ok(PFactors { here, cm, rescale: rescale_factor(cm, here)? })
}

/// Smallest on-shell pair energy `E_p + E_{p+k}` over all `p`.
pub fn minimal_pair_energy(k3: ThreeVector, m: f64) -> f64 {
    2.0 * on_shell_energy(k3 * 0.5, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::moller_kinematics;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn k() -> ThreeVector {
        ThreeVector::new(0.1, -0.2, 0.3)
    }

    #[test]
    fn eta1_matches_lorentz_eta() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let p = ThreeVector::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let s = shift_density(p, k(), k().norm(), &Constants::default()).unwrap();
            let e = on_shell_energy(p + k(), 1.0);
            assert_eq!(s.eta1, eta(&FourVector::on_shell(p + k(), 1.0)).unwrap());
            assert!((s.eta1 - 1.0 / e).abs() < 1e-15);
        }
    }

    #[test]
    fn coupling_is_linear_in_charge() {
        let base = Constants::default();
        let double = Constants { e: 2.0 * base.e, ..base };
        let p = ThreeVector::new(0.4, 0.1, -0.3);
        let a = pair_coupling(p, k(), Spin::Up, Spin::Down, 1, PairVariant::Creation, &base).unwrap();
        let b = pair_coupling(p, k(), Spin::Up, Spin::Down, 1, PairVariant::Creation, &double).unwrap();
        assert!((b - a * 2.0).norm() < 1e-16);
    }

    #[test]
    fn variants_have_equal_modulus() {
        let p = ThreeVector::new(0.4, 0.1, -0.3);
        for s in Spin::BOTH {
            for t in Spin::BOTH {
                for alpha in [1, 2] {
                    let a = pair_coupling(p, k(), s, t, alpha, PairVariant::Creation, &Constants::default()).unwrap();
                    let b = pair_coupling(p, k(), s, t, alpha, PairVariant::Conjugate, &Constants::default()).unwrap();
                    assert!((a.norm() - b.norm()).abs() < 1e-16);
                }
            }
        }
        assert_eq!(
            pair_coupling(p, ThreeVector::ZERO, Spin::Up, Spin::Up, 1, PairVariant::Creation, &Constants::default()),
            Err(Error::ZeroWavevector)
        );
    }

    #[test]
    fn density_negative_below_threshold() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..200 {
            let p =
                ThreeVector::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let kk = ThreeVector::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let d = shift_density(p, kk, kk.norm(), &Constants::default()).unwrap();
            assert!(d.shift_density < 0.0);
        }
        assert!(shift_density(ThreeVector::ZERO, k(), 0.0, &Constants::default()).unwrap().shift_density.is_finite());
        let over = shift_density(ThreeVector::ZERO, k(), 10.0, &Constants::default());
        assert!(matches!(over, Err(Error::RealPairThreshold { .. })));
    }

    #[test]
    fn density_matches_bracket_form() {
        // with |Omega_A| = |Omega_C| the two orderings combine to
        // -2 S |Omega|^2 / (S^2 - E_k^2)
        let p = ThreeVector::new(1.3, -0.2, 0.7);
        let kk = k();
        let c = Constants::default();
        let d = shift_density(p, kk, kk.norm(), &c).unwrap();
        let s = on_shell_energy(p, 1.0) + on_shell_energy(p + kk, 1.0);
        let omega2 = d.spinor_factor * d.eta1 * d.eta1 * c.e * c.e / s;
        let expected = -2.0 * s * omega2 / (s * s - kk.norm_sq());
        assert!((d.shift_density - expected).abs() < 1e-14 * expected.abs());
    }

    #[test]
    fn shift_converges_with_cutoff() {
        let c = Constants::default();
        let grid = GridSpec::default();
        let report = total_shift(k(), k().norm(), 800.0, &grid, &c).unwrap();
        assert!(report.shift < 0.0);
        assert!(report.partial_sums.windows(2).all(|w| w[1] <= w[0]));
        assert!(report.refinement_change < GRID_TOLERANCE);
        assert!((report.fitted_slope + 4.0).abs() < 0.2, "{}", report.fitted_slope);
        let ratio = report.tail_at(400.0).unwrap() / report.tail_at(200.0).unwrap();
        assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn total_shift_errors() {
        let c = Constants::default();
        let grid = GridSpec::default();
        assert!(matches!(total_shift(k(), k().norm(), 5.0, &grid, &c), Err(Error::CutoffTooSmall { .. })));
        assert!(matches!(total_shift(k(), 3.0, 100.0, &grid, &c), Err(Error::RealPairThreshold { .. })));
        let coarse = GridSpec { radial_nodes: 1, panels_per_octave: 1, theta_nodes: 1, phi_nodes: 1 };
        assert!(matches!(total_shift(k(), k().norm(), 100.0, &coarse, &c), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn corrected_amplitude_limits() {
        let kin = moller_kinematics(3.0, 1.0, &Boost::identity(), 1.0).unwrap();
        let cfg = AmplitudeConfig::default();
        let zero = corrected_amplitude(&kin, &MollerSpins::default(), &cfg, 0.0, CORRECTION_GUARD).unwrap();
        assert_eq!(zero.correction, ZERO);
        assert_eq!(zero.exact, zero.base);
        let shift = -0.01;
        let r = corrected_amplitude(&kin, &MollerSpins::default(), &cfg, shift, CORRECTION_GUARD).unwrap();
        assert!(((r.correction - r.base * r.p_factor).norm()) < 1e-12 * r.correction.norm());
        let too_big = corrected_amplitude(&kin, &MollerSpins::default(), &cfg, 5.0, CORRECTION_GUARD);
        assert!(matches!(too_big, Err(Error::CorrectionTooLarge { .. })));
    }

    #[test]
    fn p_factor_rescale_is_one_in_cm() {
        let kin = moller_kinematics(3.0, 1.0, &Boost::identity(), 1.0).unwrap();
        let f = p_factors(&kin, 200.0, &GridSpec::default(), &Constants::default()).unwrap();
        assert_eq!(f.rescale, 1.0);
        assert_eq!(rescale_factor(1.0, -1.0), Err(Error::SignMismatch { cm: 1.0, here: -1.0 }));
    }

    #[test]
    fn threshold_is_minimal_pair_energy() {
        let kk = ThreeVector::new(0.0, 0.0, 3.0);
        assert!((pair_threshold(kk, 1.0) - minimal_pair_energy(kk, 1.0)).abs() < 1e-14);
    }
}
