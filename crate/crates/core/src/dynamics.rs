//! Few-level Schrödinger dynamics and second-order averaging.
//!
//! A [`LevelSystem`] is `H = diag(E) + V` with `V` Hermitian and zero on the
//! diagonal; `V[(j, k)]` is the matrix element `<j|H|k>`. In the interaction
//! frame of `diag(E)` the couplings pick up phases `exp(i (E_j - E_k) t / hbar)`
//! and the second-order average over one period gives the effective
//! Hamiltonian. That average is computed two ways: the closed form
//! `sum_k V_jk V_kl / (E_l - E_k)` over resonant pairs `E_j = E_l`, and direct
//! quadrature of `-(i / 2 hbar T) int int [H(s1), H(s2)]`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::linalg::{c, vector_norm, CMatrix, C64, I, ZERO};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-14;
const NORM_GUARD: f64 = 1e-6;
const MAX_DENOMINATOR: i64 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSystem {
    energies: Vec<f64>,
    couplings: CMatrix,
    hbar: f64,
}

impl LevelSystem {
    pub fn new(energies: Vec<f64>, couplings: CMatrix, hbar: f64) -> Result<Self> {
        let n = energies.len();
        if !(2..=4).contains(&n) {
            return Err(Error::InvalidSystem { reason: "only 2, 3 or 4 levels are supported" });
        }
        if couplings.dim() != n {
            return Err(Error::InvalidSystem { reason: "coupling matrix size differs from number of levels" });
        }
        if energies.iter().any(|e| !e.is_finite()) || couplings.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSystem { reason: "non-finite entry" });
        }
        if (0..n).any(|i| couplings[(i, i)] != ZERO) {
            return Err(Error::InvalidSystem { reason: "couplings must vanish on the diagonal" });
        }
        if !couplings.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::InvalidSystem { reason: "couplings are not Hermitian" });
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidConstant { name: "hbar", value: hbar });
        }
        Ok(LevelSystem { energies, couplings, hbar })
    }

    /// Lambda system: ground levels 1 and 3 at `e1`, excited level 2 at `e2`,
    /// `<2|H|1> = omega1`, `<3|H|2> = omega2`.
    pub fn lambda(e1: f64, e2: f64, omega1: C64, omega2: C64) -> Result<Self> {
        let mut v = CMatrix::zeros(3);
        v[(1, 0)] = omega1;
        v[(0, 1)] = omega1.conj();
        v[(2, 1)] = omega2;
        v[(1, 2)] = omega2.conj();
        Self::new(vec![e1, e2, e1], v, 1.0)
    }

    /// Two levels with `<2|H|1> = omega`.
    pub fn two_level(e1: f64, e2: f64, omega: C64) -> Result<Self> {
        let mut v = CMatrix::zeros(2);
        v[(1, 0)] = omega;
        v[(0, 1)] = omega.conj();
        Self::new(vec![e1, e2], v, 1.0)
    }

    /// Lambda system plus a fourth level coupled only to level 2 with
    /// `<4|H|2> = omega`.
    pub fn lambda_with_pair_level(e1: f64, e2: f64, e4: f64, omega1: C64, omega2: C64, omega: C64) -> Result<Self> {
        let lambda = Self::lambda(e1, e2, omega1, omega2)?;
        let mut v = CMatrix::zeros(4);
        for i in 0..3 {
            for j in 0..3 {
                v[(i, j)] = lambda.couplings[(i, j)];
            }
        }
        v[(3, 1)] = omega;
        v[(1, 3)] = omega.conj();
        Self::new(vec![e1, e2, e1, e4], v, 1.0)
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(self.energies, self.couplings, hbar)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &CMatrix {
        &self.couplings
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn hamiltonian(&self) -> CMatrix {
        let mut h = self.couplings.clone();
        for (i, e) in self.energies.iter().enumerate() {
            h[(i, i)] = c(*e);
        }
        h
    }

    /// Levels `(j, k)`, `j < k`, joined by a nonzero coupling.
    pub fn coupled_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).filter(|&(j, k)| self.couplings[(j, k)] != ZERO).collect()
    }

    /// Common period `T` of the interaction-frame Hamiltonian.
    pub fn period(&self) -> Result<f64> {
        Ok(self.frequency_lattice()?.period())
    }

    /// Expresses every level energy as an integer multiple of a fundamental
    /// angular frequency (per connected component).
    fn frequency_lattice(&self) -> Result<FrequencyLattice> {
        let pairs = self.coupled_pairs();
        if pairs.is_empty() {
            return Err(Error::InvalidSystem { reason: "no couplings to average" });
        }
        let mut omegas = Vec::with_capacity(pairs.len());
        for &(j, k) in &pairs {
            let w = (self.energies[j] - self.energies[k]) / self.hbar;
            if w == 0.0 {
                return Err(Error::DegenerateLevels { a: j + 1, b: k + 1 });
            }
            omegas.push(w);
        }
        let w_min = omegas.iter().fold(f64::INFINITY, |m, w| m.min(w.abs()));
        let mut lcm_den = 1i64;
        for w in &omegas {
            let (_, q) = rational_approx(w.abs() / w_min).ok_or(Error::IncommensurateFrequencies)?;
            lcm_den = lcm(lcm_den, q);
        }
        let fundamental = w_min / lcm_den as f64;
        let n = self.dim();
        let mut level: Vec<Option<i64>> = vec![None; n];
        for start in 0..n {
            if level[start].is_some() {
                continue;
            }
            level[start] = Some(0);
            let mut stack = vec![start];
            while let Some(j) = stack.pop() {
                for &(a, b) in &pairs {
                    let other = if a == j {
                        b
                    } else if b == j {
                        a
                    } else {
                        continue;
                    };
                    if level[other].is_none() {
                        let steps =
                            ((self.energies[other] - self.energies[j]) / (self.hbar * fundamental)).round() as i64;
                        level[other] = Some(level[j].unwrap() + steps);
                        stack.push(other);
                    }
                }
            }
        }
        let multiples = level.into_iter().map(|x| x.unwrap_or(0)).collect();
        Ok(FrequencyLattice { fundamental, multiples, pairs })
    }
}

struct FrequencyLattice {
    fundamental: f64,
    /// `E_j = E_ref + hbar * fundamental * multiples[j]` within a component.
    multiples: Vec<i64>,
    pairs: Vec<(usize, usize)>,
}

impl FrequencyLattice {
    fn period(&self) -> f64 {
        2.0 * PI / self.fundamental
    }

    fn max_multiple(&self) -> i64 {
        self.pairs.iter().map(|&(j, k)| (self.multiples[j] - self.multiples[k]).abs()).max().unwrap_or(1)
    }
}

/// Smallest-denominator `p / q` with `q <= MAX_DENOMINATOR` matching `x`
/// to relative 1e-9.
fn rational_approx(x: f64) -> Option<(i64, i64)> {
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((p / q as f64 - x).abs() <= 1e-9 * x).then_some((p as i64, q))
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// Sampled states of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
}

impl Trajectory {
    /// `|<level|psi(t)>|^2` over the samples (0-based level index).
    pub fn populations(&self, level: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[level].norm_sqr()).collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (vector_norm(s) - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn check_initial(psi0: &[C64], n: usize) -> Result<()> {
    if psi0.len() != n {
        return Err(Error::InvalidSystem { reason: "initial state has wrong dimension" });
    }
    let norm = vector_norm(psi0);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

fn step_count(duration: f64, dt: f64, stride: usize) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep { reason: "time step must be positive" });
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidStep { reason: "duration must be non-negative" });
    }
    if stride == 0 {
        return Err(Error::InvalidStep { reason: "sampling stride must be positive" });
    }
    Ok((duration / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Schrödinger evolution, sampling every step.
pub fn evolve(sys: &LevelSystem, psi0: &[C64], duration: f64, dt: f64) -> Result<Trajectory> {
    evolve_sampled(sys, psi0, duration, dt, 1)
}

/// Schrödinger evolution keeping every `stride`-th step (and the final one).
///
/// The Hamiltonian is time independent, so each step applies the exact
/// propagator `exp(-i H dt / hbar)`; the step count is rounded up so that
/// the last sample lands on `duration`.
pub fn evolve_sampled(sys: &LevelSystem, psi0: &[C64], duration: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    let h = sys.hamiltonian();
    evolve_with(move |_| h.clone(), sys.hbar, psi0, duration, dt, stride, true)
}

/// Evolution under a time-dependent Hamiltonian with the midpoint
/// exponential `exp(-i H(t + dt/2) dt / hbar)` per step.
pub fn evolve_time_dependent(
    h: impl Fn(f64) -> CMatrix,
    hbar: f64,
    psi0: &[C64],
    duration: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    evolve_with(h, hbar, psi0, duration, dt, stride, false)
}

fn evolve_with(
    h: impl Fn(f64) -> CMatrix,
    hbar: f64,
    psi0: &[C64],
    duration: f64,
    dt: f64,
    stride: usize,
    constant: bool,
) -> Result<Trajectory> {
    let n = h(0.0).dim();
    check_initial(psi0, n)?;
    let steps = step_count(duration, dt, stride)?;
    let dt = if steps > 0 { duration / steps as f64 } else { dt };
    let mut times = vec![0.0];
    let mut states = vec![psi0.to_vec()];
    let mut psi = psi0.to_vec();
    let fixed = constant.then(|| h(0.0).scale(-I * (dt / hbar)).expm());
    for step in 1..=steps {
        let t_mid = (step as f64 - 0.5) * dt;
        psi = match &fixed {
            Some(u) => u.apply(&psi),
            None => h(t_mid).scale(-I * (dt / hbar)).expm().apply(&psi),
        };
        let t = step as f64 * dt;
        let drift = (vector_norm(&psi) - 1.0).abs();
        if drift > NORM_GUARD {
            return Err(Error::StepTooLarge { drift, time: t });
        }
        if step % stride == 0 || step == steps {
            times.push(t);
            states.push(psi.clone());
        }
    }
    Ok(Trajectory { times, states })
}

/// Interaction-frame Hamiltonian `H(t)_jk = V_jk exp(i (E_j - E_k) t / hbar)`.
pub fn interaction_frame(sys: &LevelSystem, t: f64) -> CMatrix {
    let e = &sys.energies;
    CMatrix::from_fn(sys.dim(), |j, k| {
        let v = sys.couplings[(j, k)];
        if v == ZERO {
            ZERO
        } else {
            v * (I * ((e[j] - e[k]) * t / sys.hbar)).exp()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub matrix: CMatrix,
    /// Averaging period `2 pi hbar / dE`.
    pub period: f64,
}

/// Second-order average evaluated by the closed form and by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderAverage {
    pub analytic: EffectiveHamiltonian,
    pub numeric: EffectiveHamiltonian,
}

impl SecondOrderAverage {
    /// `max |analytic - numeric| / max |analytic|`
    pub fn relative_deviation(&self) -> f64 {
        let diff = (&self.analytic.matrix - &self.numeric.matrix).max_abs();
        let scale = self.analytic.matrix.max_abs();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

pub fn magnus_second_order(sys: &LevelSystem) -> Result<SecondOrderAverage> {
    let lattice = sys.frequency_lattice()?;
    let period = lattice.period();
    let analytic = averaged_closed_form(sys, &lattice);
    let numeric = averaged_by_quadrature(sys, &lattice);
    Ok(SecondOrderAverage {
        analytic: EffectiveHamiltonian { matrix: analytic, period },
        numeric: EffectiveHamiltonian { matrix: numeric, period },
    })
}

fn averaged_closed_form(sys: &LevelSystem, lattice: &FrequencyLattice) -> CMatrix {
    let n = sys.dim();
    let v = &sys.couplings;
    let e = &sys.energies;
    CMatrix::from_fn(n, |j, l| {
        let mut acc = ZERO;
        for k in 0..n {
            let path = v[(j, k)] * v[(k, l)];
            if path != ZERO && lattice.multiples[j] == lattice.multiples[l] {
                acc += path / (e[l] - e[k]);
            }
        }
        acc
    })
}

fn averaged_by_quadrature(sys: &LevelSystem, lattice: &FrequencyLattice) -> CMatrix {
    let period = lattice.period();
    let panels = 4 * lattice.max_multiple().max(1) as usize;
    let rule = GaussLegendre::new(20);
    let width = period / panels as f64;
    let mut acc = CMatrix::zeros(sys.dim());
    for p in 0..panels {
        let a = p as f64 * width;
        for (s1, w1) in rule.mapped(a, a + width) {
            let h1 = interaction_frame(sys, s1);
            let inner_panels = (s1 / width).ceil().max(1.0) as usize;
            let inner_width = s1 / inner_panels as f64;
            let mut inner = CMatrix::zeros(sys.dim());
            for q in 0..inner_panels {
                let b = q as f64 * inner_width;
                for (s2, w2) in rule.mapped(b, b + inner_width) {
                    let h2 = interaction_frame(sys, s2);
                    inner = &inner + &h2.scale(c(w2));
                }
            }
            // [H(s1), int H(s2)] is linear in the inner integral
            acc = &acc + &h1.commutator(&inner).scale(c(w1));
        }
    }
    acc.scale(-I / (2.0 * sys.hbar * period))
}

/// Second-order effective Hamiltonian of a lambda system, including the
/// level shifts on the diagonal.
pub fn lambda_effective_hamiltonian(omega1: C64, omega2: C64, e1: f64, e2: f64) -> Result<CMatrix> {
    let m = effective_coupling(omega1, omega2, e1, e2)?;
    let d = e1 - e2;
    let mut h = CMatrix::zeros(3);
    h[(0, 0)] = c(omega1.norm_sqr() / d);
    h[(1, 1)] = c(-(omega1.norm_sqr() + omega2.norm_sqr()) / d);
    h[(2, 2)] = c(omega2.norm_sqr() / d);
    h[(2, 0)] = m;
    h[(0, 2)] = m.conj();
    Ok(h)
}

/// `M = omega1 omega2 / (e1 - e2)`
pub fn effective_coupling(omega1: C64, omega2: C64, e1: f64, e2: f64) -> Result<C64> {
    let d = e1 - e2;
    if d.abs() <= f64::EPSILON * e1.abs().max(e2.abs()) {
        return Err(Error::PoleEncountered { denominator: d });
    }
    Ok(omega1 * omega2 / d)
}

/// Shift `|omega|^2 / (e1 - e2)` of level 1 in a two-level system.
pub fn two_level_shift(omega: C64, e1: f64, e2: f64) -> Result<f64> {
    Ok(effective_coupling(omega, omega.conj(), e1, e2)?.re)
}

/// Removes level 4 (coupled only to level 2) and shifts
/// `E2 -> E2 + |omega|^2 / (E2 - E4)`.
pub fn eliminate_pair_level(sys4: &LevelSystem) -> Result<LevelSystem> {
    if sys4.dim() != 4 {
        return Err(Error::InvalidSystem { reason: "elimination needs a four-level system" });
    }
    let v = &sys4.couplings;
    if v[(3, 0)] != ZERO || v[(3, 2)] != ZERO {
        return Err(Error::InvalidSystem { reason: "level 4 must couple only to level 2" });
    }
    let e = &sys4.energies;
    let omega = v[(3, 1)];
    let mut energies = e[..3].to_vec();
    if omega != ZERO {
        energies[1] += two_level_shift(omega, e[1], e[3])?;
    }
    let couplings = CMatrix::from_fn(3, |i, j| v[(i, j)]);
    LevelSystem::new(energies, couplings, sys4.hbar)
}

/// Fits `P(t) = sin^2(rate t)` to the rising edge (P < 1/2) of a transfer
/// curve by least squares through the origin on `asin(sqrt(P))`.
pub fn fit_rabi_rate(times: &[f64], population: &[f64]) -> Option<f64> {
    let (mut stt, mut sty) = (0.0, 0.0);
    let mut used = 0;
    for (&t, &p) in times.iter().zip(population) {
        if p >= 0.5 {
            break;
        }
        if t > 0.0 {
            stt += t * t;
            sty += t * p.max(0.0).sqrt().asin();
            used += 1;
        }
    }
    (used >= 2).then(|| sty / stt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn ground(n: usize) -> Vec<C64> {
        let mut v = vec![ZERO; n];
        v[0] = c(1.0);
        v
    }

    #[test]
    fn validation() {
        // equal off-diagonal entries with a phase are not Hermitian
        let bad = CMatrix::from_fn(2, |i, j| if i != j { C64::new(0.1, 0.2) } else { ZERO });
        assert!(matches!(LevelSystem::new(vec![0.0, 1.0], bad, 1.0), Err(Error::InvalidSystem { .. })));
        let diag = CMatrix::from_fn(2, |i, j| if i == j { c(1.0) } else { ZERO });
        assert!(LevelSystem::new(vec![0.0, 1.0], diag, 1.0).is_err());
        assert!(LevelSystem::new(vec![0.0; 5], CMatrix::zeros(5), 1.0).is_err());
        assert!(LevelSystem::new(vec![0.0; 2], CMatrix::zeros(2), 0.0).is_err());
    }

    #[test]
    fn uncoupled_populations_are_constant() {
        let sys = LevelSystem::new(vec![0.0, 1.3, -0.4], CMatrix::zeros(3), 1.0).unwrap();
        let s = 1.0 / 3.0f64.sqrt();
        let psi0 = vec![c(s), C64::new(0.0, s), c(-s)];
        let traj = evolve(&sys, &psi0, 20.0, 0.1).unwrap();
        for level in 0..3 {
            assert!(traj.populations(level).iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-14));
        }
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let omega = 0.37;
        let sys = LevelSystem::two_level(0.5, 0.5, c(omega)).unwrap();
        let traj = evolve(&sys, &ground(2), 30.0, 0.01).unwrap();
        for (t, p) in traj.times.iter().zip(traj.populations(1)) {
            assert!((p - (omega * t).sin().powi(2)).abs() < 1e-8, "t {t}");
        }
    }

    #[test]
    fn rabi_with_hbar() {
        let sys = LevelSystem::two_level(0.0, 0.0, c(0.2)).unwrap().with_hbar(2.0).unwrap();
        let traj = evolve(&sys, &ground(2), 10.0, 0.05).unwrap();
        let last = *traj.populations(1).last().unwrap();
        assert!((last - (0.2 * 10.0 / 2.0f64).sin().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn random_three_level_is_unitary() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..10 {
            let mut v = CMatrix::zeros(3);
            for (i, j) in [(1, 0), (2, 1), (2, 0)] {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                v[(i, j)] = z;
                v[(j, i)] = z.conj();
            }
            let energies = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let sys = LevelSystem::new(energies, v, 1.0).unwrap();
            let traj = evolve_sampled(&sys, &ground(3), 50.0, 0.05, 100).unwrap();
            assert!(traj.max_norm_drift() < 1e-9);
        }
    }

    #[test]
    fn norm_drift_over_many_steps() {
        let sys = LevelSystem::lambda(0.0, 1.0, C64::new(0.3, 0.1), c(0.25)).unwrap();
        let traj = evolve_sampled(&sys, &ground(3), 1e4, 0.1, 10_000).unwrap();
        assert_eq!(traj.times.len(), 11);
        assert!(traj.max_norm_drift() < 1e-9);
    }

    #[test]
    fn evolve_errors() {
        let sys = LevelSystem::two_level(0.0, 1.0, c(0.1)).unwrap();
        assert!(matches!(evolve(&sys, &[c(1.0), c(1.0)], 1.0, 0.1), Err(Error::NotNormalized { .. })));
        assert!(matches!(evolve(&sys, &ground(2), 1.0, 0.0), Err(Error::InvalidStep { .. })));
        assert!(evolve(&sys, &ground(3), 1.0, 0.1).is_err());
    }

    #[test]
    fn midpoint_stepper_matches_constant_propagator() {
        let sys = LevelSystem::lambda(0.0, 2.0, c(0.2), c(0.3)).unwrap();
        let h = sys.hamiltonian();
        let a = evolve_time_dependent(|_| h.clone(), 1.0, &ground(3), 5.0, 0.01, 50).unwrap();
        let b = evolve_sampled(&sys, &ground(3), 5.0, 0.01, 50).unwrap();
        assert_eq!(a.times.len(), b.times.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(x.iter().zip(y).all(|(p, q)| (p - q).norm() < 1e-11));
        }
    }

    #[test]
    fn interaction_frame_examples() {
        let (o1, o2) = (C64::new(0.3, -0.1), C64::new(0.2, 0.4));
        let sys = LevelSystem::lambda(0.5, 2.0, o1, o2).unwrap();
        assert_eq!(interaction_frame(&sys, 0.0), *sys.couplings());
        let period = sys.period().unwrap();
        assert!((period - 2.0 * PI / 1.5).abs() < 1e-14);
        let diff = &interaction_frame(&sys, period) - &interaction_frame(&sys, 0.0);
        assert!(diff.max_abs() < 1e-12);
        let t = 0.77;
        let h = interaction_frame(&sys, t);
        assert!((h[(1, 0)] - o1 * (I * 1.5 * t).exp()).norm() < 1e-15);
        assert!((h[(2, 1)] - o2 * (-I * 1.5 * t).exp()).norm() < 1e-15);
        assert!((0..3).all(|i| h[(i, i)] == ZERO));
    }

    #[test]
    fn interaction_frame_generates_schrodinger_evolution() {
        // phi(t) = exp(i E t) psi(t) must follow H(t)
        let sys = LevelSystem::lambda(0.0, 1.0, c(0.2), C64::new(0.1, 0.15)).unwrap();
        let t_end = 2.0 * sys.period().unwrap();
        let phi =
            evolve_time_dependent(|t| interaction_frame(&sys, t), 1.0, &ground(3), t_end, 1e-3, 1_000_000).unwrap();
        let psi = evolve(&sys, &ground(3), t_end, t_end).unwrap();
        let last_phi = phi.states.last().unwrap();
        let last_psi = psi.states.last().unwrap();
        for (j, e) in sys.energies().iter().enumerate() {
            let back = last_psi[j] * (I * e * t_end).exp();
            assert!((back - last_phi[j]).norm() < 1e-6);
        }
    }

    #[test]
    fn effective_coupling_examples() {
        let m = effective_coupling(c(0.1), c(0.1), 0.0, 10.0).unwrap();
        assert!((m - c(-1e-3)).norm() < 1e-18);
        assert_eq!(effective_coupling(c(0.4), ZERO, 0.0, 1.0).unwrap(), ZERO);
        let a = effective_coupling(C64::new(0.1, 0.2), c(0.3), 1.0, 4.0).unwrap();
        let b = effective_coupling(C64::new(0.1, 0.2), c(0.3), 4.0, 1.0).unwrap();
        assert_eq!(a, -b);
        assert!(matches!(effective_coupling(c(1.0), c(1.0), 2.0, 2.0), Err(Error::PoleEncountered { .. })));
    }

    #[test]
    fn magnus_lambda_matches_effective_hamiltonian() {
        let sys = LevelSystem::lambda(0.0, 10.0, c(0.1), c(0.1)).unwrap();
        let avg = magnus_second_order(&sys).unwrap();
        assert!((avg.analytic.matrix[(2, 0)] - c(-1e-3)).norm() < 1e-15);
        assert!(avg.relative_deviation() < 1e-10, "{}", avg.relative_deviation());
        let closed = lambda_effective_hamiltonian(c(0.1), c(0.1), 0.0, 10.0).unwrap();
        assert!((&closed - &avg.analytic.matrix).max_abs() < 1e-16);
        assert!(avg.analytic.matrix.is_hermitian(1e-12) && avg.numeric.matrix.is_hermitian(1e-12));
    }

    #[test]
    fn magnus_with_vanishing_second_coupling() {
        let sys = LevelSystem::lambda(0.0, 3.0, C64::new(0.2, 0.05), ZERO).unwrap();
        let avg = magnus_second_order(&sys).unwrap();
        assert_eq!(avg.analytic.matrix[(2, 0)], ZERO);
        assert!(avg.numeric.matrix[(2, 0)].norm() < 1e-15);
        assert!(avg.analytic.matrix[(0, 0)].norm() > 0.0);
    }

    #[test]
    fn magnus_two_level_shift() {
        let omega = C64::new(0.3, -0.2);
        let sys = LevelSystem::two_level(1.0, 4.0, omega).unwrap();
        let avg = magnus_second_order(&sys).unwrap();
        let shift = omega.norm_sqr() / (1.0 - 4.0);
        assert!((avg.analytic.matrix[(0, 0)] - c(shift)).norm() < 1e-15);
        assert!((avg.analytic.matrix[(1, 1)] + c(shift)).norm() < 1e-15);
        assert!(avg.relative_deviation() < 1e-10);
        assert_eq!(two_level_shift(omega, 1.0, 4.0).unwrap(), shift);
    }

    #[test]
    fn magnus_commensurate_four_level() {
        let sys = LevelSystem::lambda_with_pair_level(0.0, 1.0, 3.0, c(0.1), C64::new(0.05, 0.02), c(0.2)).unwrap();
        let avg = magnus_second_order(&sys).unwrap();
        assert!((avg.analytic.period - 2.0 * PI).abs() < 1e-12);
        assert!(avg.relative_deviation() < 1e-10, "{}", avg.relative_deviation());
    }

    #[test]
    fn magnus_rejects_degenerate_and_incommensurate() {
        let sys = LevelSystem::two_level(1.0, 1.0, c(0.1)).unwrap();
        assert_eq!(magnus_second_order(&sys), Err(Error::DegenerateLevels { a: 1, b: 2 }));
        let sys = LevelSystem::lambda_with_pair_level(0.0, 1.0, 1.0 + 2.0f64.sqrt(), c(0.1), c(0.1), c(0.1)).unwrap();
        assert_eq!(magnus_second_order(&sys), Err(Error::IncommensurateFrequencies));
    }

    #[test]
    fn elimination_examples() {
        let sys4 = LevelSystem::lambda_with_pair_level(0.0, 2.0, -3.0, c(0.1), c(0.1), ZERO).unwrap();
        let reduced = eliminate_pair_level(&sys4).unwrap();
        assert_eq!(reduced.energies(), &[0.0, 2.0, 0.0]);
        assert_eq!(reduced.couplings(), &CMatrix::from_fn(3, |i, j| sys4.couplings()[(i, j)]));

        let sys4 = LevelSystem::lambda_with_pair_level(0.0, 2.0, -3.0, c(0.1), c(0.1), c(0.1)).unwrap();
        let reduced = eliminate_pair_level(&sys4).unwrap();
        assert!((reduced.energies()[1] - 2.002).abs() < 1e-15);

        let sys4 = LevelSystem::lambda_with_pair_level(0.0, 2.0, 2.0, c(0.1), c(0.1), c(0.1)).unwrap();
        assert!(matches!(eliminate_pair_level(&sys4), Err(Error::PoleEncountered { .. })));
        let sys3 = LevelSystem::lambda(0.0, 2.0, c(0.1), c(0.1)).unwrap();
        assert!(eliminate_pair_level(&sys3).is_err());
    }

    #[test]
    fn rabi_fit_recovers_rate() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let pops: Vec<f64> = times.iter().map(|t| (0.42 * t).sin().powi(2)).collect();
        assert!((fit_rabi_rate(&times, &pops).unwrap() - 0.42).abs() < 1e-12);
        assert_eq!(fit_rabi_rate(&times, &vec![0.0; 200]), Some(0.0));
    }
}
