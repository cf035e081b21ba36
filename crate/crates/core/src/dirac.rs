//! Dirac-representation gamma matrices, positive-energy spinors, photon
//! polarization vectors and the vertex bilinears built from them.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::linalg::{c, inner, Col4, Mat4, C64, I, ONE, ZERO};
use crate::lorentz::{on_shell_energy, Boost, FourVector, ThreeVector};
use crate::{Error, Result};

/// Spin label `s` of `u_s(p)`: `Up` is s = 1, `Down` is s = 2, quantized
/// along z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn from_index(s: u8) -> Option<Spin> {
        match s {
            1 => Some(Spin::Up),
            2 => Some(Spin::Down),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Spin::Up => 1,
            Spin::Down => 2,
        }
    }

    fn pauli_spinor(self) -> [C64; 2] {
        match self {
            Spin::Up => [ONE, ZERO],
            Spin::Down => [ZERO, ONE],
        }
    }
}

/// Spinor normalization convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `u^dagger u = 1`; spin sum `(qslash + m) / (2 E_q)`.
    #[default]
    Box,
    /// `ubar u = 1`; spin sum `(qslash + m) / (2 m)`.
    Covariant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSet {
    pub gamma: [Mat4; 4],
}

impl GammaSet {
    pub fn dirac() -> Self {
        let sigma = pauli();
        let mut gamma = [Mat4::zero(); 4];
        gamma[0] = Mat4::diag([ONE, ONE, c(-1.0), c(-1.0)]);
        for (i, s) in sigma.iter().enumerate() {
            let g = &mut gamma[i + 1].0;
            for r in 0..2 {
                for col in 0..2 {
                    g[r][col + 2] = s[r][col];
                    g[r + 2][col] = -s[r][col];
                }
            }
        }
        GammaSet { gamma }
    }

    /// `gamma^mu a_mu` for a real contravariant four-vector.
    pub fn slash(&self, a: &FourVector) -> Mat4 {
        self.slash_complex(&a.0.map(c))
    }

    /// `gamma^mu a_mu` for complex contravariant components.
    pub fn slash_complex(&self, a: &Col4) -> Mat4 {
        self.gamma[0].scale(a[0]) - self.gamma[1].scale(a[1]) - self.gamma[2].scale(a[2]) - self.gamma[3].scale(a[3])
    }

    /// `alpha^i = gamma^0 gamma^i`
    pub fn alpha(&self, i: usize) -> Mat4 {
        self.gamma[0] * self.gamma[i]
    }
}

/// The Dirac-representation gamma matrices.
pub fn gamma_set() -> GammaSet {
    GammaSet::dirac()
}

fn pauli() -> [[[C64; 2]; 2]; 3] {
    [[[ZERO, ONE], [ONE, ZERO]], [[ZERO, -I], [I, ZERO]], [[ONE, ZERO], [ZERO, c(-1.0)]]]
}

/// `sigma . v`
fn sigma_dot(v: &ThreeVector) -> [[C64; 2]; 2] {
    let s = pauli();
    let mut out = [[ZERO; 2]; 2];
    for (k, sk) in s.iter().enumerate() {
        for r in 0..2 {
            for col in 0..2 {
                out[r][col] += sk[r][col] * v[k];
            }
        }
    }
    out
}

/// Positive-energy solution `u_s(p)` together with its labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiSpinor {
    pub components: Col4,
    pub momentum: ThreeVector,
    pub spin: Spin,
    pub mass: f64,
}

impl BiSpinor {
    pub fn energy(&self) -> f64 {
        on_shell_energy(self.momentum, self.mass)
    }

    pub fn four_momentum(&self) -> FourVector {
        FourVector::on_shell(self.momentum, self.mass)
    }

    /// Row vector `u^dagger gamma^0`, stored conjugated back as a column so
    /// that `ubar M v = inner(bar, M v)`.
    pub fn bar_column(&self) -> Col4 {
        let u = self.components;
        [u[0], u[1], -u[2], -u[3]]
    }

    /// `ubar u`
    pub fn scalar_density(&self) -> f64 {
        inner(&self.bar_column(), &self.components).re
    }

    pub fn norm_sq(&self) -> f64 {
        inner(&self.components, &self.components).re
    }
}

/// Box-normalized `u_s(p) = N (chi_s ; sigma.p / (E + m) chi_s)` with
/// `N = sqrt((E + m) / (2 E))`.
pub fn u_spinor(p3: ThreeVector, spin: Spin, m: f64) -> Result<BiSpinor> {
    if m == 0.0 && p3.is_zero() {
        return Err(Error::MasslessAtRest);
    }
    let energy = on_shell_energy(p3, m);
    let norm = ((energy + m) / (2.0 * energy)).sqrt();
    let chi = spin.pauli_spinor();
    let sp = sigma_dot(&p3);
    let mut components = [ZERO; 4];
    for r in 0..2 {
        components[r] = chi[r] * norm;
        components[r + 2] = (sp[r][0] * chi[0] + sp[r][1] * chi[1]) * (norm / (energy + m));
    }
    Ok(BiSpinor { components, momentum: p3, spin, mass: m })
}

/// `u_s(p)` in the requested normalization.
pub fn u_spinor_normalized(p3: ThreeVector, spin: Spin, m: f64, normalization: Normalization) -> Result<BiSpinor> {
    let mut u = u_spinor(p3, spin, m)?;
    if normalization == Normalization::Covariant {
        if !(m > 0.0) {
            return Err(Error::MasslessCovariant);
        }
        let scale = (u.energy() / m).sqrt();
        u.components = u.components.map(|x| x * scale);
    }
    Ok(u)
}

/// `sum_s u_s ubar_s` by explicit outer products.
pub fn spin_sum(p3: ThreeVector, m: f64) -> Result<Mat4> {
    spin_sum_normalized(p3, m, Normalization::Box)
}

pub fn spin_sum_normalized(p3: ThreeVector, m: f64, normalization: Normalization) -> Result<Mat4> {
    let g0 = gamma_set().gamma[0];
    let mut acc = Mat4::zero();
    for s in Spin::BOTH {
        let u = u_spinor_normalized(p3, s, m, normalization)?;
        acc = acc + Mat4::outer(&u.components, &u.components) * g0;
    }
    Ok(acc)
}

/// Completeness relation `(qslash_on + m) / (2 E_q)` with the on-shell
/// `q_on = (E_q, q)`; `2 m` replaces `2 E_q` under covariant normalization.
pub fn spin_sum_closed_form(p3: ThreeVector, m: f64, normalization: Normalization) -> Result<Mat4> {
    if m == 0.0 && p3.is_zero() {
        return Err(Error::MasslessAtRest);
    }
    let q_on = FourVector::on_shell(p3, m);
    let denom = match normalization {
        Normalization::Box => 2.0 * q_on.t(),
        Normalization::Covariant if m > 0.0 => 2.0 * m,
        Normalization::Covariant => return Err(Error::MasslessCovariant),
    };
    Ok((gamma_set().slash(&q_on) + Mat4::identity().scale(c(m))).scale(c(1.0 / denom)))
}

/// Photon polarization `epsilon_alpha(k)`, contravariant components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationVector {
    pub components: Col4,
    pub wavevector: ThreeVector,
    /// `alpha` in {1, 2}; 0 for hand-built vectors.
    pub index: u8,
}

impl PolarizationVector {
    /// Wraps arbitrary components without checking gauge conditions.
    pub fn from_components(components: Col4, wavevector: ThreeVector) -> Self {
        PolarizationVector { components, wavevector, index: 0 }
    }

    pub fn conj(&self) -> Self {
        PolarizationVector { components: self.components.map(|x| x.conj()), ..*self }
    }

    pub fn spatial_re(&self) -> ThreeVector {
        ThreeVector::new(self.components[1].re, self.components[2].re, self.components[3].re)
    }
}

/// Real transverse pair in Coulomb gauge. The seed is the coordinate axis
/// along which `k` has the smallest component (first axis on ties);
/// `eps1` is the seed with its `k` projection removed and `eps2 = khat x eps1`.
pub fn polarization_pair(k3: ThreeVector) -> Result<(PolarizationVector, PolarizationVector)> {
    let kn = k3.norm();
    if kn == 0.0 {
        return Err(Error::ZeroWavevector);
    }
    let khat = k3 * (1.0 / kn);
    let mut axis = 0;
    for i in 1..3 {
        if khat[i].abs() < khat[axis].abs() {
            axis = i;
        }
    }
    let mut seed = ThreeVector::ZERO;
    seed.0[axis] = 1.0;
    let e1 = seed - khat * seed.dot(&khat);
    let e1 = e1 * (1.0 / e1.norm());
    let e2 = khat.cross(&e1);
    let wrap = |v: ThreeVector, index| PolarizationVector {
        components: [ZERO, c(v[0]), c(v[1]), c(v[2])],
        wavevector: k3,
        index,
    };
    Ok((wrap(e1, 1), wrap(e2, 2)))
}

/// `epsilon_alpha(k)` for `alpha` in {1, 2}.
pub fn polarization(k3: ThreeVector, alpha: u8) -> Result<PolarizationVector> {
    let (e1, e2) = polarization_pair(k3)?;
    Ok(if alpha == 2 { e2 } else { e1 })
}

/// `ubar_b (gamma^nu eps_nu) u_a`
pub fn vertex_bilinear(ub: &BiSpinor, eps: &PolarizationVector, ua: &BiSpinor) -> C64 {
    sandwich(ub, &gamma_set().slash_complex(&eps.components), ua)
}

/// `ubar_b M u_a`
pub fn sandwich(ub: &BiSpinor, m: &Mat4, ua: &BiSpinor) -> C64 {
    inner(&ub.bar_column(), &m.apply(&ua.components))
}

/// Vector current `ubar_b gamma^mu u_a`, contravariant.
pub fn vector_current(ub: &BiSpinor, ua: &BiSpinor) -> Col4 {
    let g = gamma_set();
    core::array::from_fn(|mu| sandwich(ub, &g.gamma[mu], ua))
}

/// Spinor representation `S = cosh(w/2) + sinh(w/2) nhat.alpha` of an
/// active boost with rapidity `w`. Preserves `ubar u`, not `u^dagger u`.
pub fn spinor_boost_matrix(boost: &Boost) -> Mat4 {
    if boost.is_identity() {
        return Mat4::identity();
    }
    let g = gamma_set();
    let beta = boost.beta();
    let nhat = beta * (1.0 / beta.norm());
    let half = 0.5 * boost.rapidity();
    let mut gen = Mat4::zero();
    for i in 0..3 {
        gen = gen + g.alpha(i + 1).scale(c(nhat[i]));
    }
    Mat4::identity().scale(c(half.cosh())) + gen.scale(c(half.sinh()))
}

pub fn boost_spinor(boost: &Boost, u: &BiSpinor) -> BiSpinor {
    let s = spinor_boost_matrix(boost);
    BiSpinor { components: s.apply(&u.components), momentum: boost.apply(&u.four_momentum()).spatial(), ..*u }
}
