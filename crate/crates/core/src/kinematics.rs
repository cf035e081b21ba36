//! On-shell two-body configurations for the worked processes.
//!
//! Both generators build the event in the centre-of-mass frame with the
//! incoming momenta along the z axis and scattering in the xz plane, then
//! apply the requested boost to every momentum.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::lorentz::{on_shell_energy, Boost, FourVector, ThreeVector};
use crate::{Error, Result};

/// `e(p) + gamma(k) -> e(p_out) + gamma(k_out)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComptonKinematics {
    pub p: FourVector,
    pub k: FourVector,
    pub p_out: FourVector,
    pub k_out: FourVector,
}

impl ComptonKinematics {
    pub fn boosted(&self, boost: &Boost) -> Self {
        ComptonKinematics {
            p: boost.apply(&self.p),
            k: boost.apply(&self.k),
            p_out: boost.apply(&self.p_out),
            k_out: boost.apply(&self.k_out),
        }
    }

    /// `p + k - p_out - k_out`
    pub fn residual(&self) -> FourVector {
        self.p + self.k - self.p_out - self.k_out
    }

    pub fn total(&self) -> FourVector {
        self.p + self.k
    }
}

/// `e(p1) + e(q1) -> e(p2) + e(q2)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollerKinematics {
    pub p1: FourVector,
    pub q1: FourVector,
    pub p2: FourVector,
    pub q2: FourVector,
}

impl MollerKinematics {
    pub fn boosted(&self, boost: &Boost) -> Self {
        MollerKinematics {
            p1: boost.apply(&self.p1),
            q1: boost.apply(&self.q1),
            p2: boost.apply(&self.p2),
            q2: boost.apply(&self.q2),
        }
    }

    pub fn residual(&self) -> FourVector {
        self.p1 + self.q1 - self.p2 - self.q2
    }

    pub fn total(&self) -> FourVector {
        self.p1 + self.q1
    }

    /// Exchanged momentum `p1 - p2`.
    pub fn transfer(&self) -> FourVector {
        self.p1 - self.p2
    }
}

/// Compton event with centre-of-mass photon energy `photon_energy`,
/// scattering angle `theta` (radians) and electron mass `mass`.
pub fn compton_kinematics(photon_energy: f64, theta: f64, boost: &Boost, mass: f64) -> Result<ComptonKinematics> {
    if !(photon_energy > 0.0) {
        return Err(Error::NonpositiveEnergy { energy: photon_energy });
    }
    let kz = ThreeVector::new(0.0, 0.0, photon_energy);
    let kz_out =
        if theta == 0.0 { kz } else { ThreeVector::new(photon_energy * theta.sin(), 0.0, photon_energy * theta.cos()) };
    let e_p = on_shell_energy(kz, mass);
    let cm = ComptonKinematics {
        p: FourVector::from_parts(e_p, -kz),
        k: FourVector::from_parts(photon_energy, kz),
        p_out: FourVector::from_parts(e_p, -kz_out),
        k_out: FourVector::from_parts(photon_energy, kz_out),
    };
    Ok(cm.boosted(boost))
}

/// Elastic Møller event at total centre-of-mass energy `e_cm`.
pub fn moller_kinematics(e_cm: f64, theta: f64, boost: &Boost, mass: f64) -> Result<MollerKinematics> {
    let threshold = 2.0 * mass;
    if !(e_cm > threshold) {
        return Err(Error::BelowThreshold { e_cm, threshold });
    }
    let energy = 0.5 * e_cm;
    let p = (energy * energy - mass * mass).sqrt();
    let axis = ThreeVector::new(0.0, 0.0, p);
    let out = if theta == 0.0 { axis } else { ThreeVector::new(p * theta.sin(), 0.0, p * theta.cos()) };
    let cm = MollerKinematics {
        p1: FourVector::from_parts(energy, axis),
        q1: FourVector::from_parts(energy, -axis),
        p2: FourVector::from_parts(energy, out),
        q2: FourVector::from_parts(energy, -out),
    };
    Ok(cm.boosted(boost))
}
