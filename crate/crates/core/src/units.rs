use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Fine-structure constant used for the natural-unit default charge.
pub const ALPHA: f64 = 1.0 / 137.035999;

/// Physical constants entering the interaction couplings.
///
/// Kinematics are always carried in energy units (`p c`, `m c^2`); these
/// constants only scale the coupling prefactors. The default is natural
/// units with the electron mass as the energy unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub hbar: f64,
    pub c: f64,
    pub eps0: f64,
    pub e: f64,
    pub m_e: f64,
    /// Mode volume `V`.
    pub volume: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { hbar: 1.0, c: 1.0, eps0: 1.0, e: charge_from_alpha(ALPHA), m_e: 1.0, volume: 1.0 }
    }
}

/// `e = sqrt(4 pi alpha)` in Heaviside-Lorentz natural units.
pub fn charge_from_alpha(alpha: f64) -> f64 {
    (4.0 * PI * alpha).sqrt()
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hbar", self.hbar),
            ("c", self.c),
            ("eps0", self.eps0),
            ("e", self.e),
            ("m_e", self.m_e),
            ("V", self.volume),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConstant { name, value });
            }
        }
        Ok(())
    }

    /// `e c hbar sqrt(1 / (V eps0 E))`: the vertex prefactor without `eta`.
    pub fn vertex_prefactor(&self, volume: f64, energy: f64) -> f64 {
        self.e * self.c * self.hbar * (1.0 / (volume * self.eps0 * energy)).sqrt()
    }

    /// `hbar^2 e^2 c^2 / (V eps0)`, the common factor of the closed forms.
    pub fn propagator_prefactor(&self, volume: f64) -> f64 {
        self.hbar * self.hbar * self.e * self.e * self.c * self.c / (volume * self.eps0)
    }
}
